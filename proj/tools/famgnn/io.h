/*
 * Copyright 2026 The famgnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "config.h"

namespace famgnn::cli
{

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes a text file built by `fill` atomically.
void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill);

/// pedigree.csv and longitudinal.csv inside `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
/// Throws LoadError naming the file on a missing or malformed file.
Dataset read_dataset(const std::filesystem::path& dir);

/// Directory name of one sweep cell, e.g. "h2_0.7/rep_1".
std::filesystem::path dataset_dir(double h2, int replicate);

/// Canonical config plus a [manifest] section; loadable as a config.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& config,
                    const std::vector<std::pair<std::string, std::string>>& inputs = {});

/**
 * Runs task(i) for i in [0, n) on up to `jobs` threads. Each task's error is
 * captured rather than propagated; the returned strings are empty on success.
 */
std::vector<std::string> run_tasks(int n, int jobs, const std::function<void(int)>& task);

}  // namespace famgnn::cli
