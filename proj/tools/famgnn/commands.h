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
#include <memory>
#include <optional>

#include <spdlog/logger.h>

#include "config.h"

namespace famgnn::cli
{

enum ExitCode : int
{
    kExitOk = 0,
    kExitPartial = 1,
    kExitConfig = 2,
};

struct RunContext
{
    ExperimentConfig config;
    std::filesystem::path out;
    int jobs = 1;
    std::optional<std::filesystem::path> data;    // a single dataset directory
    std::optional<std::filesystem::path> models;  // directory written by `train`
    std::optional<std::filesystem::path> model;   // one model archive
    std::shared_ptr<spdlog::logger> log;
};

int run_simulate(const RunContext& ctx);
int run_train(const RunContext& ctx);
int run_evaluate(const RunContext& ctx);
int run_ablate(const RunContext& ctx);
int run_design_study(const RunContext& ctx);
int run_explain(const RunContext& ctx);

}  // namespace famgnn::cli
