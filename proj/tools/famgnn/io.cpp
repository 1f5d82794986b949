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


#include "io.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace famgnn::cli
{

#ifndef FAMGNN_VERSION
#define FAMGNN_VERSION "unknown"
#endif

void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
    {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.flush();
        if (!out)
        {
            throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill)
{
    std::ostringstream out;
    fill(out);
    write_atomic(path, out.str());
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data)
{
    write_text(dir / "pedigree.csv", [&](std::ostream& out) { write_pedigree(out, data.population); });
    write_text(dir / "longitudinal.csv", [&](std::ostream& out) { write_longitudinal(out, data.tracks); });
}

Dataset read_dataset(const std::filesystem::path& dir)
{
    auto open = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in)
        {
            throw LoadError(fmt::format("cannot open {}", p.string()));
        }
        return in;
    };
    Dataset d;
    const auto pedigree = dir / "pedigree.csv";
    const auto longitudinal = dir / "longitudinal.csv";
    try
    {
        std::ifstream in = open(pedigree);
        d.population = read_pedigree(in);
    }
    catch (const LoadError& e)
    {
        throw LoadError(fmt::format("{}: {}", pedigree.string(), e.what()));
    }
    try
    {
        std::ifstream in = open(longitudinal);
        d.tracks = read_longitudinal(in);
    }
    catch (const LoadError& e)
    {
        throw LoadError(fmt::format("{}: {}", longitudinal.string(), e.what()));
    }
    return d;
}

std::filesystem::path dataset_dir(double h2, int replicate)
{
    return std::filesystem::path(fmt::format("h2_{}", h2)) / fmt::format("rep_{}", replicate);
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& config,
                    const std::vector<std::pair<std::string, std::string>>& inputs)
{
    write_text(dir / "manifest.ini", [&](std::ostream& out) {
        out << "[manifest]\n";
        out << "command = " << command << '\n';
        out << "config_hash = " << config_hash(config) << '\n';
        for (const auto& [key, value] : inputs)
        {
            out << key << " = " << value << '\n';
        }
        out << "version = " << FAMGNN_VERSION << "\n\n";
        out << canonical_text(config);
    });
}

std::vector<std::string> run_tasks(int n, int jobs, const std::function<void(int)>& task)
{
    std::vector<std::string> errors(static_cast<std::size_t>(std::max(n, 0)));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++)
        {
            try
            {
                task(i);
            }
            catch (const std::exception& e)
            {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min(jobs, n));
    if (workers == 1)
    {
        worker();
        return errors;
    }
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
    {
        pool.emplace_back(worker);
    }
    pool.clear();  // joins
    return errors;
}

}  // namespace famgnn::cli
