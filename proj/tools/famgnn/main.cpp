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


#include <array>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.h"
#include "famgnn/errors.h"

namespace
{

using famgnn::cli::RunContext;

struct Options
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    int jobs = 1;
    std::string data;
    std::string models;
    std::string model;
    bool quiet = false;
};

void add_common(CLI::App& sub, Options& o)
{
    sub.add_option("--config", o.config, "INI configuration file");
    sub.add_option("--seed", o.seed, "Master seed (overrides [run] seed)");
    sub.add_option("--out", o.out, "Output directory");
    sub.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub.add_option("--data", o.data, "Dataset directory written by simulate");
    sub.add_flag("--quiet", o.quiet, "Only log warnings and errors");
}

int dispatch(const std::string& command, const Options& o)
{
    static const std::map<std::string, std::function<int(const RunContext&)>> table{
        {"simulate", famgnn::cli::run_simulate},   {"train", famgnn::cli::run_train},
        {"evaluate", famgnn::cli::run_evaluate},   {"ablate", famgnn::cli::run_ablate},
        {"design-study", famgnn::cli::run_design_study}, {"explain", famgnn::cli::run_explain},
    };
    auto log = spdlog::stderr_color_mt("famgnn");
    log->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    log->set_level(o.quiet ? spdlog::level::warn : spdlog::level::info);
    try
    {
        RunContext ctx;
        ctx.config = o.config.empty() ? famgnn::cli::default_config() : famgnn::cli::load_config(o.config);
        if (o.seed)
        {
            ctx.config.seed = *o.seed;
        }
        ctx.out = o.out;
        ctx.jobs = o.jobs;
        ctx.log = log;
        if (!o.data.empty())
        {
            ctx.data = o.data;
            ctx.config.data_root = o.data;  // recorded so the manifest alone reproduces the run
        }
        if (!o.models.empty())
        {
            ctx.models = o.models;
        }
        if (!o.model.empty())
        {
            ctx.model = o.model;
        }
        std::filesystem::create_directories(ctx.out);
        return table.at(command)(ctx);
    }
    catch (const famgnn::ConfigError& e)
    {
        log->error("configuration error: {}", e.what());
        return famgnn::cli::kExitConfig;
    }
    catch (const famgnn::ParameterError& e)
    {
        log->error("invalid parameter: {}", e.what());
        return famgnn::cli::kExitConfig;
    }
    catch (const std::exception& e)
    {
        log->error("{}", e.what());
        return famgnn::cli::kExitPartial;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Family-graph disease risk models: simulation, training and explanation"};
    app.require_subcommand(1);
    Options o;
    std::string command;
    const std::array<std::pair<const char*, const char*>, 6> commands{{
        {"simulate", "Simulate pedigrees and longitudinal tracks for every sweep cell"},
        {"train", "Train the configured models on one dataset"},
        {"evaluate", "Score trained models on the test split with MC dropout"},
        {"ablate", "Train and score every model across the heritability sweep"},
        {"design-study", "Grid over edge mode, convolution, pooling and learning rate"},
        {"explain", "Explain a trained graph model and run the feature-selection comparison"},
    }};
    for (const auto& [name, description] : commands)
    {
        CLI::App* sub = app.add_subcommand(name, description);
        add_common(*sub, o);
        if (std::string_view(name) == "evaluate")
        {
            sub->add_option("--models", o.models, "Directory written by train (default: --out)");
        }
        if (std::string_view(name) == "explain")
        {
            sub->add_option("--model", o.model, "Model archive to explain")->required();
        }
        sub->callback([&command, name] { command = name; });
    }
    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return famgnn::cli::kExitConfig;
    }
    return dispatch(command, o);
}
