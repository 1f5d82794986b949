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


#include "commands.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <mutex>
#include <random>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include "io.h"

namespace famgnn::cli
{

namespace
{

namespace fs = std::filesystem;

constexpr std::uint64_t kStageExplainTargets = 141;

struct Cell
{
    double h2 = 0.0;
    int replicate = 0;
};

std::vector<Cell> sweep_cells(const ExperimentConfig& c)
{
    std::vector<Cell> cells;
    for (double h2 : c.heritabilities())
    {
        for (int r = 0; r < c.replicates; ++r)
        {
            cells.push_back({h2, r});
        }
    }
    return cells;
}

std::string dataset_name(const Cell& cell)
{
    return fmt::format("h2_{}", cell.h2);
}

/// Label of the dataset a single-dataset command ran on.
std::string dataset_label(const RunContext& ctx, const Cell& cell)
{
    const std::string& root = ctx.config.data_root;
    return root.empty() ? dataset_name(cell) : fs::path(root).lexically_normal().generic_string();
}

/// Reads the cell's dataset from disk when one is configured, else simulates it.
Dataset obtain_dataset(const RunContext& ctx, const Cell& cell)
{
    if (ctx.data)
    {
        return read_dataset(*ctx.data);
    }
    const ExperimentConfig& c = ctx.config;
    if (!c.data_root.empty())
    {
        const fs::path root(c.data_root);
        const fs::path nested = root / dataset_dir(cell.h2, cell.replicate);
        return read_dataset(fs::exists(nested) ? nested : root);
    }
    return simulate_dataset(c.dataset_params(cell.h2, cell.replicate), c.longitudinal);
}

std::uint64_t cell_seed(const ExperimentConfig& c, const Cell& cell)
{
    return c.dataset_params(cell.h2, cell.replicate).seed;
}

std::vector<double> cohort_labels(const Cohort& cohort)
{
    std::vector<double> y;
    y.reserve(cohort.graphs.size());
    for (const FamilyGraph& g : cohort.graphs)
    {
        y.push_back(g.label);
    }
    return y;
}

Split make_split(const Cohort& cohort, const ExperimentConfig& c, std::uint64_t seed)
{
    SplitSpec spec = c.split;
    spec.seed = seed;
    return split_dataset(cohort_labels(cohort), spec);
}

RunOptions run_options(const ExperimentConfig& c, std::uint64_t seed, int mc_samples)
{
    RunOptions o;
    o.train = c.train;
    o.train.seed = seed;
    o.model_seed = seed;
    o.mc_samples = mc_samples;
    o.mc_seed = seed;
    return o;
}

ModelConfig with_architecture(ModelConfig m, Architecture a)
{
    m.architecture = a;
    return m;
}

void write_predictions(const fs::path& path, const Predictions& p)
{
    write_text(path, [&](std::ostream& out) {
        out << "target_id,label,score\n";
        for (std::size_t i = 0; i < p.target_ids.size(); ++i)
        {
            fmt::print(out, "{},{},{:.10g}\n", p.target_ids[i], p.labels[i], p.model()[i]);
        }
    });
}

std::vector<MetricRow> evaluation_rows(const std::string& model, const std::string& dataset, const Evaluation& e)
{
    return {{model, dataset, "auc_roc", summarize({e.auc_roc})},
            {model, dataset, "auc_prc", summarize({e.auc_prc})},
            {model, dataset, "mcc", summarize({e.mcc})}};
}

std::vector<MetricRow> mc_rows(const std::string& model, const std::string& dataset, const McDropoutResult& r)
{
    return {{model, dataset, "auc_roc", r.auc_roc}, {model, dataset, "auc_prc", r.auc_prc}, {model, dataset, "mcc", r.mcc}};
}

int finish(const RunContext& ctx, const std::string& command, int failures)
{
    std::vector<std::pair<std::string, std::string>> inputs;
    if (ctx.models)
    {
        inputs.emplace_back("models", ctx.models->generic_string());
    }
    if (ctx.model)
    {
        inputs.emplace_back("model", ctx.model->generic_string());
    }
    write_manifest(ctx.out, command, ctx.config, inputs);
    if (failures > 0)
    {
        ctx.log->warn("{} finished with {} failure(s)", command, failures);
        return kExitPartial;
    }
    return kExitOk;
}

int count_failures(const RunContext& ctx, const std::vector<std::string>& errors, const std::vector<std::string>& names)
{
    int failures = 0;
    for (std::size_t i = 0; i < errors.size(); ++i)
    {
        if (!errors[i].empty())
        {
            ctx.log->error("{}: {}", names[i], errors[i]);
            ++failures;
        }
    }
    return failures;
}

}  // namespace

// ---------------------------------------------------------------------------

int run_simulate(const RunContext& ctx)
{
    const ExperimentConfig& c = ctx.config;
    const std::vector<Cell> cells = sweep_cells(c);
    const bool nested = cells.size() > 1;
    struct Stats
    {
        std::uint64_t seed = 0;
        int individuals = 0;
        int cases = 0;
    };
    std::vector<Stats> stats(cells.size());
    std::vector<std::string> names;
    for (const Cell& cell : cells)
    {
        names.push_back(dataset_dir(cell.h2, cell.replicate).string());
    }
    const auto errors = run_tasks(static_cast<int>(cells.size()), ctx.jobs, [&](int i) {
        const Cell& cell = cells[static_cast<std::size_t>(i)];
        const SimParams params = c.dataset_params(cell.h2, cell.replicate);
        const Dataset d = simulate_dataset(params, c.longitudinal);
        const fs::path dir = nested ? ctx.out / dataset_dir(cell.h2, cell.replicate) : ctx.out;
        write_dataset(dir, d);
        Stats& s = stats[static_cast<std::size_t>(i)];
        s.seed = params.seed;
        s.individuals = d.population.size();
        for (const Individual& ind : d.population.individuals())
        {
            s.cases += ind.case_status;
        }
        ctx.log->info("simulated {} ({} individuals)", names[static_cast<std::size_t>(i)], s.individuals);
    });
    const int failures = count_failures(ctx, errors, names);
    write_text(ctx.out / "datasets.csv", [&](std::ostream& out) {
        out << "path,h2,replicate,seed,individuals,cases\n";
        for (std::size_t i = 0; i < cells.size(); ++i)
        {
            if (errors[i].empty())
            {
                fmt::print(out, "{},{},{},{},{},{}\n", nested ? names[i] : ".", cells[i].h2, cells[i].replicate,
                           stats[i].seed, stats[i].individuals, stats[i].cases);
            }
        }
    });
    return finish(ctx, "simulate", failures);
}

// ---------------------------------------------------------------------------

int run_train(const RunContext& ctx)
{
    const ExperimentConfig& c = ctx.config;
    const Cell cell{c.simulation.h2, 0};
    const std::uint64_t seed = cell_seed(c, cell);
    const Dataset data = obtain_dataset(ctx, cell);
    const Cohort cohort = build_cohort(data.population, data.tracks, c.rules, c.edge_mode);
    const Split split = make_split(cohort, c, seed);
    const std::vector<ModelChoice> models = c.resolve_models(data.tracks.n_features() > 1);
    ctx.log->info("cohort of {} targets ({} cases); split {}/{}/{}", cohort.size(), cohort.n_cases(),
                  split.train.size(), split.val.size(), split.test.size());

    struct Result
    {
        ModelRun run;
    };
    std::vector<Result> results(models.size());
    std::vector<std::string> names;
    for (const ModelChoice& m : models)
    {
        names.push_back(m.label);
    }
    const auto errors = run_tasks(static_cast<int>(models.size()), ctx.jobs, [&](int i) {
        const ModelChoice& choice = models[static_cast<std::size_t>(i)];
        std::optional<Model> model;
        ModelRun run = run_model(cohort, split, with_architecture(c.model, choice.architecture),
                                 run_options(c, seed, 0), &model);
        const fs::path dir = ctx.out / choice.label;
        write_text(dir / "model.txt", [&](std::ostream& out) { model->save(out); });
        write_text(dir / "history.csv", [&](std::ostream& out) { write_history(out, run.training.history); });
        write_predictions(dir / "predictions.csv", run.test);
        ctx.log->info("{}: test AUC-ROC {:.4f}", choice.label, run.evaluation.auc_roc);
        results[static_cast<std::size_t>(i)].run = std::move(run);
    });
    const int failures = count_failures(ctx, errors, names);
    std::vector<MetricRow> rows;
    write_text(ctx.out / "summary.csv", [&](std::ostream& out) {
        out << "model,threshold,epochs,best_epoch,best_val_loss,auc_roc,auc_prc,mcc\n";
        for (std::size_t i = 0; i < models.size(); ++i)
        {
            if (!errors[i].empty())
            {
                continue;
            }
            const ModelRun& r = results[i].run;
            fmt::print(out, "{},{:.10g},{},{},{:.10g},{:.6f},{:.6f},{:.6f}\n", names[i], r.threshold,
                       r.training.history.size(), r.training.best_epoch, r.training.best_val_loss,
                       r.evaluation.auc_roc, r.evaluation.auc_prc, r.evaluation.mcc);
            const auto more = evaluation_rows(names[i], dataset_label(ctx, cell), r.evaluation);
            rows.insert(rows.end(), more.begin(), more.end());
        }
    });
    write_text(ctx.out / "metrics.csv", [&](std::ostream& out) { write_metric_report(out, rows); });
    return finish(ctx, "train", failures);
}

// ---------------------------------------------------------------------------

int run_evaluate(const RunContext& ctx)
{
    const ExperimentConfig& c = ctx.config;
    const fs::path models_dir = ctx.models.value_or(ctx.out);
    const Cell cell{c.simulation.h2, 0};
    const std::uint64_t seed = cell_seed(c, cell);
    const Dataset data = obtain_dataset(ctx, cell);
    const Cohort cohort = build_cohort(data.population, data.tracks, c.rules, c.edge_mode);
    const Split split = make_split(cohort, c, seed);
    const std::vector<ModelChoice> models = c.resolve_models(data.tracks.n_features() > 1);

    std::vector<std::vector<MetricRow>> rows(models.size());
    std::vector<std::string> names;
    for (const ModelChoice& m : models)
    {
        names.push_back(m.label);
    }
    const auto errors = run_tasks(static_cast<int>(models.size()), ctx.jobs, [&](int i) {
        const ModelChoice& choice = models[static_cast<std::size_t>(i)];
        const fs::path archive = models_dir / choice.label / "model.txt";
        std::optional<Model> loaded;
        if (fs::exists(archive))
        {
            std::ifstream in(archive);
            loaded.emplace(Model::load(in, &choice.architecture));
        }
        else if (choice.architecture == Architecture::RuleBased)
        {
            loaded.emplace(with_architecture(c.model, Architecture::RuleBased), seed);
        }
        else
        {
            throw LoadError(fmt::format("missing model archive {}", archive.string()));
        }
        const Model& model = *loaded;
        const int batch = c.train.batch_size;
        const Predictions val = model.predict(cohort, split.val, batch);
        const Predictions test = model.predict(cohort, split.test, batch);
        const bool rule_based = choice.architecture == Architecture::RuleBased;
        const double threshold = rule_based ? 0.5 : tune_threshold(val.model(), val.labels);
        auto& out = rows[static_cast<std::size_t>(i)];
        if (rule_based || c.mc_samples == 0)
        {
            out = evaluation_rows(choice.label, dataset_label(ctx, cell), evaluate_scores(test.model(), test.labels, threshold));
        }
        else
        {
            out = mc_rows(choice.label, dataset_label(ctx, cell),
                          mc_dropout_eval(model, cohort, split.test, threshold, c.mc_samples, seed, batch));
        }
        write_predictions(ctx.out / choice.label / "test_predictions.csv", test);
    });
    const int failures = count_failures(ctx, errors, names);
    std::vector<MetricRow> all;
    for (const auto& r : rows)
    {
        all.insert(all.end(), r.begin(), r.end());
    }
    write_text(ctx.out / "metrics.csv", [&](std::ostream& out) { write_metric_report(out, all); });
    return finish(ctx, "evaluate", failures);
}

// ---------------------------------------------------------------------------

int run_ablate(const RunContext& ctx)
{
    const ExperimentConfig& c = ctx.config;
    const std::vector<Cell> cells = sweep_cells(c);
    const bool has_channels = ctx.data || !c.data_root.empty()
                                  ? obtain_dataset(ctx, cells.front()).tracks.n_features() > 1
                                  : !c.longitudinal.channels.empty();
    const std::vector<ModelChoice> models = c.resolve_models(has_channels);
    const std::size_t n_models = models.size();
    struct Outcome
    {
        bool ok = false;
        std::string error;
        ModelRun run;
        int n_targets = 0;
        int n_cases = 0;
    };
    std::vector<std::vector<Outcome>> outcomes(cells.size(), std::vector<Outcome>(n_models));
    std::vector<std::string> names;
    for (const Cell& cell : cells)
    {
        names.push_back(dataset_dir(cell.h2, cell.replicate).string());
    }
    const auto errors = run_tasks(static_cast<int>(cells.size()), ctx.jobs, [&](int i) {
        const Cell& cell = cells[static_cast<std::size_t>(i)];
        const std::uint64_t seed = cell_seed(c, cell);
        const Dataset data = obtain_dataset(ctx, cell);
        const Cohort cohort = build_cohort(data.population, data.tracks, c.rules, c.edge_mode);
        const Split split = make_split(cohort, c, seed);
        for (std::size_t m = 0; m < n_models; ++m)
        {
            Outcome& o = outcomes[static_cast<std::size_t>(i)][m];
            o.n_targets = cohort.size();
            o.n_cases = cohort.n_cases();
            try
            {
                o.run = run_model(cohort, split, with_architecture(c.model, models[m].architecture),
                                  run_options(c, seed, 0));
                o.ok = true;
                ctx.log->info("{} {}: AUC-ROC {:.4f}", names[static_cast<std::size_t>(i)], models[m].label,
                              o.run.evaluation.auc_roc);
            }
            catch (const std::exception& e)
            {
                o.error = e.what();
            }
        }
    });
    int failures = count_failures(ctx, errors, names);
    for (std::size_t i = 0; i < cells.size(); ++i)
    {
        for (std::size_t m = 0; m < n_models; ++m)
        {
            if (errors[i].empty() && !outcomes[i][m].ok)
            {
                ctx.log->error("{} {}: {}", names[i], models[m].label, outcomes[i][m].error);
                ++failures;
            }
        }
    }

    write_text(ctx.out / "per_run.csv", [&](std::ostream& out) {
        out << "model,h2,replicate,seed,n_targets,n_cases,auc_roc,auc_prc,mcc,threshold,epochs\n";
        for (std::size_t m = 0; m < n_models; ++m)
        {
            for (std::size_t i = 0; i < cells.size(); ++i)
            {
                const Outcome& o = outcomes[i][m];
                if (!o.ok)
                {
                    continue;
                }
                fmt::print(out, "{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.10g},{}\n", models[m].label, cells[i].h2,
                           cells[i].replicate, cell_seed(c, cells[i]), o.n_targets, o.n_cases, o.run.evaluation.auc_roc,
                           o.run.evaluation.auc_prc, o.run.evaluation.mcc, o.run.threshold,
                           o.run.training.history.size());
            }
        }
    });

    // Aggregate over replicates for each (model, h2).
    const std::vector<double> h2s = c.heritabilities();
    std::vector<MetricRow> rows;
    constexpr std::array<const char*, 3> metrics{"auc_roc", "auc_prc", "mcc"};
    for (std::size_t m = 0; m < n_models; ++m)
    {
        for (double h2 : h2s)
        {
            std::array<std::vector<double>, 3> values;
            for (std::size_t i = 0; i < cells.size(); ++i)
            {
                const Outcome& o = outcomes[i][m];
                if (cells[i].h2 == h2 && o.ok)
                {
                    values[0].push_back(o.run.evaluation.auc_roc);
                    values[1].push_back(o.run.evaluation.auc_prc);
                    values[2].push_back(o.run.evaluation.mcc);
                }
            }
            if (values[0].empty())
            {
                continue;
            }
            for (std::size_t k = 0; k < metrics.size(); ++k)
            {
                rows.push_back({models[m].label, dataset_name({h2, 0}), metrics[k], summarize(values[k])});
            }
        }
    }
    write_text(ctx.out / "metrics.csv", [&](std::ostream& out) { write_metric_report(out, rows); });
    for (const char* metric : metrics)
    {
        write_text(ctx.out / fmt::format("series_{}.csv", metric), [&](std::ostream& out) {
            out << "model,h2,mean,ci_low,ci_high,n\n";
            for (const MetricRow& r : rows)
            {
                if (r.metric == metric)
                {
                    fmt::print(out, "{},{},{:.6f},{:.6f},{:.6f},{}\n", r.model, r.dataset.substr(3), r.summary.mean,
                               r.summary.ci_low, r.summary.ci_high, r.summary.values.size());
                }
            }
        });
    }
    return finish(ctx, "ablate", failures);
}

// ---------------------------------------------------------------------------

int run_design_study(const RunContext& ctx)
{
    const ExperimentConfig& c = ctx.config;
    const DesignGrid& g = c.design;
    struct GridCell
    {
        EdgeMode edge_mode;
        ConvKind conv;
        PoolMode pooling;
        double learning_rate;
    };
    std::vector<GridCell> grid;
    for (EdgeMode e : g.edge_modes)
    {
        for (ConvKind k : g.convs)
        {
            for (PoolMode p : g.poolings)
            {
                for (double lr : g.learning_rates)
                {
                    grid.push_back({e, k, p, lr});
                }
            }
        }
    }
    // One task per (replicate, edge mode): the cohort depends on both.
    const int n_modes = static_cast<int>(g.edge_modes.size());
    const int n_tasks = c.replicates * n_modes;
    std::vector<std::vector<std::optional<double>>> auc(grid.size(), std::vector<std::optional<double>>(
                                                                          static_cast<std::size_t>(c.replicates)));
    std::vector<std::string> names;
    for (int t = 0; t < n_tasks; ++t)
    {
        names.push_back(fmt::format("rep_{} {}", t / n_modes, edge_mode_name(g.edge_modes[static_cast<std::size_t>(t % n_modes)])));
    }
    std::mutex failure_lock;
    std::vector<std::string> cell_failures;
    const auto errors = run_tasks(n_tasks, ctx.jobs, [&](int t) {
        const int rep = t / n_modes;
        const EdgeMode mode = g.edge_modes[static_cast<std::size_t>(t % n_modes)];
        const Cell cell{g.h2, rep};
        const std::uint64_t seed = cell_seed(c, cell);
        const Dataset data = obtain_dataset(ctx, cell);
        const Cohort cohort = build_cohort(data.population, data.tracks, c.rules, mode);
        const Split split = make_split(cohort, c, seed);
        for (std::size_t k = 0; k < grid.size(); ++k)
        {
            const GridCell& gc = grid[k];
            if (gc.edge_mode != mode)
            {
                continue;
            }
            ModelConfig mc = with_architecture(c.model, g.architecture);
            mc.conv = gc.conv;
            mc.pooling = gc.pooling;
            RunOptions options = run_options(c, seed, 0);
            options.train.learning_rate = gc.learning_rate;
            try
            {
                const ModelRun run = run_model(cohort, split, mc, options);
                auc[k][static_cast<std::size_t>(rep)] = run.evaluation.auc_roc;
                ctx.log->info("rep {} {} {} {} lr {}: AUC-ROC {:.4f}", rep, edge_mode_name(mode),
                              conv_kind_name(gc.conv), pool_mode_name(gc.pooling), gc.learning_rate,
                              run.evaluation.auc_roc);
            }
            catch (const std::exception& e)
            {
                const std::lock_guard lock(failure_lock);
                cell_failures.push_back(fmt::format("{} {} {} lr {}: {}", names[static_cast<std::size_t>(t)],
                                                    conv_kind_name(gc.conv), pool_mode_name(gc.pooling),
                                                    gc.learning_rate, e.what()));
            }
        }
    });
    int failures = count_failures(ctx, errors, names);
    std::sort(cell_failures.begin(), cell_failures.end());
    for (const std::string& f : cell_failures)
    {
        ctx.log->error("{}", f);
        ++failures;
    }

    std::optional<std::size_t> best;
    std::vector<Summary> summaries(grid.size());
    write_text(ctx.out / "grid.csv", [&](std::ostream& out) {
        out << "edge_mode,conv,pooling,learning_rate,mean,ci_low,ci_high,n\n";
        for (std::size_t k = 0; k < grid.size(); ++k)
        {
            std::vector<double> v;
            for (const auto& a : auc[k])
            {
                if (a)
                {
                    v.push_back(*a);
                }
            }
            if (v.empty())
            {
                continue;
            }
            summaries[k] = summarize(v);
            const GridCell& gc = grid[k];
            fmt::print(out, "{},{},{},{},{:.6f},{:.6f},{:.6f},{}\n", edge_mode_name(gc.edge_mode),
                       conv_kind_name(gc.conv), pool_mode_name(gc.pooling), gc.learning_rate, summaries[k].mean,
                       summaries[k].ci_low, summaries[k].ci_high, v.size());
            if (!best || summaries[k].mean > summaries[*best].mean)
            {
                best = k;
            }
        }
    });
    write_text(ctx.out / "per_run.csv", [&](std::ostream& out) {
        out << "edge_mode,conv,pooling,learning_rate,replicate,auc_roc\n";
        for (std::size_t k = 0; k < grid.size(); ++k)
        {
            for (std::size_t r = 0; r < auc[k].size(); ++r)
            {
                if (auc[k][r])
                {
                    const GridCell& gc = grid[k];
                    fmt::print(out, "{},{},{},{},{},{:.6f}\n", edge_mode_name(gc.edge_mode), conv_kind_name(gc.conv),
                               pool_mode_name(gc.pooling), gc.learning_rate, r, *auc[k][r]);
                }
            }
        }
    });
    if (best)
    {
        ExperimentConfig echo = c;
        const GridCell& gc = grid[*best];
        echo.edge_mode = gc.edge_mode;
        echo.model.conv = gc.conv;
        echo.model.pooling = gc.pooling;
        echo.train.learning_rate = gc.learning_rate;
        echo.models = {{g.architecture, std::string(architecture_label(g.architecture))}};
        write_text(ctx.out / "best.ini", [&](std::ostream& out) {
            fmt::print(out, "; best cell: mean AUC-ROC {:.6f} [{:.6f}, {:.6f}] over {} replicate(s)\n",
                       summaries[*best].mean, summaries[*best].ci_low, summaries[*best].ci_high,
                       summaries[*best].values.size());
            out << canonical_text(echo);
        });
        ctx.log->info("best cell: {} {} {} lr {} (AUC-ROC {:.4f})", edge_mode_name(gc.edge_mode),
                      conv_kind_name(gc.conv), pool_mode_name(gc.pooling), gc.learning_rate, summaries[*best].mean);
    }
    return finish(ctx, "design-study", failures);
}

// ---------------------------------------------------------------------------

int run_explain(const RunContext& ctx)
{
    const ExperimentConfig& c = ctx.config;
    if (!ctx.model)
    {
        throw ConfigError("explain needs --model pointing at a model archive");
    }
    std::ifstream archive(*ctx.model);
    if (!archive)
    {
        throw LoadError(fmt::format("cannot open model archive {}", ctx.model->string()));
    }
    const Model model = Model::load(archive);
    if (!uses_graph(model.config().architecture))
    {
        throw ConfigError(fmt::format("explain needs a graph model, archive holds {}",
                                      architecture_name(model.config().architecture)));
    }
    const Cell cell{c.simulation.h2, 0};
    const std::uint64_t seed = cell_seed(c, cell);
    const Dataset data = obtain_dataset(ctx, cell);
    const Cohort cohort = build_cohort(data.population, data.tracks, c.rules, model.config().edge_mode);
    const int F = static_cast<int>(cohort.retained_features.size());
    for (int n : c.explain.n_top)
    {
        if (cohort.size() > 0 && n > F)
        {
            throw ConfigError(fmt::format("explain.n_top {} exceeds the {} retained features", n, F));
        }
    }
    Split split;
    try
    {
        split = make_split(cohort, c, seed);
    }
    catch (const SplitError& e)
    {
        ctx.log->warn("no test cohort: {}", e.what());
    }

    std::vector<int> targets = split.test;
    Rng rng(derive_seed(c.explain.explain.seed ^ seed, kStageExplainTargets, 0, 0));
    std::shuffle(targets.begin(), targets.end(), rng);
    targets.resize(std::min(targets.size(), static_cast<std::size_t>(c.explain.n_explain)));
    std::sort(targets.begin(), targets.end());

    ExplainConfig ec = c.explain.explain;
    ec.seed = seed;
    std::vector<ExplanationMasks> explanations(targets.size());
    std::vector<std::string> names;
    for (int t : targets)
    {
        names.push_back(fmt::format("target {}", cohort.graphs[static_cast<std::size_t>(t)].target_id));
    }
    const auto errors = run_tasks(static_cast<int>(targets.size()), ctx.jobs, [&](int i) {
        explanations[static_cast<std::size_t>(i)] = explain(model, cohort, targets[static_cast<std::size_t>(i)], ec);
    });
    int failures = count_failures(ctx, errors, names);
    std::vector<ExplanationMasks> done;
    for (std::size_t i = 0; i < explanations.size(); ++i)
    {
        if (errors[i].empty())
        {
            done.push_back(std::move(explanations[i]));
        }
    }
    if (done.empty())
    {
        ctx.log->warn("no test targets were explained; writing an empty report");
        ++failures;
    }

    write_text(ctx.out / "importance.csv", [&](std::ostream& out) {
        out << "relative_type,feature_id,score,rank\n";
        for (Relation r : kHistoryRelations)
        {
            const std::array<Relation, 1> one{r};
            const auto ranking = global_importance(done, one);
            if (ranking.empty() && !done.empty())
            {
                ctx.log->warn("no {} nodes among the explained targets", relation_name(r));
            }
            write_importance_report(out, r, ranking, cohort.retained_features);
        }
    });
    if (c.explain.dump_masks)
    {
        for (const ExplanationMasks& e : done)
        {
            write_text(ctx.out / "masks" / fmt::format("{}.csv", e.target_id),
                       [&](std::ostream& out) { write_mask_dump(out, e); });
        }
    }
    if (c.explain.embeddings && !targets.empty())
    {
        write_text(ctx.out / "embeddings.csv", [&](std::ostream& out) {
            write_embeddings(out, model, cohort, targets, c.train.batch_size);
        });
    }
    if (!c.explain.n_top.empty() && !done.empty())
    {
        SelectionConfig sc;
        sc.n_top = c.explain.n_top;
        sc.explain = ec;
        sc.n_explain = c.explain.n_explain;
        sc.l2 = c.explain.l2;
        sc.retrain_model = model.config();
        sc.train = c.train;
        sc.train.seed = seed;
        sc.model_seed = seed;
        const SelectionReport report = feature_selection_experiment(cohort, split, model, sc);
        write_text(ctx.out / "selection.csv",
                   [&](std::ostream& out) { write_selection_report(out, report, cohort.retained_features); });
    }
    return finish(ctx, "explain", failures);
}

}  // namespace famgnn::cli
