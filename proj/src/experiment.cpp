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


#include "famgnn/experiment.h"

namespace famgnn
{

namespace
{

constexpr std::uint64_t kStageTracks = 121;

}  // namespace

Dataset simulate_dataset(const SimParams& params, const LongitudinalSpec& longitudinal)
{
    Dataset d;
    d.population = simulate_population(params);
    d.tracks = synthesize_longitudinal(d.population, longitudinal, derive_seed(params.seed, kStageTracks, 0, 0));
    return d;
}

ModelConfig fit_to_cohort(ModelConfig config, const Cohort& cohort)
{
    config.edge_mode = cohort.mode;
    if (!cohort.graphs.empty())
    {
        config.n_long_features = cohort.graphs.front().n_long_features;
        config.n_years = cohort.graphs.front().n_years;
    }
    return config;
}

ModelRun run_model(const Cohort& cohort, const Split& split, const ModelConfig& config, const RunOptions& options,
                   std::optional<Model>* trained)
{
    const ModelConfig fitted = fit_to_cohort(config, cohort);
    fitted.validate();
    Model model(fitted, options.model_seed);
    ModelRun run;
    run.architecture = fitted.architecture;
    const bool rule_based = fitted.architecture == Architecture::RuleBased;
    if (!rule_based)
    {
        run.training = train(model, cohort, split, options.train);
    }
    const int batch = options.train.batch_size;
    run.validation = model.predict(cohort, split.val, batch);
    run.test = model.predict(cohort, split.test, batch);
    // The rule-based model emits hard 0/1 predictions; its cut-off is fixed.
    run.threshold = rule_based ? 0.5 : tune_threshold(run.validation.model(), run.validation.labels);
    run.evaluation = evaluate_scores(run.test.model(), run.test.labels, run.threshold);
    if (!rule_based && options.mc_samples > 0)
    {
        run.mc_dropout = mc_dropout_eval(model, cohort, split.test, run.threshold, options.mc_samples,
                                         options.mc_seed, batch);
    }
    if (trained != nullptr)
    {
        trained->emplace(std::move(model));
    }
    return run;
}

}  // namespace famgnn
