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

#include <cstdint>
#include <optional>
#include <string>

#include "famgnn/explainer.h"
#include "famgnn/family_graph.h"
#include "famgnn/metrics.h"
#include "famgnn/model.h"
#include "famgnn/pedigree.h"
#include "famgnn/trainer.h"

namespace famgnn
{

/// A simulated population with its longitudinal tracks.
struct Dataset
{
    Population population;
    FeatureTracks tracks;
};

/// Tracks are seeded from the simulation seed on their own stream.
Dataset simulate_dataset(const SimParams& params, const LongitudinalSpec& longitudinal);

/// Copies the cohort's input dimensions and edge mode into `config`.
ModelConfig fit_to_cohort(ModelConfig config, const Cohort& cohort);

struct ModelRun
{
    Architecture architecture = Architecture::GnnLstm;
    TrainResult training;
    double threshold = 0.5;
    Predictions validation;
    Predictions test;
    Evaluation evaluation;  // test split, dropout off
    std::optional<McDropoutResult> mc_dropout;
};

struct RunOptions
{
    TrainConfig train;
    std::uint64_t model_seed = 1;
    int mc_samples = 0;  // 0 skips MC dropout; rule-based models never use it
    std::uint64_t mc_seed = 1;
};

/**
 * Trains one model on the split (no training for the rule-based model),
 * tunes the threshold on the validation split and scores the test split.
 * The trained model is moved into `trained` when given.
 */
ModelRun run_model(const Cohort& cohort, const Split& split, const ModelConfig& config, const RunOptions& options,
                   std::optional<Model>* trained = nullptr);

}  // namespace famgnn
