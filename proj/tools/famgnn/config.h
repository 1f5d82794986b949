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
#include <filesystem>
#include <string>
#include <vector>

#include "famgnn/experiment.h"

namespace famgnn::cli
{

/// Model selection for one experiment: architecture plus its display label.
struct ModelChoice
{
    Architecture architecture;
    std::string label;
};

struct DesignGrid
{
    double h2 = 0.7;
    Architecture architecture = Architecture::GnnStatic;
    std::vector<EdgeMode> edge_modes{EdgeMode::ParentChild, EdgeMode::ParentChildPlusTarget, EdgeMode::AllRelated};
    std::vector<ConvKind> convs{ConvKind::Gcn, ConvKind::Kgnn};
    std::vector<PoolMode> poolings{PoolMode::Target, PoolMode::Sum, PoolMode::Mean};
    std::vector<double> learning_rates{0.001, 0.01};
};

struct ExplainSettings
{
    ExplainConfig explain;
    int n_explain = 200;
    std::vector<int> n_top{20, 50, 100};
    double l2 = 1e-3;
    bool dump_masks = false;
    bool embeddings = true;
};

/**
 * Everything a command needs, read from an INI file with sections. Unknown
 * sections or keys are configuration errors.
 */
struct ExperimentConfig
{
    std::uint64_t seed = 1;
    SimParams simulation;
    bool e2_auto = true;  // e2 = 1 - h2 for every simulated dataset
    LongitudinalSpec longitudinal;
    std::vector<double> sweep_h2;  // empty: the single simulation.h2
    int replicates = 1;
    std::string data_root;  // empty: simulate in memory
    CohortRules rules;
    EdgeMode edge_mode = EdgeMode::AllRelated;
    std::vector<ModelChoice> models;  // empty: automatic, see resolve_models
    ModelConfig model;
    TrainConfig train;
    SplitSpec split;
    int mc_samples = 3;
    DesignGrid design;
    ExplainSettings explain;

    /// Heritabilities of the sweep (the single simulation value when unset).
    std::vector<double> heritabilities() const;
    /// The configured models, or B1, A1, A2 and G1 plus GNN-LSTM when the
    /// data carries longitudinal channels beyond the outcome.
    std::vector<ModelChoice> resolve_models(bool has_channels) const;
    /// Simulation parameters for one sweep cell.
    SimParams dataset_params(double h2, int replicate) const;
};

/// Parses the file; throws ConfigError with the file name on any problem.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Defaults only.
ExperimentConfig default_config();
/// Canonical INI text: every key of every section in a fixed order.
std::string canonical_text(const ExperimentConfig& config);
/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace famgnn::cli
