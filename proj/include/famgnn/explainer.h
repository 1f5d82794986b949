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
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "famgnn/model.h"
#include "famgnn/trainer.h"

namespace famgnn
{

class OptimizationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class MaskOptimizer
{
    GradientDescent,
    Adam,
};

std::string_view mask_optimizer_name(MaskOptimizer o);
/// Throws ConfigError for an unknown name.
MaskOptimizer parse_mask_optimizer(std::string_view name);

struct ExplainConfig
{
    MaskOptimizer optimizer = MaskOptimizer::GradientDescent;
    int steps = 200;
    double learning_rate = 0.01;
    double size_penalty = 0.005;
    double entropy_penalty = 0.1;
    /// Masks start at sigmoid(init_logit) plus seeded jitter of this spread.
    double init_logit = 0.0;
    double init_sd = 0.01;
    /// Converged when the objective moved less than this over the last 10 steps.
    double tolerance = 1e-4;
    std::uint64_t seed = 0;

    /// Throws ConfigError on an invalid setting.
    void validate() const;
};

/**
 * Soft masks for one target graph. The feature mask has one column per
 * feature for static models and one per (year, feature) pair for sequence
 * models, at column t * n_features + f.
 */
struct ExplanationMasks
{
    int target_id = -1;
    std::vector<int> node_ids;
    std::vector<Relation> node_relations;
    int n_features = 0;
    int n_steps = 1;  // time columns in the feature mask
    std::vector<double> node_mask;
    std::vector<double> node_importance;  // node_mask / max(node_mask)
    Matrix feature_mask;
    double original_probability = 0.0;
    double masked_probability = 0.0;
    double objective = 0.0;
    bool converged = false;

    /// Feature mask averaged over time: n_nodes x n_features.
    Matrix time_averaged() const;
};

/**
 * Fidelity term of the explanation objective: KL divergence between the
 * model's original prediction and its prediction under the given masks.
 * Zero when every mask entry is 1.
 */
double mask_fidelity(const Model& model, const Batch& single, const Matrix& node_mask, const Matrix& feature_mask);

/**
 * Learns node and feature masks for graph `index` of `data`. Needs a graph
 * architecture; throws ConfigError otherwise and OptimizationError when the
 * objective becomes non-finite.
 */
ExplanationMasks explain(const Model& model, const Cohort& data, int index, const ExplainConfig& config);

struct FeatureScore
{
    int feature = 0;  // position in the cohort's retained features
    double score = 0.0;
    int rank = 0;     // 1-based
};

/**
 * Node-importance-weighted mean of time-averaged feature masks over every
 * node whose relation is in `relations`. Ranked by descending score with
 * ties in feature order. Empty when no explanation has such a node.
 */
std::vector<FeatureScore> global_importance(std::span<const ExplanationMasks> explanations,
                                            std::span<const Relation> relations);

/// |A ∩ B| / |A ∪ B|; 1 for two empty sets.
double jaccard(std::span<const int> a, std::span<const int> b);

/// Restricts every node's longitudinal block to the given feature positions.
Cohort select_features(const Cohort& data, std::span<const int> positions);

/**
 * Logistic-regression feature ranking over flattened parent features (each
 * parent's ever-diagnosed bit per feature). A feature scores the larger
 * absolute coefficient across the two parents.
 */
std::vector<FeatureScore> logistic_parent_ranking(const Cohort& data, std::span<const int> indices, double l2);

struct SelectionConfig
{
    std::vector<int> n_top{20, 50, 100};
    ExplainConfig explain;
    int n_explain = 200;  // training targets explained for the global ranking
    double l2 = 1e-3;
    ModelConfig retrain_model;  // architecture forced to gnn_static
    TrainConfig train;
    std::uint64_t model_seed = 1;
};

struct SelectionRow
{
    int n_top = 0;
    std::string selector;  // "explainer" or "logistic"
    std::vector<int> features;
    double auc_prc = 0.0;
    double jaccard = 0.0;  // between the two selectors at this n
};

struct SelectionReport
{
    std::vector<FeatureScore> explainer_ranking;
    std::vector<FeatureScore> logistic_ranking;
    std::vector<SelectionRow> rows;
};

/**
 * Ranks parent features by the explainer and by logistic regression, then
 * for each n retrains a static GNN on each selector's top-n features and
 * scores it on the test split. Throws ParameterError when n exceeds the
 * feature count.
 */
SelectionReport feature_selection_experiment(const Cohort& data, const Split& split, const Model& model,
                                             const SelectionConfig& config);

void write_importance_report(std::ostream& out, Relation relation, std::span<const FeatureScore> ranking,
                             std::span<const int> feature_ids);
void write_mask_dump(std::ostream& out, const ExplanationMasks& masks);
void write_selection_report(std::ostream& out, const SelectionReport& report, std::span<const int> feature_ids);

/// Per-node output of the last convolution: target_id, node_id, relative_type, values.
void write_embeddings(std::ostream& out, const Model& model, const Cohort& data, std::span<const int> indices,
                      int batch_size);

}  // namespace famgnn
