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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "famgnn/family_graph.h"
#include "famgnn/layers.h"

namespace famgnn
{

enum class Architecture
{
    RuleBased,              // any relative diagnosed
    MlpAgeSex,              // target age and sex only
    MlpFamilyHistory,       // age, sex and the tabular family history
    LstmTarget,             // target's own longitudinal record
    LstmTargetPlusHistory,  // the above plus family history
    GnnStatic,              // family graph without sequence encoders
    GnnLstm,                // full model with four heads
};

std::string_view architecture_name(Architecture a);
/// Short label used in reports (B1, A1, ...).
std::string_view architecture_label(Architecture a);
/// Accepts either the name or the label.
Architecture parse_architecture(std::string_view s);

bool uses_graph(Architecture a);
bool uses_sequences(Architecture a);
bool uses_history(Architecture a);

struct ModelConfig
{
    Architecture architecture = Architecture::GnnLstm;
    ConvKind conv = ConvKind::Gcn;
    PoolMode pooling = PoolMode::Target;
    EdgeMode edge_mode = EdgeMode::AllRelated;
    bool kgnn_edge_scaling = false;  // scale k-GNN neighbor messages by r
    int n_conv_layers = 2;
    int hidden_gnn = 20;
    int hidden_lstm = 40;
    int hidden_mlp = 20;
    double dropout = 0.5;
    double gamma = 1.0;  // full-model head
    double alpha = 1.0;  // target head
    double beta = 1.0;   // family head
    double delta = 1.0;  // family sequence head
    double threshold = 0.5;
    // Input dimensions, fixed by the data the model is built for.
    int n_long_features = 1;
    int n_years = 10;

    /// Throws ConfigError on an invalid setting.
    void validate() const;
};

/// Key/value form shared by archives and experiment config files.
std::vector<std::pair<std::string, std::string>> model_config_entries(const ModelConfig& c);
/// Throws ConfigError for an unknown key or unparsable value.
void apply_model_config_entry(ModelConfig& c, std::string_view key, std::string_view value);

// ---------------------------------------------------------------------------
// Batches

/**
 * Several family graphs stacked block-diagonally. Node rows of graph g are
 * [offsets[g], offsets[g+1]); its target is row offsets[g].
 */
struct Batch
{
    int n_graphs = 0;
    int n_nodes = 0;
    std::vector<int> offsets;
    std::vector<int> targets;
    std::vector<int> target_ids;
    std::vector<double> labels;
    std::vector<Relation> node_relations;
    Matrix node_static;         // n_nodes x kNodeStaticFeatures
    std::vector<Matrix> steps;  // n_years matrices of n_nodes x n_long_features
    Matrix ever;                // n_nodes x n_long_features
    Matrix history;             // n_graphs x kFamilyHistoryFeatures; empty if unavailable
    std::vector<std::array<int, 2>> edges;
    std::vector<double> edge_r;
    SparseOperator conv_op;
};

/// Throws ConfigError when the cohort lacks inputs the architecture needs.
Batch make_batch(const Cohort& data, std::span<const int> indices, const ModelConfig& config);

// ---------------------------------------------------------------------------

/// Optional soft masks for explanation: node (n_nodes x 1) and feature
/// (n_nodes x F') where F' = n_years * n_long_features for sequence models
/// (column t * n_long_features + f) and n_long_features otherwise.
struct Masks
{
    Var node;
    Var feature;
};

int mask_feature_width(const ModelConfig& c);

/// Logits of each head (invalid Var when the architecture lacks the head)
/// and intermediate embeddings.
struct Outputs
{
    Var model;
    Var target;
    Var family;
    Var family_lstm;
    Var node_embedding;    // sequence encoding per node (GnnLstm)
    Var conv_embedding;    // per-node output of the last convolution
    Var graph_embedding;   // pooled convolution output
    Var target_embedding;  // target branch representation
    Var family_embedding;  // family branch representation
};

enum class Head
{
    Model,
    Target,
    Family,
    FamilyLstm,
};

inline constexpr int kNumHeads = 4;
std::string_view head_name(Head h);

struct ClassWeights
{
    double case_weight = 1.0;
    double control_weight = 1.0;

    /// w = N / n_class. Throws ParameterError if a class is absent.
    static ClassWeights from_labels(std::span<const double> labels);
};

/// Per-graph probabilities; heads absent from the architecture are NaN.
struct Predictions
{
    std::vector<int> target_ids;
    std::vector<double> labels;
    std::array<std::vector<double>, kNumHeads> heads;

    const std::vector<double>& model() const { return heads[0]; }
};

class Model
{
public:
    Model(const ModelConfig& config, std::uint64_t seed);
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    const ModelConfig& config() const { return config_; }
    ModelConfig& config() { return config_; }
    std::uint64_t seed() const { return seed_; }
    ParameterSet& parameters() { return params_; }
    const ParameterSet& parameters() const { return params_; }
    bool has_dropout() const;

    /// Throws ConfigError for RuleBased, which has no differentiable forward.
    Outputs forward(const Context& ctx, const Batch& batch, const Masks* masks = nullptr) const;

    /// Deterministic unless `rng` is given, in which case dropout is active.
    Predictions predict(const Batch& batch, Rng* rng = nullptr) const;
    /// Predictions over a whole cohort subset in batches.
    Predictions predict(const Cohort& data, std::span<const int> indices, int batch_size, Rng* rng = nullptr) const;

    void save(std::ostream& out) const;
    /// Throws LoadError on a malformed archive, ConfigError if `expected` is
    /// given and names a different architecture.
    static Model load(std::istream& in, const Architecture* expected = nullptr);

private:
    void build(Rng& rng);

    ModelConfig config_;
    std::uint64_t seed_ = 0;
    ParameterSet params_;

    // Baselines
    Mlp baseline_;
    BiLstm baseline_lstm_;
    // Graph model
    BiLstm target_lstm_;
    BiLstm node_lstm_;
    Mlp target_branch_;
    Dense target_head_;
    std::vector<GcnLayer> gcn_;
    std::vector<KgnnLayer> kgnn_;
    Mlp family_branch_;
    Dense family_head_;
    Dense family_lstm_head_;
    Mlp final_;
};

/// Weighted head losses: sum over heads of weight * class-weighted BCE.
/// Heads with weight 0 are skipped. Throws NumericError naming a non-finite head.
Var compute_loss(const Outputs& out, const Batch& batch, const ModelConfig& config, const ClassWeights& weights);

/// 1 if any relative-type history bit is set (availability bits are ignored).
int predict_rule_based(std::span<const double> family_history);

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticFit
{
    std::vector<double> coefficients;
    double intercept = 0.0;
    bool converged = false;
    int iterations = 0;
    double loss = 0.0;

    /// Feature indices by descending |coefficient|, ties by index.
    std::vector<int> ranking() const;
    std::vector<double> predict(const Matrix& x) const;
};

/**
 * Minimizes mean negative log-likelihood + l2 / 2 * ||w||^2 (intercept not
 * penalized) by full-batch Adam on the autodiff tape. `converged` is false
 * if the gradient norm did not fall below `tol` within `max_iter` steps;
 * the last iterate is returned either way.
 */
LogisticFit logistic_regression_fit(const Matrix& x, std::span<const double> y, double l2, int max_iter = 4000,
                                    double tol = 1e-6);

}  // namespace famgnn
