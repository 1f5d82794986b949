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


#include "famgnn/model.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "famgnn/optim.h"

namespace famgnn
{

namespace
{

struct ArchInfo
{
    Architecture arch;
    std::string_view name;
    std::string_view label;
};

constexpr std::array<ArchInfo, 7> kArchitectures{{
    {Architecture::RuleBased, "rule_based", "B1"},
    {Architecture::MlpAgeSex, "mlp_age_sex", "A1"},
    {Architecture::MlpFamilyHistory, "mlp_family_history", "A2"},
    {Architecture::LstmTarget, "lstm_target", "A4"},
    {Architecture::LstmTargetPlusHistory, "lstm_target_history", "A5"},
    {Architecture::GnnStatic, "gnn_static", "G1"},
    {Architecture::GnnLstm, "gnn_lstm", "GNN-LSTM"},
}};

}  // namespace

std::string_view architecture_name(Architecture a)
{
    return kArchitectures[static_cast<std::size_t>(a)].name;
}

std::string_view architecture_label(Architecture a)
{
    return kArchitectures[static_cast<std::size_t>(a)].label;
}

Architecture parse_architecture(std::string_view s)
{
    for (const ArchInfo& info : kArchitectures)
    {
        if (info.name == s || info.label == s)
        {
            return info.arch;
        }
    }
    throw ConfigError(fmt::format("unknown architecture '{}'", s));
}

bool uses_graph(Architecture a)
{
    return a == Architecture::GnnStatic || a == Architecture::GnnLstm;
}

bool uses_sequences(Architecture a)
{
    return a == Architecture::LstmTarget || a == Architecture::LstmTargetPlusHistory || a == Architecture::GnnLstm;
}

bool uses_history(Architecture a)
{
    return a == Architecture::RuleBased || a == Architecture::MlpFamilyHistory ||
           a == Architecture::LstmTargetPlusHistory;
}

void ModelConfig::validate() const
{
    auto require = [](bool ok, std::string_view what) {
        if (!ok)
        {
            throw ConfigError(fmt::format("model config: {}", what));
        }
    };
    require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    for (double w : {gamma, alpha, beta, delta})
    {
        require(std::isfinite(w) && w >= 0.0, "loss weights must be finite and non-negative");
    }
    require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
    require(n_conv_layers >= 1, "n_conv_layers must be >= 1");
    require(hidden_gnn >= 1 && hidden_mlp >= 1, "hidden sizes must be positive");
    require(hidden_lstm >= 2 && hidden_lstm % 2 == 0, "hidden_lstm must be even and positive");
    require(n_long_features >= 1 && n_years >= 1, "input dimensions must be positive");
}

namespace
{

template <typename T>
T parse_number(std::string_view key, std::string_view value)
{
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
    {
        throw ConfigError(fmt::format("invalid value '{}' for '{}'", value, key));
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view value)
{
    if (value == "true" || value == "1")
    {
        return true;
    }
    if (value == "false" || value == "0")
    {
        return false;
    }
    throw ConfigError(fmt::format("invalid boolean '{}' for '{}'", value, key));
}

}  // namespace

std::vector<std::pair<std::string, std::string>> model_config_entries(const ModelConfig& c)
{
    return {
        {"architecture", std::string(architecture_name(c.architecture))},
        {"conv", std::string(conv_kind_name(c.conv))},
        {"pooling", std::string(pool_mode_name(c.pooling))},
        {"edge_mode", std::string(edge_mode_name(c.edge_mode))},
        {"kgnn_edge_scaling", c.kgnn_edge_scaling ? "true" : "false"},
        {"n_conv_layers", fmt::format("{}", c.n_conv_layers)},
        {"hidden_gnn", fmt::format("{}", c.hidden_gnn)},
        {"hidden_lstm", fmt::format("{}", c.hidden_lstm)},
        {"hidden_mlp", fmt::format("{}", c.hidden_mlp)},
        {"dropout", fmt::format("{}", c.dropout)},
        {"gamma", fmt::format("{}", c.gamma)},
        {"alpha", fmt::format("{}", c.alpha)},
        {"beta", fmt::format("{}", c.beta)},
        {"delta", fmt::format("{}", c.delta)},
        {"threshold", fmt::format("{}", c.threshold)},
        {"n_long_features", fmt::format("{}", c.n_long_features)},
        {"n_years", fmt::format("{}", c.n_years)},
    };
}

void apply_model_config_entry(ModelConfig& c, std::string_view key, std::string_view value)
{
    if (key == "architecture")
    {
        c.architecture = parse_architecture(value);
    }
    else if (key == "conv")
    {
        c.conv = parse_conv_kind(value);
    }
    else if (key == "pooling")
    {
        c.pooling = parse_pool_mode(value);
    }
    else if (key == "edge_mode")
    {
        try
        {
            c.edge_mode = parse_edge_mode(value);
        }
        catch (const ParameterError& e)
        {
            throw ConfigError(e.what());
        }
    }
    else if (key == "kgnn_edge_scaling")
    {
        c.kgnn_edge_scaling = parse_bool(key, value);
    }
    else if (key == "n_conv_layers")
    {
        c.n_conv_layers = parse_number<int>(key, value);
    }
    else if (key == "hidden_gnn")
    {
        c.hidden_gnn = parse_number<int>(key, value);
    }
    else if (key == "hidden_lstm")
    {
        c.hidden_lstm = parse_number<int>(key, value);
    }
    else if (key == "hidden_mlp")
    {
        c.hidden_mlp = parse_number<int>(key, value);
    }
    else if (key == "dropout")
    {
        c.dropout = parse_number<double>(key, value);
    }
    else if (key == "gamma")
    {
        c.gamma = parse_number<double>(key, value);
    }
    else if (key == "alpha")
    {
        c.alpha = parse_number<double>(key, value);
    }
    else if (key == "beta")
    {
        c.beta = parse_number<double>(key, value);
    }
    else if (key == "delta")
    {
        c.delta = parse_number<double>(key, value);
    }
    else if (key == "threshold")
    {
        c.threshold = parse_number<double>(key, value);
    }
    else if (key == "n_long_features")
    {
        c.n_long_features = parse_number<int>(key, value);
    }
    else if (key == "n_years")
    {
        c.n_years = parse_number<int>(key, value);
    }
    else
    {
        throw ConfigError(fmt::format("unknown model key '{}'", key));
    }
}

// ---------------------------------------------------------------------------

Batch make_batch(const Cohort& data, std::span<const int> indices, const ModelConfig& config)
{
    const Architecture arch = config.architecture;
    if (uses_graph(arch) && data.mode != config.edge_mode)
    {
        throw ConfigError(fmt::format("cohort graphs use edge mode '{}' but the model expects '{}'",
                                      edge_mode_name(data.mode), edge_mode_name(config.edge_mode)));
    }
    const bool have_history = data.family_history.size() == data.graphs.size();
    if (uses_history(arch) && !have_history)
    {
        throw ConfigError(fmt::format("{} needs family history vectors", architecture_name(arch)));
    }
    const bool long_inputs = uses_sequences(arch) || arch == Architecture::GnnStatic;

    Batch b;
    b.n_graphs = static_cast<int>(indices.size());
    b.offsets.push_back(0);
    for (int idx : indices)
    {
        if (idx < 0 || idx >= data.size())
        {
            throw std::out_of_range(fmt::format("make_batch: graph index {} outside cohort of {}", idx, data.size()));
        }
        const FamilyGraph& g = data.graphs[static_cast<std::size_t>(idx)];
        if (long_inputs && (g.n_long_features != config.n_long_features || g.n_years != config.n_years))
        {
            throw ConfigError(fmt::format("graph of target {} has {}x{} longitudinal inputs, model expects {}x{}",
                                          g.target_id, g.n_long_features, g.n_years, config.n_long_features,
                                          config.n_years));
        }
        b.n_nodes += g.n_nodes();
        b.offsets.push_back(b.n_nodes);
    }

    const int F = config.n_long_features;
    const int T = config.n_years;
    b.node_static = Matrix::Zero(b.n_nodes, kNodeStaticFeatures);
    if (long_inputs)
    {
        b.steps.assign(static_cast<std::size_t>(T), Matrix::Zero(b.n_nodes, F));
        b.ever = Matrix::Zero(b.n_nodes, F);
    }
    if (have_history)
    {
        b.history = Matrix::Zero(b.n_graphs, kFamilyHistoryFeatures);
    }
    for (int k = 0; k < b.n_graphs; ++k)
    {
        const int idx = indices[static_cast<std::size_t>(k)];
        const FamilyGraph& g = data.graphs[static_cast<std::size_t>(idx)];
        const int base = b.offsets[static_cast<std::size_t>(k)];
        b.targets.push_back(base);
        b.target_ids.push_back(g.target_id);
        b.labels.push_back(g.label);
        b.node_static.middleRows(base, g.n_nodes()) = g.node_static;
        b.node_relations.insert(b.node_relations.end(), g.node_relations.begin(), g.node_relations.end());
        if (long_inputs)
        {
            for (int i = 0; i < g.n_nodes(); ++i)
            {
                for (int f = 0; f < F; ++f)
                {
                    for (int t = 0; t < T; ++t)
                    {
                        if (g.long_at(i, f, t) != 0)
                        {
                            b.steps[static_cast<std::size_t>(t)](base + i, f) = 1.0;
                            b.ever(base + i, f) = 1.0;
                        }
                    }
                }
            }
        }
        if (have_history)
        {
            const auto& h = data.family_history[static_cast<std::size_t>(idx)];
            for (int c = 0; c < kFamilyHistoryFeatures; ++c)
            {
                b.history(k, c) = h[static_cast<std::size_t>(c)];
            }
        }
        if (uses_graph(arch))
        {
            for (int e = 0; e < g.n_edges(); ++e)
            {
                const auto& edge = g.edges[static_cast<std::size_t>(e)];
                b.edges.push_back({base + edge[0], base + edge[1]});
                b.edge_r.push_back(g.edge_features(e, 0));
            }
        }
    }
    if (uses_graph(arch))
    {
        b.conv_op = config.conv == ConvKind::Gcn
                        ? gcn_operator(b.n_nodes, b.edges)
                        : neighbor_operator(b.n_nodes, b.edges,
                                            config.kgnn_edge_scaling ? std::span<const double>(b.edge_r)
                                                                     : std::span<const double>());
    }
    return b;
}

int mask_feature_width(const ModelConfig& c)
{
    return uses_sequences(c.architecture) ? c.n_years * c.n_long_features : c.n_long_features;
}

std::string_view head_name(Head h)
{
    switch (h)
    {
        case Head::Model:
            return "model";
        case Head::Target:
            return "target";
        case Head::Family:
            return "family";
        case Head::FamilyLstm:
            return "family_lstm";
    }
    return "?";
}

ClassWeights ClassWeights::from_labels(std::span<const double> labels)
{
    const double n = static_cast<double>(labels.size());
    const double cases = static_cast<double>(std::count(labels.begin(), labels.end(), 1.0));
    const double controls = n - cases;
    if (cases == 0.0 || controls == 0.0)
    {
        throw ParameterError(fmt::format("class weights need both classes ({} cases, {} controls)", cases, controls));
    }
    return {n / cases, n / controls};
}

// ---------------------------------------------------------------------------

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), seed_(seed)
{
    config_.validate();
    Rng rng(seed);
    build(rng);
}

void Model::build(Rng& rng)
{
    const ModelConfig& c = config_;
    const int F = c.n_long_features;
    const int hm = c.hidden_mlp;
    auto dims = [](std::initializer_list<int> d) { return std::vector<int>(d); };
    switch (c.architecture)
    {
        case Architecture::RuleBased:
            return;
        case Architecture::MlpAgeSex:
            baseline_ = Mlp::create(params_, "mlp", dims({2, hm, 1}), c.dropout, false, rng);
            return;
        case Architecture::MlpFamilyHistory:
            baseline_ = Mlp::create(params_, "mlp", dims({2 + kFamilyHistoryFeatures, hm, 1}), c.dropout, false, rng);
            return;
        case Architecture::LstmTarget:
            baseline_lstm_ = BiLstm::create(params_, "lstm", F, c.hidden_lstm, rng);
            baseline_ = Mlp::create(params_, "mlp", dims({c.hidden_lstm + 2, hm, 1}), c.dropout, false, rng);
            return;
        case Architecture::LstmTargetPlusHistory:
            baseline_lstm_ = BiLstm::create(params_, "lstm", F, c.hidden_lstm, rng);
            baseline_ = Mlp::create(params_, "mlp", dims({c.hidden_lstm + 2 + kFamilyHistoryFeatures, hm, 1}),
                                    c.dropout, false, rng);
            return;
        case Architecture::GnnStatic:
        case Architecture::GnnLstm:
            break;
    }
    const bool seq = c.architecture == Architecture::GnnLstm;
    int target_in = 2 + F;
    int node_in = kNodeStaticFeatures + F;
    if (seq)
    {
        target_lstm_ = BiLstm::create(params_, "target_lstm", F, c.hidden_lstm, rng);
        node_lstm_ = BiLstm::create(params_, "node_lstm", F, c.hidden_lstm, rng);
        target_in = 2 + c.hidden_lstm;
        node_in = kNodeStaticFeatures + c.hidden_lstm;
    }
    target_branch_ = Mlp::create(params_, "target_branch", dims({target_in, hm, hm}), c.dropout, true, rng);
    target_head_ = Dense::create(params_, "target_head", hm, 1, rng);
    int width = node_in;
    for (int l = 0; l < c.n_conv_layers; ++l)
    {
        const std::string name = fmt::format("conv{}", l);
        if (c.conv == ConvKind::Gcn)
        {
            gcn_.push_back(GcnLayer::create(params_, name, width, c.hidden_gnn, rng));
        }
        else
        {
            kgnn_.push_back(KgnnLayer::create(params_, name, width, c.hidden_gnn, rng));
        }
        width = c.hidden_gnn;
    }
    family_branch_ = Mlp::create(params_, "family_branch", dims({c.hidden_gnn, hm, hm}), c.dropout, true, rng);
    family_head_ = Dense::create(params_, "family_head", hm, 1, rng);
    if (seq)
    {
        family_lstm_head_ = Dense::create(params_, "family_lstm_head", c.hidden_lstm, 1, rng);
    }
    final_ = Mlp::create(params_, "final", dims({2 * hm, hm, 1}), c.dropout, false, rng);
}

bool Model::has_dropout() const
{
    return config_.architecture != Architecture::RuleBased && config_.dropout > 0.0;
}

Outputs Model::forward(const Context& ctx, const Batch& batch, const Masks* masks) const
{
    const ModelConfig& c = config_;
    if (c.architecture == Architecture::RuleBased)
    {
        throw ConfigError("rule_based has no differentiable forward pass");
    }
    Tape& tape = ctx.tape;
    const int F = c.n_long_features;
    const bool node_masked = masks != nullptr && masks->node.valid();
    const bool feature_masked = masks != nullptr && masks->feature.valid();
    if (node_masked && (masks->node.rows() != batch.n_nodes || masks->node.cols() != 1))
    {
        throw ShapeError(fmt::format("node mask is {} for {} nodes", shape_string(masks->node.value()), batch.n_nodes));
    }
    if (feature_masked &&
        (masks->feature.rows() != batch.n_nodes || masks->feature.cols() != mask_feature_width(c)))
    {
        throw ShapeError(fmt::format("feature mask is {} but the model expects {} columns",
                                     shape_string(masks->feature.value()), mask_feature_width(c)));
    }

    const Var statics = tape.constant(batch.node_static);
    const Var target_static = slice_cols(gather_rows(statics, batch.targets), 0, 2);

    // Sequence inputs with the feature mask applied.
    auto masked_steps = [&] {
        std::vector<Var> steps;
        steps.reserve(batch.steps.size());
        for (std::size_t t = 0; t < batch.steps.size(); ++t)
        {
            Var x = tape.constant(batch.steps[t]);
            if (feature_masked)
            {
                x = mul(x, slice_cols(masks->feature, static_cast<Eigen::Index>(t) * F, F));
            }
            steps.push_back(x);
        }
        return steps;
    };
    auto target_rows = [&](std::span<const Var> steps) {
        std::vector<Var> out;
        out.reserve(steps.size());
        for (const Var& s : steps)
        {
            out.push_back(gather_rows(s, batch.targets));
        }
        return out;
    };
    auto history = [&] {
        if (batch.history.rows() != batch.n_graphs)
        {
            throw ConfigError("batch carries no family history");
        }
        return tape.constant(batch.history);
    };

    Outputs out;
    switch (c.architecture)
    {
        case Architecture::MlpAgeSex:
            out.model = baseline_.forward(ctx, target_static);
            return out;
        case Architecture::MlpFamilyHistory:
        {
            const std::array parts{target_static, history()};
            out.model = baseline_.forward(ctx, concat_cols(parts));
            return out;
        }
        case Architecture::LstmTarget:
        case Architecture::LstmTargetPlusHistory:
        {
            const auto steps = masked_steps();
            const Var h = baseline_lstm_.forward(ctx, target_rows(steps));
            out.target_embedding = h;
            std::vector<Var> parts{h, target_static};
            if (c.architecture == Architecture::LstmTargetPlusHistory)
            {
                parts.push_back(history());
            }
            out.model = baseline_.forward(ctx, concat_cols(parts));
            return out;
        }
        default:
            break;
    }

    Var node_in;
    Var target_in;
    if (c.architecture == Architecture::GnnStatic)
    {
        Var ever = tape.constant(batch.ever);
        if (feature_masked)
        {
            ever = mul(ever, masks->feature);
        }
        const std::array nparts{statics, ever};
        node_in = concat_cols(nparts);
        const std::array tparts{target_static, gather_rows(ever, batch.targets)};
        target_in = concat_cols(tparts);
    }
    else
    {
        const auto steps = masked_steps();
        out.node_embedding = node_lstm_.forward(ctx, steps);
        const std::array nparts{out.node_embedding, statics};
        node_in = concat_cols(nparts);
        const std::array tparts{target_lstm_.forward(ctx, target_rows(steps)), target_static};
        target_in = concat_cols(tparts);
        out.family_lstm = family_lstm_head_.forward(ctx, segment_mean(out.node_embedding, batch.offsets));
    }
    if (node_masked)
    {
        node_in = mul_rows(node_in, masks->node);
    }

    const Var* scale = node_masked ? &masks->node : nullptr;
    Var h = node_in;
    for (const GcnLayer& layer : gcn_)
    {
        h = layer.forward(ctx, h, batch.conv_op, Activation::Relu, scale);
    }
    for (const KgnnLayer& layer : kgnn_)
    {
        h = layer.forward(ctx, h, batch.conv_op, Activation::Relu, scale);
    }
    out.conv_embedding = h;
    out.graph_embedding = pool(h, c.pooling, batch.offsets, batch.targets);
    out.family_embedding = family_branch_.forward(ctx, out.graph_embedding);
    out.family = family_head_.forward(ctx, out.family_embedding);
    out.target_embedding = target_branch_.forward(ctx, target_in);
    out.target = target_head_.forward(ctx, out.target_embedding);
    const std::array both{out.target_embedding, out.family_embedding};
    out.model = final_.forward(ctx, concat_cols(both));
    return out;
}

Predictions Model::predict(const Batch& batch, Rng* rng) const
{
    Predictions p;
    p.target_ids = batch.target_ids;
    p.labels = batch.labels;
    const auto n = static_cast<std::size_t>(batch.n_graphs);
    for (auto& h : p.heads)
    {
        h.assign(n, std::numeric_limits<double>::quiet_NaN());
    }
    if (config_.architecture == Architecture::RuleBased)
    {
        if (batch.history.rows() != batch.n_graphs)
        {
            throw ConfigError("rule_based needs family history vectors");
        }
        for (std::size_t g = 0; g < n; ++g)
        {
            const Eigen::Index gi = static_cast<Eigen::Index>(g);
            const std::span<const double> row(batch.history.row(gi).data(), kFamilyHistoryFeatures);
            p.heads[0][g] = predict_rule_based(row);
        }
        return p;
    }
    Tape tape;
    const Context ctx{tape, rng != nullptr, rng, false};
    const Outputs out = forward(ctx, batch);
    const std::array heads{out.model, out.target, out.family, out.family_lstm};
    for (std::size_t k = 0; k < heads.size(); ++k)
    {
        if (!heads[k].valid())
        {
            continue;
        }
        const Matrix prob = sigmoid(heads[k]).value();
        for (std::size_t g = 0; g < n; ++g)
        {
            p.heads[k][g] = prob(static_cast<Eigen::Index>(g), 0);
        }
    }
    return p;
}

Predictions Model::predict(const Cohort& data, std::span<const int> indices, int batch_size, Rng* rng) const
{
    if (batch_size < 1)
    {
        throw std::invalid_argument("predict: batch size must be >= 1");
    }
    Predictions all;
    for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size))
    {
        const std::size_t len = std::min(indices.size() - start, static_cast<std::size_t>(batch_size));
        const Batch b = make_batch(data, indices.subspan(start, len), config_);
        const Predictions p = predict(b, rng);
        all.target_ids.insert(all.target_ids.end(), p.target_ids.begin(), p.target_ids.end());
        all.labels.insert(all.labels.end(), p.labels.begin(), p.labels.end());
        for (int k = 0; k < kNumHeads; ++k)
        {
            all.heads[k].insert(all.heads[k].end(), p.heads[k].begin(), p.heads[k].end());
        }
    }
    return all;
}

// ---------------------------------------------------------------------------
// Archive

namespace
{

constexpr std::string_view kArchiveVersion = "# famgnn-model v1";

}  // namespace

void Model::save(std::ostream& out) const
{
    out << kArchiveVersion << '\n';
    for (const auto& [k, v] : model_config_entries(config_))
    {
        fmt::print(out, "{}={}\n", k, v);
    }
    fmt::print(out, "seed={}\n", seed_);
    fmt::print(out, "parameters={}\n", params_.size());
    for (const Parameter& p : params_.items())
    {
        fmt::print(out, "param {} {} {}\n", p.name, p.value.rows(), p.value.cols());
        for (Eigen::Index i = 0; i < p.value.size(); ++i)
        {
            fmt::print(out, "{}{:a}", i == 0 ? "" : " ", p.value.data()[i]);
        }
        out << '\n';
    }
    out << "end\n";
}

Model Model::load(std::istream& in, const Architecture* expected)
{
    std::string line;
    int line_no = 0;
    auto next = [&] {
        if (!std::getline(in, line))
        {
            throw LoadError(fmt::format("model archive truncated after line {}", line_no));
        }
        ++line_no;
        return std::string_view(line);
    };
    if (next() != kArchiveVersion)
    {
        throw LoadError(fmt::format("model archive: expected version line '{}'", kArchiveVersion));
    }
    ModelConfig config;
    std::uint64_t seed = 0;
    std::size_t n_params = 0;
    while (true)
    {
        const std::string_view l = next();
        const auto eq = l.find('=');
        if (eq == std::string_view::npos)
        {
            throw LoadError(fmt::format("model archive line {}: expected key=value", line_no));
        }
        const std::string_view key = l.substr(0, eq);
        const std::string_view value = l.substr(eq + 1);
        try
        {
            if (key == "seed")
            {
                seed = parse_number<std::uint64_t>(key, value);
            }
            else if (key == "parameters")
            {
                n_params = parse_number<std::size_t>(key, value);
                break;
            }
            else
            {
                apply_model_config_entry(config, key, value);
            }
        }
        catch (const ConfigError& e)
        {
            throw LoadError(fmt::format("model archive line {}: {}", line_no, e.what()));
        }
    }
    if (expected != nullptr && *expected != config.architecture)
    {
        throw ConfigError(fmt::format("archive holds a {} model, expected {}", architecture_name(config.architecture),
                                      architecture_name(*expected)));
    }
    Model model = [&] {
        try
        {
            return Model(config, seed);
        }
        catch (const ConfigError& e)
        {
            throw LoadError(fmt::format("model archive: {}", e.what()));
        }
    }();
    if (n_params != model.params_.size())
    {
        throw LoadError(fmt::format("model archive lists {} parameters, configuration defines {}", n_params,
                                    model.params_.size()));
    }
    for (Parameter& p : model.params_.items())
    {
        std::istringstream header{std::string(next())};
        std::string tag;
        std::string name;
        Eigen::Index rows = -1;
        Eigen::Index cols = -1;
        header >> tag >> name >> rows >> cols;
        if (tag != "param" || name != p.name || rows != p.value.rows() || cols != p.value.cols())
        {
            throw LoadError(fmt::format("model archive line {}: expected parameter {} {}x{}", line_no, p.name,
                                        p.value.rows(), p.value.cols()));
        }
        std::istringstream values{std::string(next())};
        for (Eigen::Index i = 0; i < p.value.size(); ++i)
        {
            std::string tok;
            if (!(values >> tok))
            {
                throw LoadError(fmt::format("model archive line {}: too few values for {}", line_no, p.name));
            }
            char* end = nullptr;
            p.value.data()[i] = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size())
            {
                throw LoadError(fmt::format("model archive line {}: bad number '{}'", line_no, tok));
            }
        }
        std::string extra;
        if (values >> extra)
        {
            throw LoadError(fmt::format("model archive line {}: too many values for {}", line_no, p.name));
        }
    }
    if (next() != "end")
    {
        throw LoadError(fmt::format("model archive line {}: expected 'end'", line_no));
    }
    return model;
}

// ---------------------------------------------------------------------------

Var compute_loss(const Outputs& out, const Batch& batch, const ModelConfig& config, const ClassWeights& weights)
{
    std::vector<double> w(batch.labels.size());
    for (std::size_t i = 0; i < w.size(); ++i)
    {
        w[i] = batch.labels[i] == 1.0 ? weights.case_weight : weights.control_weight;
    }
    const std::array<std::pair<Head, double>, kNumHeads> heads{
        {{Head::Model, config.gamma}, {Head::Target, config.alpha}, {Head::Family, config.beta},
         {Head::FamilyLstm, config.delta}}};
    const std::array logits{out.model, out.target, out.family, out.family_lstm};
    Var total;
    for (std::size_t k = 0; k < heads.size(); ++k)
    {
        const auto [head, weight] = heads[k];
        if (!logits[k].valid() || weight == 0.0)
        {
            continue;
        }
        Var term = scale(bce_with_logits(logits[k], batch.labels, w), weight);
        if (!std::isfinite(term.value()(0, 0)))
        {
            throw NumericError(fmt::format("loss of head '{}' is not finite", head_name(head)));
        }
        total = total.valid() ? add(total, term) : term;
    }
    if (!total.valid())
    {
        return out.model.tape().constant(Matrix::Zero(1, 1));
    }
    return total;
}

int predict_rule_based(std::span<const double> family_history)
{
    for (std::size_t k = 0; k < kHistoryRelations.size() && k < family_history.size(); ++k)
    {
        if (family_history[k] != 0.0)
        {
            return 1;
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------

std::vector<int> LogisticFit::ranking() const
{
    std::vector<int> order(coefficients.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(coefficients[static_cast<std::size_t>(a)]) > std::abs(coefficients[static_cast<std::size_t>(b)]);
    });
    return order;
}

std::vector<double> LogisticFit::predict(const Matrix& x) const
{
    std::vector<double> p(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
    {
        double z = intercept;
        for (Eigen::Index j = 0; j < x.cols(); ++j)
        {
            z += coefficients[static_cast<std::size_t>(j)] * x(i, j);
        }
        p[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-z));
    }
    return p;
}

LogisticFit logistic_regression_fit(const Matrix& x, std::span<const double> y, double l2, int max_iter, double tol)
{
    if (static_cast<std::size_t>(x.rows()) != y.size() || x.rows() == 0)
    {
        throw ShapeError(fmt::format("logistic regression: {} rows but {} labels", x.rows(), y.size()));
    }
    if (l2 < 0.0)
    {
        throw ParameterError("logistic regression: l2 must be >= 0");
    }
    Parameter w("w", Matrix::Zero(x.cols(), 1));
    Parameter b("b", Matrix::Zero(1, 1));
    std::vector<Parameter*> params{&w, &b};
    AdamConfig cfg;
    cfg.lr = 0.05;
    Adam adam(params, cfg);
    const std::vector<double> ones(y.size(), 1.0);
    LogisticFit fit;
    for (int it = 0; it < max_iter; ++it)
    {
        adam.zero_grad();
        Tape tape;
        const Var wv = tape.parameter(w);
        Var logits = add_row(matmul(tape.constant(x), wv), tape.parameter(b));
        Var loss = bce_with_logits(logits, y, ones);
        if (l2 > 0.0)
        {
            loss = add(loss, scale(sum(mul(wv, wv)), 0.5 * l2));
        }
        tape.backward(loss);
        tape.deposit_parameter_grads(params);
        fit.loss = loss.value()(0, 0);
        fit.iterations = it + 1;
        const double g = std::max(w.grad.cwiseAbs().maxCoeff(), b.grad.cwiseAbs().maxCoeff());
        if (g < tol)
        {
            fit.converged = true;
            break;
        }
        adam.step();
    }
    fit.coefficients.assign(w.value.data(), w.value.data() + w.value.size());
    fit.intercept = b.value(0, 0);
    return fit;
}

}  // namespace famgnn
