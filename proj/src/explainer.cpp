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


#include "famgnn/explainer.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "famgnn/metrics.h"
#include "famgnn/optim.h"
#include "famgnn/pedigree.h"

namespace famgnn
{

namespace
{

enum : std::uint64_t
{
    kStageExplain = 111,
    kStageExplainSample = 112,
};

constexpr double kLogEps = 1e-12;

double logistic(double z)
{
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double original_logit(const Model& model, const Batch& b)
{
    Tape tape;
    const Context ctx{tape, false, nullptr, false};
    return model.forward(ctx, b).model.value()(0, 0);
}

/// KL(p0 || sigmoid(logit)) as p0 * (CE1(z) - CE1(z0)) + (1 - p0) * (CE0(z) - CE0(z0)).
/// Both references go through the same cross-entropy code, so each term is
/// exactly zero when the logit is unchanged.
Var fidelity(const Var& logit, double z0)
{
    const double p0 = logistic(z0);
    const std::array<double, 1> positive{1.0};
    const std::array<double, 1> negative{0.0};
    const std::array<double, 1> w{1.0};
    Tape reference;
    const Var r = reference.constant(Matrix::Constant(1, 1, z0));
    const double ce1 = bce_with_logits(r, positive, w).value()(0, 0);
    const double ce0 = bce_with_logits(r, negative, w).value()(0, 0);
    const Var pos = add_scalar(bce_with_logits(logit, positive, w), -ce1);
    const Var neg = add_scalar(bce_with_logits(logit, negative, w), -ce0);
    return add(scale(pos, p0), scale(neg, 1.0 - p0));
}

Var binary_entropy(const Var& m)
{
    const Var one_minus = add_scalar(scale(m, -1.0), 1.0);
    const Var a = mul(m, log(add_scalar(m, kLogEps)));
    const Var b = mul(one_minus, log(add_scalar(one_minus, kLogEps)));
    return scale(add(a, b), -1.0);
}

void require_graph_model(const Model& model)
{
    if (!uses_graph(model.config().architecture))
    {
        throw ConfigError(fmt::format("{} has no graph to explain", architecture_name(model.config().architecture)));
    }
}

}  // namespace

std::string_view mask_optimizer_name(MaskOptimizer o)
{
    return o == MaskOptimizer::Adam ? "adam" : "gradient_descent";
}

MaskOptimizer parse_mask_optimizer(std::string_view name)
{
    if (name == "adam")
    {
        return MaskOptimizer::Adam;
    }
    if (name == "gradient_descent" || name == "sgd")
    {
        return MaskOptimizer::GradientDescent;
    }
    throw ConfigError(fmt::format("unknown mask optimizer '{}'", name));
}

void ExplainConfig::validate() const
{
    if (steps < 0 || !(learning_rate > 0.0) || !(size_penalty >= 0.0) || !(entropy_penalty >= 0.0) ||
        !(init_sd >= 0.0) || !(tolerance >= 0.0))
    {
        throw ConfigError(fmt::format("invalid explain settings: steps {}, lr {}, size {}, entropy {}", steps,
                                      learning_rate, size_penalty, entropy_penalty));
    }
}

Matrix ExplanationMasks::time_averaged() const
{
    const auto n = static_cast<Eigen::Index>(node_mask.size());
    Matrix avg = Matrix::Zero(n, n_features);
    for (int t = 0; t < n_steps; ++t)
    {
        avg += feature_mask.middleCols(static_cast<Eigen::Index>(t) * n_features, n_features);
    }
    return avg / static_cast<double>(n_steps);
}

double mask_fidelity(const Model& model, const Batch& single, const Matrix& node_mask, const Matrix& feature_mask)
{
    require_graph_model(model);
    const double z0 = original_logit(model, single);
    Tape tape;
    const Context ctx{tape, false, nullptr, false};
    const Masks masks{tape.constant(node_mask), tape.constant(feature_mask)};
    return fidelity(model.forward(ctx, single, &masks).model, z0).value()(0, 0);
}

ExplanationMasks explain(const Model& model, const Cohort& data, int index, const ExplainConfig& config)
{
    config.validate();
    require_graph_model(model);
    const ModelConfig& mc = model.config();
    const std::array<int, 1> one{index};
    const Batch b = make_batch(data, one, mc);
    const FamilyGraph& g = data.graphs[static_cast<std::size_t>(index)];
    const int n = b.n_nodes;
    const int width = mask_feature_width(mc);
    const double z0 = original_logit(model, b);

    Rng rng(derive_seed(config.seed, kStageExplain, static_cast<std::uint64_t>(g.target_id), 0));
    std::normal_distribution<double> jitter(config.init_logit, config.init_sd);
    auto init = [&](Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i)
        {
            m.data()[i] = config.init_sd > 0.0 ? jitter(rng) : config.init_logit;
        }
        return m;
    };
    Parameter node_logits("explain.node", init(n, 1));
    Parameter feature_logits("explain.feature", init(n, width));
    std::vector<Parameter*> params{&node_logits, &feature_logits};
    AdamConfig ac;
    ac.lr = config.learning_rate;
    Adam adam(params, ac);

    ExplanationMasks out;
    out.target_id = g.target_id;
    out.node_ids = g.node_ids;
    out.node_relations = g.node_relations;
    out.n_features = mc.n_long_features;
    out.n_steps = width / mc.n_long_features;
    out.original_probability = logistic(z0);

    std::vector<double> objectives;
    for (int step = 0;; ++step)
    {
        adam.zero_grad();
        Tape tape;
        const Context ctx{tape, false, nullptr, false};
        const Var node_mask = sigmoid(tape.parameter(node_logits));
        const Var feature_mask = sigmoid(tape.parameter(feature_logits));
        const Masks masks{node_mask, feature_mask};
        const Var logit = model.forward(ctx, b, &masks).model;
        const Var size = add(mean(node_mask), mean(feature_mask));
        const Var entropy = add(mean(binary_entropy(node_mask)), mean(binary_entropy(feature_mask)));
        const Var objective = add(fidelity(logit, z0), add(scale(size, config.size_penalty),
                                                           scale(entropy, config.entropy_penalty)));
        const double value = objective.value()(0, 0);
        if (!std::isfinite(value))
        {
            throw OptimizationError(
                fmt::format("explaining target {}: objective is {} at step {}", g.target_id, value, step));
        }
        objectives.push_back(value);
        if (step == config.steps)
        {
            out.objective = value;
            out.masked_probability = logistic(logit.value()(0, 0));
            out.node_mask.assign(node_mask.value().data(), node_mask.value().data() + n);
            out.feature_mask = feature_mask.value();
            break;
        }
        tape.backward(objective);
        tape.deposit_parameter_grads(params);
        if (config.optimizer == MaskOptimizer::Adam)
        {
            adam.step();
        }
        else
        {
            for (Parameter* p : params)
            {
                p->value -= config.learning_rate * p->grad;
            }
        }
    }
    const std::size_t k = objectives.size();
    out.converged = k > 10 && std::abs(objectives[k - 1] - objectives[k - 11]) < config.tolerance;
    const double top = *std::max_element(out.node_mask.begin(), out.node_mask.end());
    out.node_importance.reserve(out.node_mask.size());
    for (double m : out.node_mask)
    {
        out.node_importance.push_back(top > 0.0 ? m / top : 0.0);
    }
    return out;
}

std::vector<FeatureScore> global_importance(std::span<const ExplanationMasks> explanations,
                                            std::span<const Relation> relations)
{
    int n_features = -1;
    Eigen::VectorXd weighted;
    double total_weight = 0.0;
    bool found = false;
    for (const ExplanationMasks& e : explanations)
    {
        if (n_features < 0)
        {
            n_features = e.n_features;
            weighted = Eigen::VectorXd::Zero(n_features);
        }
        else if (e.n_features != n_features)
        {
            throw ShapeError(fmt::format("explanations mix {} and {} features", n_features, e.n_features));
        }
        const Matrix avg = e.time_averaged();
        for (std::size_t i = 0; i < e.node_mask.size(); ++i)
        {
            if (std::find(relations.begin(), relations.end(), e.node_relations[i]) == relations.end())
            {
                continue;
            }
            found = true;
            weighted += e.node_mask[i] * avg.row(static_cast<Eigen::Index>(i)).transpose();
            total_weight += e.node_mask[i];
        }
    }
    std::vector<FeatureScore> out;
    if (!found)
    {
        return out;
    }
    for (int f = 0; f < n_features; ++f)
    {
        out.push_back({f, total_weight > 0.0 ? weighted(f) / total_weight : 0.0, 0});
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureScore& a, const FeatureScore& b) { return a.score > b.score; });
    for (std::size_t r = 0; r < out.size(); ++r)
    {
        out[r].rank = static_cast<int>(r) + 1;
    }
    return out;
}

double jaccard(std::span<const int> a, std::span<const int> b)
{
    const std::set<int> sa(a.begin(), a.end());
    const std::set<int> sb(b.begin(), b.end());
    if (sa.empty() && sb.empty())
    {
        return 1.0;
    }
    std::size_t common = 0;
    for (int x : sa)
    {
        common += sb.count(x);
    }
    return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

Cohort select_features(const Cohort& data, std::span<const int> positions)
{
    Cohort out;
    out.mode = data.mode;
    out.family_history = data.family_history;
    const int width = data.graphs.empty() ? 0 : data.graphs.front().n_long_features;
    for (int p : positions)
    {
        if (p < 0 || p >= width)
        {
            throw ParameterError(fmt::format("feature position {} outside {} features", p, width));
        }
        const bool mapped = data.retained_features.size() == static_cast<std::size_t>(width);
        out.retained_features.push_back(mapped ? data.retained_features[static_cast<std::size_t>(p)] : p);
    }
    const int k = static_cast<int>(positions.size());
    out.graphs.reserve(data.graphs.size());
    for (const FamilyGraph& g : data.graphs)
    {
        FamilyGraph s = g;
        s.n_long_features = k;
        s.node_long.assign(static_cast<std::size_t>(g.n_nodes()) * k * g.n_years, 0);
        for (int i = 0; i < g.n_nodes(); ++i)
        {
            for (int j = 0; j < k; ++j)
            {
                for (int t = 0; t < g.n_years; ++t)
                {
                    s.node_long[(static_cast<std::size_t>(i) * k + j) * g.n_years + t] =
                        g.long_at(i, positions[static_cast<std::size_t>(j)], t);
                }
            }
        }
        out.graphs.push_back(std::move(s));
    }
    return out;
}

std::vector<FeatureScore> logistic_parent_ranking(const Cohort& data, std::span<const int> indices, double l2)
{
    if (indices.empty())
    {
        throw ParameterError("logistic ranking needs at least one target");
    }
    const int F = data.graphs[static_cast<std::size_t>(indices.front())].n_long_features;
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(indices.size()), 2 * F);
    std::vector<double> y;
    y.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r)
    {
        const FamilyGraph& g = data.graphs[static_cast<std::size_t>(indices[r])];
        y.push_back(g.label);
        for (int i = 0; i < g.n_nodes(); ++i)
        {
            const Relation rel = g.node_relations[static_cast<std::size_t>(i)];
            if (rel != Relation::Mother && rel != Relation::Father)
            {
                continue;
            }
            const int base = rel == Relation::Mother ? 0 : F;
            for (int f = 0; f < F; ++f)
            {
                x(static_cast<Eigen::Index>(r), base + f) = g.long_ever(i, f);
            }
        }
    }
    const LogisticFit fit = logistic_regression_fit(x, y, l2);
    std::vector<FeatureScore> out;
    for (int f = 0; f < F; ++f)
    {
        const double s = std::max(std::abs(fit.coefficients[static_cast<std::size_t>(f)]),
                                  std::abs(fit.coefficients[static_cast<std::size_t>(F + f)]));
        out.push_back({f, s, 0});
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureScore& a, const FeatureScore& b) { return a.score > b.score; });
    for (std::size_t r = 0; r < out.size(); ++r)
    {
        out[r].rank = static_cast<int>(r) + 1;
    }
    return out;
}

namespace
{

std::vector<int> top_features(std::span<const FeatureScore> ranking, int n)
{
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
    {
        out.push_back(ranking[static_cast<std::size_t>(i)].feature);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

SelectionReport feature_selection_experiment(const Cohort& data, const Split& split, const Model& model,
                                             const SelectionConfig& config)
{
    require_graph_model(model);
    const int F = model.config().n_long_features;
    for (int n : config.n_top)
    {
        if (n < 1 || n > F)
        {
            throw ParameterError(fmt::format("top-{} selection from {} features", n, F));
        }
    }

    std::vector<int> pool = split.train;
    Rng rng(derive_seed(config.explain.seed, kStageExplainSample, 0, 0));
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(pool.size(), static_cast<std::size_t>(std::max(config.n_explain, 0))));
    std::vector<ExplanationMasks> explanations;
    explanations.reserve(pool.size());
    for (int i : pool)
    {
        explanations.push_back(explain(model, data, i, config.explain));
    }
    constexpr std::array parents{Relation::Mother, Relation::Father};
    SelectionReport report;
    report.explainer_ranking = global_importance(explanations, parents);
    if (report.explainer_ranking.empty())
    {
        throw CohortError("no parent nodes among the explained targets");
    }
    report.logistic_ranking = logistic_parent_ranking(data, split.train, config.l2);

    for (int n : config.n_top)
    {
        const std::vector<int> by_explainer = top_features(report.explainer_ranking, n);
        const std::vector<int> by_logistic = top_features(report.logistic_ranking, n);
        const double overlap = jaccard(by_explainer, by_logistic);
        for (const auto& [name, features] : {std::pair{"explainer", &by_explainer}, std::pair{"logistic", &by_logistic}})
        {
            const Cohort subset = select_features(data, *features);
            ModelConfig rc = config.retrain_model;
            rc.architecture = Architecture::GnnStatic;
            rc.edge_mode = data.mode;
            rc.n_long_features = n;
            rc.n_years = model.config().n_years;
            Model retrained(rc, config.model_seed);
            train(retrained, subset, split, config.train);
            const Predictions p = retrained.predict(subset, split.test, config.train.batch_size);
            report.rows.push_back({n, name, *features, auc_prc(p.model(), p.labels), overlap});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace
{

int feature_id(std::span<const int> ids, int position)
{
    return ids.empty() ? position : ids[static_cast<std::size_t>(position)];
}

}  // namespace

void write_importance_report(std::ostream& out, Relation relation, std::span<const FeatureScore> ranking,
                             std::span<const int> feature_ids)
{
    for (const FeatureScore& s : ranking)
    {
        fmt::print(out, "{},{},{:.6f},{}\n", relation_name(relation), feature_id(feature_ids, s.feature), s.score,
                   s.rank);
    }
}

void write_mask_dump(std::ostream& out, const ExplanationMasks& masks)
{
    out << "target_id,node_id,relative_type,node_mask,node_importance";
    for (int t = 0; t < masks.n_steps; ++t)
    {
        for (int f = 0; f < masks.n_features; ++f)
        {
            fmt::print(out, ",m_t{}_f{}", t, f);
        }
    }
    out << '\n';
    for (std::size_t i = 0; i < masks.node_mask.size(); ++i)
    {
        fmt::print(out, "{},{},{},{:.6f},{:.6f}", masks.target_id, masks.node_ids[i],
                   relation_name(masks.node_relations[i]), masks.node_mask[i], masks.node_importance[i]);
        for (Eigen::Index c = 0; c < masks.feature_mask.cols(); ++c)
        {
            fmt::print(out, ",{:.6f}", masks.feature_mask(static_cast<Eigen::Index>(i), c));
        }
        out << '\n';
    }
}

void write_selection_report(std::ostream& out, const SelectionReport& report, std::span<const int> feature_ids)
{
    out << "n_top,selector,auc_prc,jaccard,features\n";
    for (const SelectionRow& r : report.rows)
    {
        std::vector<int> ids;
        for (int p : r.features)
        {
            ids.push_back(feature_id(feature_ids, p));
        }
        fmt::print(out, "{},{},{:.6f},{:.6f},{}\n", r.n_top, r.selector, r.auc_prc, r.jaccard, fmt::join(ids, " "));
    }
}

void write_embeddings(std::ostream& out, const Model& model, const Cohort& data, std::span<const int> indices,
                      int batch_size)
{
    require_graph_model(model);
    if (batch_size < 1)
    {
        throw std::invalid_argument("write_embeddings: batch size must be >= 1");
    }
    bool header = false;
    for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size))
    {
        const std::size_t len = std::min(indices.size() - start, static_cast<std::size_t>(batch_size));
        const std::span<const int> slice = indices.subspan(start, len);
        const Batch b = make_batch(data, slice, model.config());
        Tape tape;
        const Context ctx{tape, false, nullptr, false};
        const Matrix& h = model.forward(ctx, b).conv_embedding.value();
        if (!header)
        {
            out << "target_id,node_id,relative_type";
            for (Eigen::Index c = 0; c < h.cols(); ++c)
            {
                fmt::print(out, ",e{}", c);
            }
            out << '\n';
            header = true;
        }
        for (std::size_t k = 0; k < len; ++k)
        {
            const FamilyGraph& g = data.graphs[static_cast<std::size_t>(slice[k])];
            const int base = b.offsets[k];
            for (int i = 0; i < g.n_nodes(); ++i)
            {
                fmt::print(out, "{},{},{}", g.target_id, g.node_ids[static_cast<std::size_t>(i)],
                           relation_name(g.node_relations[static_cast<std::size_t>(i)]));
                for (Eigen::Index c = 0; c < h.cols(); ++c)
                {
                    fmt::print(out, ",{:.6g}", h(base + i, c));
                }
                out << '\n';
            }
        }
    }
}

}  // namespace famgnn
