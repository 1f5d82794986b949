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


#include "famgnn/layers.h"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace famgnn
{

Parameter& ParameterSet::add(std::string name, Matrix value)
{
    if (find(name) != nullptr)
    {
        throw std::invalid_argument(fmt::format("duplicate parameter '{}'", name));
    }
    return items_.emplace_back(std::move(name), std::move(value));
}

Parameter* ParameterSet::find(std::string_view name)
{
    for (Parameter& p : items_)
    {
        if (p.name == name)
        {
            return &p;
        }
    }
    return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const
{
    return const_cast<ParameterSet*>(this)->find(name);
}

std::vector<Parameter*> ParameterSet::pointers()
{
    std::vector<Parameter*> out;
    out.reserve(items_.size());
    for (Parameter& p : items_)
    {
        out.push_back(&p);
    }
    return out;
}

std::size_t ParameterSet::n_scalars() const
{
    std::size_t n = 0;
    for (const Parameter& p : items_)
    {
        n += static_cast<std::size_t>(p.value.size());
    }
    return n;
}

void ParameterSet::zero_grad()
{
    for (Parameter& p : items_)
    {
        p.zero_grad();
    }
}

std::vector<Matrix> ParameterSet::snapshot() const
{
    std::vector<Matrix> out;
    out.reserve(items_.size());
    for (const Parameter& p : items_)
    {
        out.push_back(p.value);
    }
    return out;
}

void ParameterSet::restore(std::span<const Matrix> values)
{
    if (values.size() != items_.size())
    {
        throw std::invalid_argument(
            fmt::format("restore: {} values for {} parameters", values.size(), items_.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (values[i].rows() != items_[i].value.rows() || values[i].cols() != items_[i].value.cols())
        {
            throw ShapeError(fmt::format("restore: parameter '{}' is {} but value is {}", items_[i].name,
                                         shape_string(items_[i].value), shape_string(values[i])));
        }
        items_[i].value = values[i];
    }
}

Var activate(const Var& x, Activation act)
{
    return act == Activation::Relu ? relu(x) : x;
}

// ---------------------------------------------------------------------------

Dense Dense::create(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng, bool with_bias)
{
    Dense d;
    d.weight = &ps.add(name + ".weight", glorot_uniform(in, out, rng));
    if (with_bias)
    {
        d.bias = &ps.add(name + ".bias", Matrix::Zero(1, out));
    }
    return d;
}

Var Dense::forward(const Context& ctx, const Var& x) const
{
    Var y = matmul(x, ctx.param(*weight));
    return bias != nullptr ? add_row(y, ctx.param(*bias)) : y;
}

Mlp Mlp::create(ParameterSet& ps, const std::string& name, std::span<const int> dims, double dropout,
                bool final_activation, Rng& rng)
{
    if (dims.size() < 2)
    {
        throw std::invalid_argument("Mlp needs an input and at least one layer width");
    }
    Mlp m;
    m.dropout = dropout;
    m.final_activation = final_activation;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    {
        m.layers.push_back(Dense::create(ps, fmt::format("{}.{}", name, i), dims[i], dims[i + 1], rng));
    }
    return m;
}

Var Mlp::forward(const Context& ctx, const Var& x) const
{
    Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i)
    {
        h = layers[i].forward(ctx, h);
        if (i + 1 < layers.size() || final_activation)
        {
            h = relu(h);
            if (dropout > 0.0 && ctx.train)
            {
                h = famgnn::dropout(h, dropout, true, *ctx.rng);
            }
        }
    }
    return h;
}

// ---------------------------------------------------------------------------

std::string_view conv_kind_name(ConvKind k)
{
    return k == ConvKind::Gcn ? "gcn" : "kgnn";
}

ConvKind parse_conv_kind(std::string_view name)
{
    if (name == "gcn")
    {
        return ConvKind::Gcn;
    }
    if (name == "kgnn")
    {
        return ConvKind::Kgnn;
    }
    throw ConfigError(fmt::format("unknown convolution '{}'", name));
}

namespace
{

void check_edges(int n, std::span<const std::array<int, 2>> edges)
{
    for (const auto& e : edges)
    {
        if (e[0] < 0 || e[1] < 0 || e[0] >= n || e[1] >= n)
        {
            throw IntegrityError(fmt::format("edge ({}, {}) outside a graph of {} nodes", e[0], e[1], n));
        }
    }
}

}  // namespace

SparseOperator gcn_operator(int n, std::span<const std::array<int, 2>> edges)
{
    check_edges(n, edges);
    std::vector<double> degree(static_cast<std::size_t>(n), 1.0);
    for (const auto& e : edges)
    {
        degree[static_cast<std::size_t>(e[1])] += 1.0;
    }
    SparseOperator op;
    op.rows = n;
    op.cols = n;
    op.entries.reserve(edges.size() + static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
    {
        op.entries.push_back({i, i, 1.0 / degree[static_cast<std::size_t>(i)], false});
    }
    for (const auto& e : edges)
    {
        const double w = 1.0 / std::sqrt(degree[static_cast<std::size_t>(e[0])] * degree[static_cast<std::size_t>(e[1])]);
        op.entries.push_back({e[1], e[0], w, true});
    }
    return op;
}

SparseOperator neighbor_operator(int n, std::span<const std::array<int, 2>> edges, std::span<const double> weights)
{
    check_edges(n, edges);
    if (!weights.empty() && weights.size() != edges.size())
    {
        throw std::invalid_argument(
            fmt::format("neighbor_operator: {} weights for {} edges", weights.size(), edges.size()));
    }
    SparseOperator op;
    op.rows = n;
    op.cols = n;
    op.entries.reserve(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
        op.entries.push_back({edges[k][1], edges[k][0], weights.empty() ? 1.0 : weights[k], true});
    }
    return op;
}

GcnLayer GcnLayer::create(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng)
{
    return GcnLayer{&ps.add(name + ".weight", glorot_uniform(in, out, rng))};
}

Var GcnLayer::forward(const Context& ctx, const Var& x, const SparseOperator& op, Activation act,
                      const Var* source_scale) const
{
    return activate(propagate(matmul(x, ctx.param(*weight)), op, source_scale), act);
}

KgnnLayer KgnnLayer::create(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng)
{
    KgnnLayer k;
    k.self_weight = &ps.add(name + ".self_weight", glorot_uniform(in, out, rng));
    k.neighbor_weight = &ps.add(name + ".neighbor_weight", glorot_uniform(in, out, rng));
    return k;
}

Var KgnnLayer::forward(const Context& ctx, const Var& x, const SparseOperator& op, Activation act,
                       const Var* source_scale) const
{
    Var self = matmul(x, ctx.param(*self_weight));
    Var neigh = propagate(matmul(x, ctx.param(*neighbor_weight)), op, source_scale);
    return activate(add(self, neigh), act);
}

// ---------------------------------------------------------------------------

namespace
{

LstmDirection make_direction(ParameterSet& ps, const std::string& name, int input, int h, Rng& rng)
{
    LstmDirection d;
    d.input_weight = &ps.add(name + ".input_weight", glorot_uniform(input, 4 * h, rng));
    d.hidden_weight = &ps.add(name + ".hidden_weight", glorot_uniform(h, 4 * h, rng));
    d.bias = &ps.add(name + ".bias", Matrix::Zero(1, 4 * h));
    return d;
}

Var run_direction(const Context& ctx, const LstmDirection& d, std::span<const Var> steps, bool reverse)
{
    const Eigen::Index n = steps.front().rows();
    const Eigen::Index h = d.hidden_weight->value.rows();
    const Var wx = ctx.param(*d.input_weight);
    const Var wh = ctx.param(*d.hidden_weight);
    const Var b = ctx.param(*d.bias);
    Var hidden = ctx.tape.constant(Matrix::Zero(n, h));
    Var cell = hidden;
    const std::size_t t_max = steps.size();
    for (std::size_t k = 0; k < t_max; ++k)
    {
        const Var& x = steps[reverse ? t_max - 1 - k : k];
        Var z = add_row(k == 0 ? matmul(x, wx) : add(matmul(x, wx), matmul(hidden, wh)), b);
        Var i = sigmoid(slice_cols(z, 0, h));
        Var f = sigmoid(slice_cols(z, h, h));
        Var g = famgnn::tanh(slice_cols(z, 2 * h, h));
        Var o = sigmoid(slice_cols(z, 3 * h, h));
        cell = k == 0 ? mul(i, g) : add(mul(f, cell), mul(i, g));
        hidden = mul(o, famgnn::tanh(cell));
    }
    return hidden;
}

}  // namespace

BiLstm BiLstm::create(ParameterSet& ps, const std::string& name, int input, int hidden, Rng& rng)
{
    if (hidden < 2 || hidden % 2 != 0)
    {
        throw std::invalid_argument(fmt::format("BiLstm hidden size {} must be even and positive", hidden));
    }
    BiLstm l;
    l.input = input;
    l.hidden = hidden;
    l.forward_dir = make_direction(ps, name + ".fwd", input, hidden / 2, rng);
    l.backward_dir = make_direction(ps, name + ".bwd", input, hidden / 2, rng);
    return l;
}

Var BiLstm::forward(const Context& ctx, std::span<const Var> steps) const
{
    if (steps.empty())
    {
        throw std::invalid_argument("BiLstm: empty sequence");
    }
    const std::array<Var, 2> parts{run_direction(ctx, forward_dir, steps, false),
                                   run_direction(ctx, backward_dir, steps, true)};
    return concat_cols(parts);
}

// ---------------------------------------------------------------------------

std::string_view pool_mode_name(PoolMode m)
{
    switch (m)
    {
        case PoolMode::Target:
            return "target";
        case PoolMode::Sum:
            return "sum";
        case PoolMode::Mean:
            return "mean";
    }
    return "?";
}

PoolMode parse_pool_mode(std::string_view name)
{
    for (PoolMode m : {PoolMode::Target, PoolMode::Sum, PoolMode::Mean})
    {
        if (pool_mode_name(m) == name)
        {
            return m;
        }
    }
    throw ConfigError(fmt::format("unknown pooling '{}'", name));
}

Var pool(const Var& nodes, PoolMode mode, std::span<const int> offsets, std::span<const int> targets)
{
    if (offsets.size() < 2 || offsets.back() != nodes.rows())
    {
        throw ShapeError(fmt::format("pool: offsets do not cover {} node rows", nodes.rows()));
    }
    switch (mode)
    {
        case PoolMode::Sum:
            return segment_sum(nodes, offsets);
        case PoolMode::Mean:
            return segment_mean(nodes, offsets);
        case PoolMode::Target:
            break;
    }
    if (targets.size() + 1 != offsets.size())
    {
        throw std::invalid_argument(
            fmt::format("pool: {} targets for {} graphs", targets.size(), offsets.size() - 1));
    }
    for (std::size_t g = 0; g < targets.size(); ++g)
    {
        if (targets[g] < offsets[g] || targets[g] >= offsets[g + 1])
        {
            throw std::out_of_range(fmt::format("pool: target row {} outside graph {} rows [{}, {})", targets[g], g,
                                                offsets[g], offsets[g + 1]));
        }
    }
    return gather_rows(nodes, targets);
}

}  // namespace famgnn
