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

#include <array>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "famgnn/errors.h"
#include "famgnn/tensor.h"

namespace famgnn
{

/// Owns trainable tensors. Addresses stay valid for the lifetime of the set,
/// including across moves.
class ParameterSet
{
public:
    ParameterSet() = default;
    ParameterSet(const ParameterSet&) = delete;
    ParameterSet& operator=(const ParameterSet&) = delete;
    ParameterSet(ParameterSet&&) = default;
    ParameterSet& operator=(ParameterSet&&) = default;

    /// Throws std::invalid_argument on a duplicate name.
    Parameter& add(std::string name, Matrix value);
    Parameter* find(std::string_view name);
    const Parameter* find(std::string_view name) const;

    std::vector<Parameter*> pointers();
    std::deque<Parameter>& items() { return items_; }
    const std::deque<Parameter>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    std::size_t n_scalars() const;
    void zero_grad();

    /// Copies of every parameter value, in insertion order.
    std::vector<Matrix> snapshot() const;
    void restore(std::span<const Matrix> values);

private:
    std::deque<Parameter> items_;
};

/// Per-forward state shared by all layers.
struct Context
{
    Tape& tape;
    bool train = false;
    Rng* rng = nullptr;      // required when train is true and dropout is active
    bool track_params = true;  // false treats parameters as constants

    Var param(const Parameter& p) const { return tape.parameter(p, track_params); }
};

enum class Activation
{
    Relu,
    Identity,
};

Var activate(const Var& x, Activation act);

/// Affine map x W + b. The bias is optional.
struct Dense
{
    Parameter* weight = nullptr;
    Parameter* bias = nullptr;

    static Dense create(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng, bool with_bias = true);
    Var forward(const Context& ctx, const Var& x) const;
    int in() const { return static_cast<int>(weight->value.rows()); }
    int out() const { return static_cast<int>(weight->value.cols()); }
};

/**
 * Dense stack: affine, ReLU, dropout between consecutive layers. The last
 * layer is linear unless `final_activation` is set, in which case it is
 * followed by ReLU and dropout as well.
 */
struct Mlp
{
    std::vector<Dense> layers;
    double dropout = 0.0;
    bool final_activation = false;

    /// `dims` lists input width then each layer's width; needs >= 2 entries.
    static Mlp create(ParameterSet& ps, const std::string& name, std::span<const int> dims, double dropout,
                      bool final_activation, Rng& rng);
    Var forward(const Context& ctx, const Var& x) const;
    int out() const { return layers.back().out(); }
};

// ---------------------------------------------------------------------------
// Graph convolutions

enum class ConvKind
{
    Gcn,
    Kgnn,
};

std::string_view conv_kind_name(ConvKind k);
ConvKind parse_conv_kind(std::string_view name);

/**
 * D^-1/2 (A + I) D^-1/2 for an undirected edge list given in both directions.
 * Self-loop entries are not subject to source scaling. Throws IntegrityError
 * on an endpoint outside [0, n).
 */
SparseOperator gcn_operator(int n, std::span<const std::array<int, 2>> edges);

/// Neighbor sum. `weights` (one per edge, e.g. r) may be empty for unit weights.
SparseOperator neighbor_operator(int n, std::span<const std::array<int, 2>> edges,
                                 std::span<const double> weights = {});

/// act(Op X W), Op from gcn_operator. No bias.
struct GcnLayer
{
    Parameter* weight = nullptr;

    static GcnLayer create(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng);
    Var forward(const Context& ctx, const Var& x, const SparseOperator& op, Activation act,
                const Var* source_scale = nullptr) const;
};

/// act(X W1 + Op X W2), Op from neighbor_operator. No bias.
struct KgnnLayer
{
    Parameter* self_weight = nullptr;
    Parameter* neighbor_weight = nullptr;

    static KgnnLayer create(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng);
    Var forward(const Context& ctx, const Var& x, const SparseOperator& op, Activation act,
                const Var* source_scale = nullptr) const;
};

// ---------------------------------------------------------------------------
// Sequence encoder

struct LstmDirection
{
    Parameter* input_weight = nullptr;   // F x 4h, gate order i, f, g, o
    Parameter* hidden_weight = nullptr;  // h x 4h
    Parameter* bias = nullptr;           // 1 x 4h
};

/**
 * Single-layer bidirectional LSTM. The encoding is the forward direction's
 * final hidden state followed by the backward direction's, each of width
 * hidden / 2.
 */
struct BiLstm
{
    LstmDirection forward_dir;
    LstmDirection backward_dir;
    int input = 0;
    int hidden = 0;  // total over both directions

    static BiLstm create(ParameterSet& ps, const std::string& name, int input, int hidden, Rng& rng);
    /// `steps` holds T >= 1 matrices of shape N x F, one per time step.
    Var forward(const Context& ctx, std::span<const Var> steps) const;
};

// ---------------------------------------------------------------------------
// Pooling

enum class PoolMode
{
    Target,
    Sum,
    Mean,
};

std::string_view pool_mode_name(PoolMode m);
PoolMode parse_pool_mode(std::string_view name);

/**
 * Reduces each graph's block of node rows [offsets[g], offsets[g+1]) to one
 * row. Target mode picks row targets[g], which must lie inside the block.
 */
Var pool(const Var& nodes, PoolMode mode, std::span<const int> offsets, std::span<const int> targets);

}  // namespace famgnn
