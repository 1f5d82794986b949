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
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "famgnn/rng.h"

namespace famgnn
{

// Dense row-major 64-bit matrix. Every tensor in this engine is rank 2;
// vectors are 1xC rows or Rx1 columns.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Matrix& m);

/// A trainable tensor owned by a layer. `grad` has the same shape as `value`.
struct Parameter
{
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string name, Matrix value);
    void zero_grad();
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the
/// tape is alive.
class Var
{
public:
    Var() = default;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    bool requires_grad() const;
    Tape& tape() const { return *tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

/**
 * Record of one forward pass. Nodes are appended in evaluation order, so the
 * reverse of insertion order is a valid topological order for backward.
 * A tape is used for a single forward/backward cycle and then discarded.
 */
class Tape
{
public:
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var variable(Matrix value);
    /// Leaf that reads `p.value` in place. With `track` off the leaf behaves
    /// as a constant.
    Var parameter(const Parameter& p, bool track = true);

    /// Appends an op node; `backward` receives the node's output gradient and
    /// must route it to the inputs with `accumulate`.
    Var record(Matrix value, bool requires_grad, Backward backward);

    void accumulate(const Var& v, const Matrix& g);
    template <typename Expr>
    void accumulate_expr(const Var& v, const Expr& g)
    {
        if (!v.requires_grad())
        {
            return;
        }
        Node& n = nodes_[static_cast<std::size_t>(v.id())];
        if (n.grad.size() == 0)
        {
            n.grad = g;
        }
        else
        {
            n.grad += g;
        }
    }

    /// Reverse sweep from a 1x1 root.
    void backward(const Var& root);

    const Matrix& value(int id) const;
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    /// Gradient of a node after backward; zero matrix if nothing flowed there.
    Matrix grad(const Var& v) const;
    /// Gradient w.r.t. a parameter leaf created on this tape, or nullptr.
    const Matrix* parameter_grad(const Parameter& p) const;
    /// Adds every tracked parameter gradient into the parameter's `grad`.
    void deposit_parameter_grads(std::span<Parameter* const> params) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node
    {
        Matrix owned;
        const Matrix* ref = nullptr;
        Matrix grad;
        bool requires_grad = false;
        const Parameter* param = nullptr;
        Backward backward;

        const Matrix& value() const { return ref != nullptr ? *ref : owned; }
    };

    std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitives. All shape errors throw ShapeError naming both shapes.

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
/// a (RxC) + row (1xC) broadcast over rows.
Var add_row(const Var& a, const Var& row);
/// Broadcast a 1xC row to RxC.
Var broadcast_rows(const Var& row, Eigen::Index rows);
/// Scales row i of a (RxC) by s(i,0) where s is Rx1.
Var mul_rows(const Var& a, const Var& s);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count);
Var gather_rows(const Var& a, std::span<const int> rows);

Var sum(const Var& a);        // 1x1
Var mean(const Var& a);       // 1x1
Var sum_rows(const Var& a);   // reduce axis 0 -> 1xC
Var mean_rows(const Var& a);  // reduce axis 0 -> 1xC
Var sum_cols(const Var& a);   // reduce axis 1 -> Rx1
/// Sums consecutive row blocks: rows [offsets[g], offsets[g+1]) -> row g.
Var segment_sum(const Var& a, std::span<const int> offsets);
Var segment_mean(const Var& a, std::span<const int> offsets);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var log(const Var& a);
/// Inverted dropout; identity when `train` is false or rate is 0.
Var dropout(const Var& a, double rate, bool train, Rng& rng);

/// Sparse linear operator: out[dst] += weight * x[src] for every entry.
struct SparseOperator
{
    struct Entry
    {
        int dst;
        int src;
        double weight;
        bool scalable;  // subject to per-source scaling in propagate()
    };
    int rows = 0;
    int cols = 0;
    std::vector<Entry> entries;
};

/// out = Op * x. When `source_scale` (cols x 1) is given, every scalable
/// entry is further multiplied by source_scale(src). `op` must outlive the
/// tape.
Var propagate(const Var& x, const SparseOperator& op, const Var* source_scale = nullptr);

/// Mean over rows of weights(i) * BCE(sigmoid(logits(i)), labels(i)).
/// logits is Bx1; labels and weights have B entries.
Var bce_with_logits(const Var& logits, std::span<const double> labels, std::span<const double> weights);

// ---------------------------------------------------------------------------

using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

/**
 * Compares the tape gradient of a scalar function against central finite
 * differences. Returns max over all input entries of
 * |analytic - numeric| / max(1, |analytic|, |numeric|).
 * Throws std::logic_error if the function output is not 1x1.
 */
double grad_check(const ScalarFunction& f, std::span<const Matrix> inputs, double eps = 1e-5);

/// Same comparison for parameters read through Tape::parameter. Values are
/// perturbed in place and restored; existing `grad` contents are discarded.
double grad_check_parameters(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                             double eps = 1e-5);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

}  // namespace famgnn
