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

#include "famgnn/tensor.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace famgnn
{

std::string shape_string(const Matrix& m)
{
    return fmt::format("[{}x{}]", m.rows(), m.cols());
}

namespace
{

[[noreturn]] void shape_fail(std::string_view op, const Matrix& a, const Matrix& b)
{
    throw ShapeError(fmt::format("{}: incompatible shapes {} and {}", op, shape_string(a), shape_string(b)));
}

void require_same_tape(const Var& a, const Var& b)
{
    if (&a.tape() != &b.tape())
    {
        throw std::logic_error("operands recorded on different tapes");
    }
}

bool any_grad(const Var& a, const Var& b) { return a.requires_grad() || b.requires_grad(); }

}  // namespace

Parameter::Parameter(std::string name, Matrix value)
    : name(std::move(name)), value(std::move(value)), grad(Matrix::Zero(this->value.rows(), this->value.cols()))
{
}

void Parameter::zero_grad()
{
    grad.setZero(value.rows(), value.cols());
}

const Matrix& Var::value() const
{
    return tape_->value(id_);
}

bool Var::requires_grad() const
{
    return tape_->requires_grad(id_);
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Matrix value)
{
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::variable(Matrix value)
{
    Node n;
    n.owned = std::move(value);
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const Parameter& p, bool track)
{
    Node n;
    n.ref = &p.value;
    n.requires_grad = track;
    n.param = track ? &p : nullptr;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Matrix value, bool requires_grad, Backward backward)
{
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad)
    {
        n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(const Var& v, const Matrix& g)
{
    accumulate_expr(v, g);
}

const Matrix& Tape::value(int id) const
{
    return nodes_[static_cast<std::size_t>(id)].value();
}

void Tape::backward(const Var& root)
{
    if (root.rows() != 1 || root.cols() != 1)
    {
        throw std::logic_error(fmt::format("backward requires a 1x1 root, got {}", shape_string(root.value())));
    }
    if (!root.requires_grad())
    {
        return;
    }
    nodes_[static_cast<std::size_t>(root.id())].grad = Matrix::Ones(1, 1);
    for (int i = root.id(); i >= 0; --i)
    {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.backward || n.grad.size() == 0)
        {
            continue;
        }
        n.backward(*this, n.grad);
    }
}

Matrix Tape::grad(const Var& v) const
{
    const Node& n = nodes_[static_cast<std::size_t>(v.id())];
    if (n.grad.size() == 0)
    {
        return Matrix::Zero(n.value().rows(), n.value().cols());
    }
    return n.grad;
}

const Matrix* Tape::parameter_grad(const Parameter& p) const
{
    for (const Node& n : nodes_)
    {
        if (n.param == &p && n.grad.size() != 0)
        {
            return &n.grad;
        }
    }
    return nullptr;
}

void Tape::deposit_parameter_grads(std::span<Parameter* const> params) const
{
    for (const Node& n : nodes_)
    {
        if (n.param == nullptr || n.grad.size() == 0)
        {
            continue;
        }
        for (Parameter* p : params)
        {
            if (p == n.param)
            {
                p->grad += n.grad;
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Elementwise and linear algebra

Var add(const Var& a, const Var& b)
{
    require_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
    {
        shape_fail("add", a.value(), b.value());
    }
    Matrix out = a.value() + b.value();
    return a.tape().record(std::move(out), any_grad(a, b), [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var sub(const Var& a, const Var& b)
{
    require_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
    {
        shape_fail("sub", a.value(), b.value());
    }
    Matrix out = a.value() - b.value();
    return a.tape().record(std::move(out), any_grad(a, b), [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate_expr(b, -g);
    });
}

Var mul(const Var& a, const Var& b)
{
    require_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
    {
        shape_fail("mul", a.value(), b.value());
    }
    Matrix out = a.value().cwiseProduct(b.value());
    return a.tape().record(std::move(out), any_grad(a, b), [a, b](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.cwiseProduct(b.value()));
        t.accumulate_expr(b, g.cwiseProduct(a.value()));
    });
}

Var scale(const Var& a, double s)
{
    Matrix out = a.value() * s;
    return a.tape().record(std::move(out), a.requires_grad(), [a, s](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g * s);
    });
}

Var add_scalar(const Var& a, double s)
{
    Matrix out = a.value().array() + s;
    return a.tape().record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
    });
}

Var matmul(const Var& a, const Var& b)
{
    require_same_tape(a, b);
    if (a.cols() != b.rows())
    {
        shape_fail("matmul", a.value(), b.value());
    }
    Matrix out = a.value() * b.value();
    return a.tape().record(std::move(out), any_grad(a, b), [a, b](Tape& t, const Matrix& g) {
        if (a.requires_grad())
        {
            t.accumulate_expr(a, g * b.value().transpose());
        }
        if (b.requires_grad())
        {
            t.accumulate_expr(b, a.value().transpose() * g);
        }
    });
}

Var add_row(const Var& a, const Var& row)
{
    require_same_tape(a, row);
    if (row.rows() != 1 || row.cols() != a.cols())
    {
        shape_fail("add_row", a.value(), row.value());
    }
    Matrix out = a.value().rowwise() + row.value().row(0);
    return a.tape().record(std::move(out), any_grad(a, row), [a, row](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate_expr(row, g.colwise().sum());
    });
}

Var broadcast_rows(const Var& row, Eigen::Index rows)
{
    if (row.rows() != 1)
    {
        throw ShapeError(fmt::format("broadcast_rows: expected a 1xC row, got {}", shape_string(row.value())));
    }
    Matrix out = row.value().replicate(rows, 1);
    return row.tape().record(std::move(out), row.requires_grad(), [row](Tape& t, const Matrix& g) {
        t.accumulate_expr(row, g.colwise().sum());
    });
}

Var mul_rows(const Var& a, const Var& s)
{
    require_same_tape(a, s);
    if (s.cols() != 1 || s.rows() != a.rows())
    {
        shape_fail("mul_rows", a.value(), s.value());
    }
    Matrix out = s.value().col(0).asDiagonal() * a.value();
    return a.tape().record(std::move(out), any_grad(a, s), [a, s](Tape& t, const Matrix& g) {
        if (a.requires_grad())
        {
            t.accumulate_expr(a, s.value().col(0).asDiagonal() * g);
        }
        if (s.requires_grad())
        {
            t.accumulate_expr(s, g.cwiseProduct(a.value()).rowwise().sum());
        }
    });
}

Var concat_cols(std::span<const Var> parts)
{
    if (parts.empty())
    {
        throw ShapeError("concat_cols: no operands");
    }
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    bool needs_grad = false;
    for (const Var& p : parts)
    {
        require_same_tape(parts.front(), p);
        if (p.rows() != rows)
        {
            shape_fail("concat_cols", parts.front().value(), p.value());
        }
        cols += p.cols();
        needs_grad = needs_grad || p.requires_grad();
    }
    Matrix out(rows, cols);
    Eigen::Index at = 0;
    for (const Var& p : parts)
    {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    std::vector<Var> saved(parts.begin(), parts.end());
    return parts.front().tape().record(std::move(out), needs_grad, [saved](Tape& t, const Matrix& g) {
        Eigen::Index offset = 0;
        for (const Var& p : saved)
        {
            t.accumulate_expr(p, g.middleCols(offset, p.cols()));
            offset += p.cols();
        }
    });
}

Var slice_cols(const Var& a, Eigen::Index begin, Eigen::Index count)
{
    if (begin < 0 || count < 0 || begin + count > a.cols())
    {
        throw ShapeError(fmt::format("slice_cols: columns [{}, {}) out of range for {}", begin, begin + count,
                                     shape_string(a.value())));
    }
    Matrix out = a.value().middleCols(begin, count);
    return a.tape().record(std::move(out), a.requires_grad(), [a, begin, count](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.middleCols(begin, count) = g;
        t.accumulate_expr(a, full);
    });
}

Var gather_rows(const Var& a, std::span<const int> rows)
{
    Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        if (rows[i] < 0 || rows[i] >= a.rows())
        {
            throw std::out_of_range(
                fmt::format("gather_rows: row {} out of range for {}", rows[i], shape_string(a.value())));
        }
        out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
    }
    std::vector<int> idx(rows.begin(), rows.end());
    return a.tape().record(std::move(out), a.requires_grad(), [a, idx](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
        {
            full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
        }
        t.accumulate_expr(a, full);
    });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(const Var& a)
{
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return a.tape().record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

Var mean(const Var& a)
{
    const auto n = static_cast<double>(a.value().size());
    if (n == 0)
    {
        throw ShapeError("mean: empty operand");
    }
    return scale(sum(a), 1.0 / n);
}

Var sum_rows(const Var& a)
{
    Matrix out = a.value().colwise().sum();
    return a.tape().record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.replicate(a.rows(), 1));
    });
}

Var mean_rows(const Var& a)
{
    if (a.rows() == 0)
    {
        throw ShapeError("mean_rows: no rows");
    }
    return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

Var sum_cols(const Var& a)
{
    Matrix out = a.value().rowwise().sum();
    return a.tape().record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.replicate(1, a.cols()));
    });
}

namespace
{

void check_offsets(const Var& a, std::span<const int> offsets)
{
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != a.rows())
    {
        throw ShapeError(fmt::format("segment offsets do not cover {}", shape_string(a.value())));
    }
    for (std::size_t g = 1; g < offsets.size(); ++g)
    {
        if (offsets[g] < offsets[g - 1])
        {
            throw ShapeError("segment offsets must be non-decreasing");
        }
    }
}

Var segment_reduce(const Var& a, std::span<const int> offsets, bool average)
{
    check_offsets(a, offsets);
    const auto groups = static_cast<Eigen::Index>(offsets.size() - 1);
    std::vector<double> factor(static_cast<std::size_t>(groups));
    Matrix out = Matrix::Zero(groups, a.cols());
    for (Eigen::Index g = 0; g < groups; ++g)
    {
        const int lo = offsets[static_cast<std::size_t>(g)];
        const int hi = offsets[static_cast<std::size_t>(g) + 1];
        const int n = hi - lo;
        factor[static_cast<std::size_t>(g)] = average && n > 0 ? 1.0 / n : 1.0;
        for (int r = lo; r < hi; ++r)
        {
            out.row(g) += a.value().row(r);
        }
        out.row(g) *= factor[static_cast<std::size_t>(g)];
    }
    std::vector<int> off(offsets.begin(), offsets.end());
    return a.tape().record(std::move(out), a.requires_grad(), [a, off, factor](Tape& t, const Matrix& g) {
        Matrix full(a.rows(), a.cols());
        for (std::size_t s = 0; s + 1 < off.size(); ++s)
        {
            for (int r = off[s]; r < off[s + 1]; ++r)
            {
                full.row(r) = g.row(static_cast<Eigen::Index>(s)) * factor[s];
            }
        }
        t.accumulate_expr(a, full);
    });
}

}  // namespace

Var segment_sum(const Var& a, std::span<const int> offsets)
{
    return segment_reduce(a, offsets, false);
}

Var segment_mean(const Var& a, std::span<const int> offsets)
{
    return segment_reduce(a, offsets, true);
}

// ---------------------------------------------------------------------------
// Nonlinearities

Var sigmoid(const Var& a)
{
    Matrix out = a.value().unaryExpr([](double x) {
        if (x >= 0)
        {
            return 1.0 / (1.0 + std::exp(-x));
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
    Matrix y = out;
    return a.tape().record(std::move(out), a.requires_grad(), [a, y = std::move(y)](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
    });
}

Var tanh(const Var& a)
{
    Matrix out = a.value().array().tanh().matrix();
    Matrix y = out;
    return a.tape().record(std::move(out), a.requires_grad(), [a, y = std::move(y)](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
    });
}

Var relu(const Var& a)
{
    Matrix out = a.value().cwiseMax(0.0);
    return a.tape().record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.cwiseProduct(a.value().unaryExpr([](double x) { return x > 0 ? 1.0 : 0.0; })));
    });
}

Var log(const Var& a)
{
    Matrix out = a.value().array().log().matrix();
    return a.tape().record(std::move(out), a.requires_grad(), [a](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.cwiseQuotient(a.value()));
    });
}

Var dropout(const Var& a, double rate, bool train, Rng& rng)
{
    if (rate < 0.0 || rate >= 1.0)
    {
        throw std::invalid_argument(fmt::format("dropout rate {} outside [0, 1)", rate));
    }
    if (!train || rate == 0.0)
    {
        return a;
    }
    std::bernoulli_distribution keep(1.0 - rate);
    const double inv = 1.0 / (1.0 - rate);
    Matrix mask(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i)
    {
        mask.data()[i] = keep(rng) ? inv : 0.0;
    }
    Matrix out = a.value().cwiseProduct(mask);
    return a.tape().record(std::move(out), a.requires_grad(), [a, mask = std::move(mask)](Tape& t, const Matrix& g) {
        t.accumulate_expr(a, g.cwiseProduct(mask));
    });
}

// ---------------------------------------------------------------------------
// Graph propagation and loss

Var propagate(const Var& x, const SparseOperator& op, const Var* source_scale)
{
    if (x.rows() != op.cols)
    {
        throw ShapeError(fmt::format("propagate: operator is {}x{} but input is {}", op.rows, op.cols,
                                     shape_string(x.value())));
    }
    if (source_scale != nullptr && (source_scale->rows() != op.cols || source_scale->cols() != 1))
    {
        shape_fail("propagate(scale)", x.value(), source_scale->value());
    }
    const Matrix& xv = x.value();
    Matrix out = Matrix::Zero(op.rows, xv.cols());
    for (const auto& e : op.entries)
    {
        double w = e.weight;
        if (source_scale != nullptr && e.scalable)
        {
            w *= source_scale->value()(e.src, 0);
        }
        out.row(e.dst) += w * xv.row(e.src);
    }
    const bool needs_grad = x.requires_grad() || (source_scale != nullptr && source_scale->requires_grad());
    Var scale_var = source_scale != nullptr ? *source_scale : Var{};
    const SparseOperator* opp = &op;
    return x.tape().record(std::move(out), needs_grad, [x, scale_var, opp](Tape& t, const Matrix& g) {
        const bool scaled = scale_var.valid();
        const Matrix& xv = x.value();
        if (x.requires_grad())
        {
            Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
            for (const auto& e : opp->entries)
            {
                double w = e.weight;
                if (scaled && e.scalable)
                {
                    w *= scale_var.value()(e.src, 0);
                }
                gx.row(e.src) += w * g.row(e.dst);
            }
            t.accumulate_expr(x, gx);
        }
        if (scaled && scale_var.requires_grad())
        {
            Matrix gs = Matrix::Zero(xv.rows(), 1);
            for (const auto& e : opp->entries)
            {
                if (e.scalable)
                {
                    gs(e.src, 0) += e.weight * xv.row(e.src).dot(g.row(e.dst));
                }
            }
            t.accumulate_expr(scale_var, gs);
        }
    });
}

Var bce_with_logits(const Var& logits, std::span<const double> labels, std::span<const double> weights)
{
    const auto n = static_cast<std::size_t>(logits.rows());
    if (logits.cols() != 1 || labels.size() != n || weights.size() != n || n == 0)
    {
        throw ShapeError(fmt::format("bce_with_logits: logits {} with {} labels and {} weights",
                                     shape_string(logits.value()), labels.size(), weights.size()));
    }
    // BCE(sigmoid(z), y) = softplus(z) - y z, evaluated stably.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double z = logits.value()(static_cast<Eigen::Index>(i), 0);
        const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
        total += weights[i] * (softplus - labels[i] * z);
    }
    Matrix out(1, 1);
    out(0, 0) = total / static_cast<double>(n);
    std::vector<double> y(labels.begin(), labels.end());
    std::vector<double> w(weights.begin(), weights.end());
    return logits.tape().record(std::move(out), logits.requires_grad(), [logits, y, w](Tape& t, const Matrix& g) {
        const auto n = static_cast<double>(y.size());
        Matrix gl(static_cast<Eigen::Index>(y.size()), 1);
        for (std::size_t i = 0; i < y.size(); ++i)
        {
            const double z = logits.value()(static_cast<Eigen::Index>(i), 0);
            const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            gl(static_cast<Eigen::Index>(i), 0) = g(0, 0) * w[i] * (p - y[i]) / n;
        }
        t.accumulate_expr(logits, gl);
    });
}

// ---------------------------------------------------------------------------

double grad_check(const ScalarFunction& f, std::span<const Matrix> inputs, double eps)
{
    std::vector<Matrix> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(inputs.size());
        for (const Matrix& m : inputs)
        {
            vars.push_back(tape.variable(m));
        }
        Var out = f(tape, vars);
        if (out.rows() != 1 || out.cols() != 1)
        {
            throw std::logic_error(
                fmt::format("grad_check: function must be scalar-valued, got {}", shape_string(out.value())));
        }
        tape.backward(out);
        for (const Var& v : vars)
        {
            analytic.push_back(tape.grad(v));
        }
    }

    auto evaluate = [&](const std::vector<Matrix>& point) {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(point.size());
        for (const Matrix& m : point)
        {
            vars.push_back(tape.constant(m));
        }
        return f(tape, vars).value()(0, 0);
    };

    std::vector<Matrix> point(inputs.begin(), inputs.end());
    double worst = 0.0;
    for (std::size_t k = 0; k < point.size(); ++k)
    {
        for (Eigen::Index i = 0; i < point[k].size(); ++i)
        {
            const double saved = point[k].data()[i];
            point[k].data()[i] = saved + eps;
            const double up = evaluate(point);
            point[k].data()[i] = saved - eps;
            const double down = evaluate(point);
            point[k].data()[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[k].data()[i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

double grad_check_parameters(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params, double eps)
{
    std::vector<Matrix> analytic;
    {
        for (Parameter* p : params)
        {
            p->zero_grad();
        }
        Tape tape;
        Var out = f(tape);
        if (out.rows() != 1 || out.cols() != 1)
        {
            throw std::logic_error(fmt::format("grad_check_parameters: function must be scalar-valued, got {}",
                                               shape_string(out.value())));
        }
        tape.backward(out);
        tape.deposit_parameter_grads(params);
        for (Parameter* p : params)
        {
            analytic.push_back(p->grad);
        }
    }
    auto evaluate = [&] {
        Tape tape;
        return f(tape).value()(0, 0);
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k)
    {
        Matrix& v = params[k]->value;
        for (Eigen::Index i = 0; i < v.size(); ++i)
        {
            const double saved = v.data()[i];
            v.data()[i] = saved + eps;
            const double up = evaluate();
            v.data()[i] = saved - eps;
            const double down = evaluate();
            v.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[k].data()[i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix m(fan_in, fan_out);
    for (Eigen::Index i = 0; i < m.size(); ++i)
    {
        m.data()[i] = dist(rng);
    }
    return m;
}

}  // namespace famgnn
