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

#include <cmath>
#include <map>
#include <random>

#include <catch_amalgamated.hpp>

#include "famgnn/tensor.h"

using namespace famgnn;  // NOLINT
using Catch::Matchers::WithinAbs;

namespace
{

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
    {
        m.data()[i] = d(rng);
    }
    return m;
}

// Random projection so that every primitive is checked through a scalar
// whose gradient touches all outputs unevenly.
Var project(Tape& t, const Var& v, std::uint64_t seed)
{
    Rng rng(seed);
    return sum(mul(v, t.constant(random_matrix(v.rows(), v.cols(), rng))));
}

}  // namespace

TEST_CASE("sigmoid and relu analytic values", "[tensor]")
{
    Tape t;
    Var x = t.variable(Matrix::Zero(1, 1));
    Var y = sigmoid(x);
    REQUIRE(y.value()(0, 0) == 0.5);
    t.backward(y);
    REQUIRE(t.grad(x)(0, 0) == 0.25);

    Tape t2;
    Matrix in(1, 2);
    in << -1.0, 2.0;
    Var z = t2.variable(in);
    Var r = relu(z);
    REQUIRE(r.value()(0, 0) == 0.0);
    REQUIRE(r.value()(0, 1) == 2.0);
    t2.backward(sum(r));
    REQUIRE(t2.grad(z)(0, 0) == 0.0);
    REQUIRE(t2.grad(z)(0, 1) == 1.0);
}

TEST_CASE("grad_check on a polynomial", "[tensor]")
{
    Matrix x(1, 3);
    x << 1, 2, 3;
    Tape t;
    Var v = t.variable(x);
    Var f = sum(mul(v, v));
    t.backward(f);
    const Matrix g = t.grad(v);
    REQUIRE(g(0, 0) == 2.0);
    REQUIRE(g(0, 1) == 4.0);
    REQUIRE(g(0, 2) == 6.0);

    std::vector<Matrix> inputs{x};
    const double err = grad_check([](Tape&, std::span<const Var> in) { return sum(mul(in[0], in[0])); }, inputs);
    REQUIRE(err < 1e-6);
}

TEST_CASE("grad_check rejects non-scalar functions", "[tensor]")
{
    std::vector<Matrix> inputs{Matrix::Ones(2, 2)};
    REQUIRE_THROWS_AS(grad_check([](Tape&, std::span<const Var> in) { return in[0]; }, inputs), std::logic_error);
}

TEST_CASE("matmul gradient matches finite differences", "[tensor]")
{
    Rng rng(7);
    std::vector<Matrix> inputs{random_matrix(4, 3, rng), random_matrix(3, 2, rng)};
    const double err = grad_check(
        [](Tape& t, std::span<const Var> in) { return project(t, matmul(in[0], in[1]), 11); }, inputs);
    REQUIRE(err < 1e-4);
}

TEST_CASE("every primitive passes grad_check at random points", "[tensor]")
{
    const std::vector<int> offsets{0, 2, 5};
    const std::vector<int> picks{4, 0, 0, 3};
    SparseOperator op;
    op.rows = 5;
    op.cols = 5;
    op.entries = {{0, 1, 0.5, true}, {1, 0, 0.5, true}, {2, 2, 1.0, false}, {3, 4, 0.25, true}, {4, 3, 2.0, true},
                  {0, 0, 0.3, false}};
    const std::vector<double> labels{1, 0, 1, 0, 0};
    const std::vector<double> weights{2.5, 0.8, 2.5, 0.8, 0.8};

    using Builder = std::function<Var(Tape&, std::span<const Var>)>;
    struct Case
    {
        int arity;
        Eigen::Index r0, c0, r1, c1;
        Builder f;
        bool positive = false;
    };
    std::map<std::string, Case> cases = {
        {"add", {2, 5, 3, 5, 3, [](Tape& t, auto in) { return project(t, add(in[0], in[1]), 1); }}},
        {"sub", {2, 5, 3, 5, 3, [](Tape& t, auto in) { return project(t, sub(in[0], in[1]), 2); }}},
        {"mul", {2, 5, 3, 5, 3, [](Tape& t, auto in) { return project(t, mul(in[0], in[1]), 3); }}},
        {"scale", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, scale(in[0], -1.7), 4); }}},
        {"add_scalar", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, add_scalar(in[0], 0.3), 5); }}},
        {"matmul", {2, 5, 3, 3, 4, [](Tape& t, auto in) { return project(t, matmul(in[0], in[1]), 6); }}},
        {"add_row", {2, 5, 3, 1, 3, [](Tape& t, auto in) { return project(t, add_row(in[0], in[1]), 7); }}},
        {"broadcast_rows", {1, 1, 3, 0, 0, [](Tape& t, auto in) { return project(t, broadcast_rows(in[0], 4), 8); }}},
        {"mul_rows", {2, 5, 3, 5, 1, [](Tape& t, auto in) { return project(t, mul_rows(in[0], in[1]), 9); }}},
        {"concat_cols",
         {2, 5, 3, 5, 2,
          [](Tape& t, auto in) {
              std::vector<Var> parts{in[0], in[1], in[0]};
              return project(t, concat_cols(parts), 10);
          }}},
        {"slice_cols", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, slice_cols(in[0], 1, 2), 11); }}},
        {"gather_rows",
         {1, 5, 3, 0, 0, [picks](Tape& t, auto in) { return project(t, gather_rows(in[0], picks), 12); }}},
        {"mean", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return scale(mean(mul(in[0], in[0])), 3.0); }}},
        {"sum_rows", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, sum_rows(in[0]), 13); }}},
        {"mean_rows", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, mean_rows(in[0]), 14); }}},
        {"sum_cols", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, sum_cols(in[0]), 15); }}},
        {"segment_sum",
         {1, 5, 3, 0, 0, [offsets](Tape& t, auto in) { return project(t, segment_sum(in[0], offsets), 16); }}},
        {"segment_mean",
         {1, 5, 3, 0, 0, [offsets](Tape& t, auto in) { return project(t, segment_mean(in[0], offsets), 17); }}},
        {"sigmoid", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, sigmoid(in[0]), 18); }}},
        {"tanh", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, famgnn::tanh(in[0]), 19); }}},
        {"relu", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, relu(in[0]), 20); }}},
        {"log", {1, 5, 3, 0, 0, [](Tape& t, auto in) { return project(t, famgnn::log(in[0]), 21); }, true}},
        {"dropout",
         {1, 5, 3, 0, 0,
          [](Tape& t, auto in) {
              Rng rng(99);
              return project(t, dropout(in[0], 0.4, true, rng), 22);
          }}},
        {"propagate", {1, 5, 3, 0, 0, [&op](Tape& t, auto in) { return project(t, propagate(in[0], op), 23); }}},
        {"propagate_scaled",
         {2, 5, 3, 5, 1,
          [&op](Tape& t, auto in) {
              Var s = in[1];
              return project(t, propagate(in[0], op, &s), 24);
          }}},
        {"bce_with_logits",
         {1, 5, 1, 0, 0, [&](Tape&, auto in) { return bce_with_logits(scale(in[0], 3.0), labels, weights); }}},
    };

    for (const auto& [name, c] : cases)
    {
        DYNAMIC_SECTION(name)
        {
            Rng rng(std::hash<std::string>{}(name));
            for (int trial = 0; trial < 10; ++trial)
            {
                std::vector<Matrix> inputs;
                const double lo = c.positive ? 0.2 : -1.0;
                inputs.push_back(random_matrix(c.r0, c.c0, rng, lo, 1.0));
                if (c.arity == 2)
                {
                    inputs.push_back(random_matrix(c.r1, c.c1, rng, lo, 1.0));
                }
                const double err = grad_check(c.f, inputs);
                INFO("trial " << trial);
                REQUIRE(err < 1e-4);
            }
        }
    }
}

TEST_CASE("backward is linear in the loss", "[tensor]")
{
    Rng rng(3);
    const Matrix w0 = random_matrix(3, 2, rng);
    const Matrix x0 = random_matrix(4, 3, rng);

    auto loss_a = [](const Var& x, const Var& w) { return sum(sigmoid(matmul(x, w))); };
    auto loss_b = [](const Var& x, const Var& w) { return mean(famgnn::tanh(matmul(x, w))); };

    Matrix ga, gb, gsum;
    {
        Tape t;
        Var w = t.variable(w0);
        t.backward(loss_a(t.constant(x0), w));
        ga = t.grad(w);
    }
    {
        Tape t;
        Var w = t.variable(w0);
        t.backward(loss_b(t.constant(x0), w));
        gb = t.grad(w);
    }
    {
        Tape t;
        Var w = t.variable(w0);
        Var x = t.constant(x0);
        t.backward(add(loss_a(x, w), loss_b(x, w)));
        gsum = t.grad(w);
    }
    REQUIRE((gsum - ga - gb).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dropout semantics", "[tensor]")
{
    Rng rng(5);
    const Matrix x = random_matrix(3, 4, rng);

    SECTION("rate 0 is the identity in both modes")
    {
        Tape t;
        Var v = t.constant(x);
        REQUIRE(dropout(v, 0.0, true, rng).value() == x);
        REQUIRE(dropout(v, 0.0, false, rng).value() == x);
    }
    SECTION("inference mode is the identity")
    {
        Tape t;
        REQUIRE(dropout(t.constant(x), 0.5, false, rng).value() == x);
    }
    SECTION("expectation equals input")
    {
        Matrix ones = Matrix::Ones(1, 1);
        double acc = 0.0;
        constexpr int draws = 10000;
        for (int i = 0; i < draws; ++i)
        {
            Tape t;
            acc += dropout(t.constant(ones), 0.5, true, rng).value()(0, 0);
        }
        REQUIRE_THAT(acc / draws, WithinAbs(1.0, 0.02));
    }
    SECTION("invalid rate")
    {
        Tape t;
        REQUIRE_THROWS_AS(dropout(t.constant(x), 1.0, true, rng), std::invalid_argument);
    }
}

TEST_CASE("shape errors report both shapes", "[tensor]")
{
    Tape t;
    Var a = t.constant(Matrix::Zero(2, 3));
    Var b = t.constant(Matrix::Zero(4, 2));
    try
    {
        (void)matmul(a, b);
        FAIL("expected ShapeError");
    }
    catch (const ShapeError& e)
    {
        const std::string msg = e.what();
        REQUIRE(msg.find("[2x3]") != std::string::npos);
        REQUIRE(msg.find("[4x2]") != std::string::npos);
    }
    REQUIRE_THROWS_AS(add(a, b), ShapeError);
}

TEST_CASE("parameter gradients accumulate into the owning parameter", "[tensor]")
{
    Parameter p("w", Matrix::Constant(2, 1, 0.5));
    Tape t;
    Var w = t.parameter(p);
    Var x = t.constant(Matrix::Ones(3, 2));
    t.backward(sum(matmul(x, w)));
    std::vector<Parameter*> params{&p};
    t.deposit_parameter_grads(params);
    REQUIRE(p.grad(0, 0) == 3.0);
    REQUIRE(p.grad(1, 0) == 3.0);

    Tape frozen;
    Var wf = frozen.parameter(p, false);
    frozen.backward(sum(matmul(frozen.constant(Matrix::Ones(3, 2)), wf)));
    REQUIRE(frozen.parameter_grad(p) == nullptr);
}
