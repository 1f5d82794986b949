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


#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "famgnn/trainer.h"
#include "support.h"

using namespace famgnn;
using famgnn::testing::cohort_of;
using famgnn::testing::random_graph;

namespace
{

std::vector<double> make_labels(int cases, int controls)
{
    std::vector<double> y(static_cast<std::size_t>(cases + controls), 0.0);
    for (int i = 0; i < cases; ++i)
    {
        y[static_cast<std::size_t>(i) * (controls + cases) / cases] = 1.0;
    }
    return y;
}

/// Age alone separates the classes; `flip` inverts the labels.
std::vector<FamilyGraph> separable_graphs(int n, std::uint64_t seed, bool flip = false)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<FamilyGraph> out;
    for (int i = 0; i < n; ++i)
    {
        const int label = i % 3 == 0 ? 1 : 0;
        FamilyGraph g = random_graph(3, 1, 10, rng, flip ? 1 - label : label);
        g.node_static(0, 0) = label == 1 ? 0.7 + 0.3 * unit(rng) : 0.3 * unit(rng);
        out.push_back(std::move(g));
    }
    return out;
}

ModelConfig baseline_config(double dropout)
{
    ModelConfig c;
    c.architecture = Architecture::MlpAgeSex;
    c.dropout = dropout;
    c.n_long_features = 1;
    c.n_years = 10;
    return c;
}

bool same_parameters(const std::vector<Matrix>& a, const std::vector<Matrix>& b)
{
    if (a.size() != b.size())
    {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        if (a[i] != b[i])
        {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("split_dataset honours the case and control ratios", "[trainer]")
{
    const std::vector<double> y = make_labels(100, 10000);
    SplitSpec spec;
    spec.seed = 7;
    const Split s = split_dataset(y, spec);

    auto cases_in = [&](const std::vector<int>& v) {
        return std::count_if(v.begin(), v.end(), [&](int i) { return y[static_cast<std::size_t>(i)] == 1.0; });
    };
    CHECK(cases_in(s.train) == 70);
    CHECK(cases_in(s.val) == 10);
    CHECK(cases_in(s.test) == 20);
    // 70 / 0.15 * 0.85 = 396.67, floored so the case share never drops below 15%.
    CHECK(s.train.size() - 70 == 396);
    CHECK(70.0 / static_cast<double>(s.train.size()) >= 0.15);
    // Val and test keep the natural 1:100 ratio.
    CHECK(s.val.size() - 10 == 1000);
    CHECK(s.test.size() - 20 == 2000);

    std::set<int> all;
    for (const auto* v : {&s.train, &s.val, &s.test})
    {
        CHECK(std::is_sorted(v->begin(), v->end()));
        for (int i : *v)
        {
            CHECK(all.insert(i).second);
        }
    }
    for (int i = 0; i < static_cast<int>(y.size()); ++i)
    {
        if (y[static_cast<std::size_t>(i)] == 1.0)
        {
            CHECK(all.count(i) == 1);
        }
    }
}

TEST_CASE("split_dataset is deterministic and guards its inputs", "[trainer]")
{
    const std::vector<double> y = make_labels(40, 2000);
    SplitSpec spec;
    spec.seed = 3;
    const Split a = split_dataset(y, spec);
    const Split b = split_dataset(y, spec);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    spec.seed = 4;
    CHECK(split_dataset(y, spec).train != a.train);

    CHECK_THROWS_AS(split_dataset(std::vector<double>(500, 0.0), spec), SplitError);
    CHECK_THROWS_AS(split_dataset(make_labels(9, 500), spec), SplitError);
    // 70 training cases need 396 controls on their own.
    CHECK_THROWS_AS(split_dataset(make_labels(100, 300), spec), SplitError);
    SplitSpec bad = spec;
    bad.val_fraction = 0.3;
    CHECK_THROWS_AS(split_dataset(y, bad), ParameterError);
}

TEST_CASE("EarlyStopping follows the patience rule", "[trainer]")
{
    EarlyStopping s(2);
    CHECK_FALSE(s.update(1, 1.0));
    CHECK(s.improved());
    CHECK_FALSE(s.update(2, 0.8));
    CHECK_FALSE(s.update(3, 0.9));
    CHECK_FALSE(s.improved());
    CHECK_FALSE(s.update(4, 0.7));
    CHECK_FALSE(s.update(5, 0.7));
    CHECK(s.update(6, 0.75));
    CHECK(s.best_epoch() == 4);
    CHECK(s.best_loss() == 0.7);
    CHECK_THROWS_AS(EarlyStopping(0), ConfigError);
}

TEST_CASE("train with a zero learning rate leaves parameters unchanged", "[trainer]")
{
    const Cohort data = cohort_of(separable_graphs(90, 1));
    Split split;
    for (int i = 0; i < 90; ++i)
    {
        (i < 60 ? split.train : split.val).push_back(i);
    }
    Model model(baseline_config(0.5), 11);
    const auto before = model.parameters().snapshot();
    TrainConfig tc;
    tc.learning_rate = 0.0;
    tc.max_epochs = 4;
    tc.batch_size = 16;
    const TrainResult r = train(model, data, split, tc);
    CHECK(same_parameters(before, model.parameters().snapshot()));
    CHECK(r.history.size() >= 1);
}

TEST_CASE("train lowers the loss on a separable set", "[trainer]")
{
    const Cohort data = cohort_of(separable_graphs(150, 2));
    Split split;
    for (int i = 0; i < 150; ++i)
    {
        (i < 120 ? split.train : split.val).push_back(i);
    }
    Model model(baseline_config(0.0), 5);
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.max_epochs = 5;
    tc.patience = 5;
    tc.batch_size = 120;
    const TrainResult r = train(model, data, split, tc);
    REQUIRE(r.history.size() == 5);
    for (std::size_t e = 1; e < r.history.size(); ++e)
    {
        CHECK(r.history[e].train_loss <= r.history[e - 1].train_loss);
    }
    CHECK(r.weights.case_weight == Catch::Approx(3.0));
    CHECK(r.weights.control_weight == Catch::Approx(1.5));

    std::ostringstream out;
    write_history(out, r.history);
    const std::string text = out.str();
    CHECK(text.rfind("epoch,train_loss,val_loss,lr,stopped_flag\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

TEST_CASE("train stops early and returns the best-validation parameters", "[trainer]")
{
    // Validation labels are the inverse of training labels, so every step
    // that lowers the training loss raises the validation loss.
    std::vector<FamilyGraph> graphs = separable_graphs(120, 3);
    for (FamilyGraph& g : separable_graphs(60, 4, true))
    {
        graphs.push_back(std::move(g));
    }
    const Cohort data = cohort_of(std::move(graphs));
    Split split;
    for (int i = 0; i < 180; ++i)
    {
        (i < 120 ? split.train : split.val).push_back(i);
    }
    Model model(baseline_config(0.0), 9);
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.patience = 1;
    tc.batch_size = 30;
    std::vector<std::vector<Matrix>> seen;
    const TrainResult r = train(model, data, split, tc, [&](const EpochRecord&, const ParameterSet& ps) {
        seen.push_back(ps.snapshot());
    });
    REQUIRE(r.history.size() == 2);
    CHECK(r.history[1].val_loss > r.history[0].val_loss);
    CHECK(r.stopped_early);
    CHECK(r.history[1].stopped);
    CHECK(r.best_epoch == 1);
    CHECK(r.best_val_loss == r.history[0].val_loss);
    CHECK(same_parameters(seen[0], model.parameters().snapshot()));
    CHECK_FALSE(same_parameters(seen[1], model.parameters().snapshot()));
}

TEST_CASE("train is reproducible for a fixed seed", "[trainer]")
{
    const Cohort data = cohort_of(separable_graphs(90, 5));
    Split split;
    for (int i = 0; i < 90; ++i)
    {
        (i < 70 ? split.train : split.val).push_back(i);
    }
    TrainConfig tc;
    tc.max_epochs = 3;
    tc.batch_size = 20;
    tc.seed = 21;
    Model a(baseline_config(0.5), 1);
    Model b(baseline_config(0.5), 1);
    const TrainResult ra = train(a, data, split, tc);
    const TrainResult rb = train(b, data, split, tc);
    CHECK(same_parameters(a.parameters().snapshot(), b.parameters().snapshot()));
    CHECK(ra.history.back().val_loss == rb.history.back().val_loss);
}

TEST_CASE("tune_threshold maximises F1", "[trainer]")
{
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
    const std::vector<double> y{0, 0, 1, 1};
    const double t = tune_threshold(s, y);
    CHECK(t > 0.2);
    CHECK(t <= 0.8);
    const Confusion c = confusion(s, y, t);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);

    CHECK(tune_threshold(std::vector<double>{0.4, 0.4, 0.4}, std::vector<double>{0, 1, 0}) == 0.5);
    CHECK_THROWS_AS(tune_threshold(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), MetricError);

    // Brute-force oracle: every candidate cut point, ties to the larger threshold.
    Rng rng(17);
    std::uniform_int_distribution<int> level(0, 9);
    for (int trial = 0; trial < 300; ++trial)
    {
        const int n = 5 + trial % 30;
        std::vector<double> sc(static_cast<std::size_t>(n));
        std::vector<double> lb(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
        {
            sc[static_cast<std::size_t>(i)] = level(rng) / 10.0;
            lb[static_cast<std::size_t>(i)] = static_cast<double>(rng() % 2);
        }
        lb[0] = 1.0;
        lb[1] = 0.0;
        if (*std::min_element(sc.begin(), sc.end()) == *std::max_element(sc.begin(), sc.end()))
        {
            continue;
        }
        double best_f1 = -1.0;
        double best_t = 0.0;
        for (double cut : sc)
        {
            const Confusion cc = confusion(sc, lb, cut);
            const double f1 = 2.0 * cc.tp / static_cast<double>(2 * cc.tp + cc.fp + cc.fn);
            if (f1 > best_f1 || (f1 == best_f1 && cut > best_t))
            {
                best_f1 = f1;
                best_t = cut;
            }
        }
        CHECK(tune_threshold(sc, lb) == best_t);
    }
}

TEST_CASE("mc_dropout_eval summarises stochastic passes", "[trainer]")
{
    Rng rng(23);
    std::vector<FamilyGraph> graphs;
    for (int i = 0; i < 60; ++i)
    {
        graphs.push_back(random_graph(4 + i % 4, 1, 10, rng, i % 4 == 0 ? 1 : 0));
    }
    const Cohort data = cohort_of(std::move(graphs));
    const auto idx = famgnn::testing::iota_vector(60);

    ModelConfig c;
    c.architecture = Architecture::GnnLstm;
    c.dropout = 0.0;
    const Model still(c, 2);
    const McDropoutResult r0 = mc_dropout_eval(still, data, idx, 0.5, 3, 1);
    REQUIRE(r0.samples.size() == 3);
    CHECK(r0.auc_roc.values.size() == 3);
    CHECK(r0.auc_roc.ci_low == r0.auc_roc.ci_high);
    CHECK(r0.auc_prc.ci_low == r0.auc_prc.ci_high);
    CHECK(r0.mcc.ci_low == r0.mcc.ci_high);

    c.dropout = 0.5;
    const Model noisy(c, 2);
    const McDropoutResult a = mc_dropout_eval(noisy, data, idx, 0.5, 3, 8);
    const McDropoutResult b = mc_dropout_eval(noisy, data, idx, 0.5, 3, 8);
    CHECK(a.auc_roc.values == b.auc_roc.values);
    CHECK(a.auc_roc.ci_low == b.auc_roc.ci_low);
    CHECK(a.auc_roc.ci_high > a.auc_roc.ci_low);

    CHECK_THROWS_AS(mc_dropout_eval(noisy, data, idx, 0.5, 1, 8), ParameterError);
    ModelConfig rb;
    rb.architecture = Architecture::RuleBased;
    CHECK_THROWS_AS(mc_dropout_eval(Model(rb, 1), data, idx, 0.5, 3, 8), ConfigError);
}
