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


#include "famgnn/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "famgnn/optim.h"
#include "famgnn/pedigree.h"

namespace famgnn
{

namespace
{

// RNG stream tags, disjoint from the simulator's stages.
enum : std::uint64_t
{
    kStageSplit = 101,
    kStageShuffle = 102,
    kStageDropout = 103,
    kStageMcDropout = 104,
};

}  // namespace

void SplitSpec::validate() const
{
    const double total = train_fraction + val_fraction + test_fraction;
    if (train_fraction <= 0.0 || val_fraction <= 0.0 || test_fraction <= 0.0 || std::abs(total - 1.0) > 1e-9)
    {
        throw ParameterError(fmt::format("split fractions {}:{}:{} must be positive and sum to 1", train_fraction,
                                         val_fraction, test_fraction));
    }
    if (train_case_ratio <= 0.0 || train_case_ratio > 1.0)
    {
        throw ParameterError(fmt::format("train case ratio {} outside (0, 1]", train_case_ratio));
    }
}

Split split_dataset(std::span<const double> labels, const SplitSpec& spec)
{
    spec.validate();
    std::vector<int> cases;
    std::vector<int> controls;
    for (std::size_t i = 0; i < labels.size(); ++i)
    {
        (labels[i] == 1.0 ? cases : controls).push_back(static_cast<int>(i));
    }
    const auto n_cases = static_cast<long long>(cases.size());
    const auto n_controls = static_cast<long long>(controls.size());
    if (n_cases < 10)
    {
        throw SplitError(fmt::format("split needs at least 10 cases, cohort has {}", n_cases));
    }
    const long long train_cases = std::llround(spec.train_fraction * static_cast<double>(n_cases));
    const long long val_cases = std::llround(spec.val_fraction * static_cast<double>(n_cases));
    const long long test_cases = n_cases - train_cases - val_cases;
    const double ratio = static_cast<double>(n_controls) / static_cast<double>(n_cases);
    const auto train_controls = static_cast<long long>(
        std::floor(static_cast<double>(train_cases) * (1.0 - spec.train_case_ratio) / spec.train_case_ratio + 1e-9));
    const long long val_controls = std::llround(static_cast<double>(val_cases) * ratio);
    const long long test_controls = std::llround(static_cast<double>(test_cases) * ratio);
    if (test_cases < 1 || val_cases < 1)
    {
        throw SplitError(fmt::format("split of {} cases leaves an empty validation or test set", n_cases));
    }
    if (train_controls + val_controls + test_controls > n_controls)
    {
        throw SplitError(fmt::format("split needs {} + {} + {} controls but the cohort has {}", train_controls,
                                     val_controls, test_controls, n_controls));
    }

    Rng rng(derive_seed(spec.seed, kStageSplit, 0, 0));
    std::shuffle(cases.begin(), cases.end(), rng);
    std::shuffle(controls.begin(), controls.end(), rng);
    Split s;
    auto take = [](std::vector<int>& dst, const std::vector<int>& src, long long& at, long long n) {
        dst.insert(dst.end(), src.begin() + at, src.begin() + at + n);
        at += n;
    };
    long long c = 0;
    long long k = 0;
    take(s.train, cases, c, train_cases);
    take(s.val, cases, c, val_cases);
    take(s.test, cases, c, test_cases);
    take(s.train, controls, k, train_controls);
    take(s.val, controls, k, val_controls);
    take(s.test, controls, k, test_controls);
    for (auto* v : {&s.train, &s.val, &s.test})
    {
        std::sort(v->begin(), v->end());
    }
    return s;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const
{
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    {
        throw ConfigError(fmt::format("learning rate {} must be finite and >= 0", learning_rate));
    }
    if (batch_size < 1 || patience < 1 || max_epochs < 1)
    {
        throw ConfigError("batch size, patience and max epochs must be >= 1");
    }
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience), best_loss_(std::numeric_limits<double>::infinity())
{
    if (patience < 1)
    {
        throw ConfigError("patience must be >= 1");
    }
}

bool EarlyStopping::update(int epoch, double val_loss)
{
    improved_ = val_loss < best_loss_;
    if (improved_)
    {
        best_loss_ = val_loss;
        best_epoch_ = epoch;
        wait_ = 0;
        return false;
    }
    ++wait_;
    return wait_ >= patience_;
}

namespace
{

std::vector<Batch> make_batches(const Cohort& data, std::span<const int> indices, const ModelConfig& config,
                                int batch_size)
{
    std::vector<Batch> out;
    for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size))
    {
        const std::size_t len = std::min(indices.size() - start, static_cast<std::size_t>(batch_size));
        out.push_back(make_batch(data, indices.subspan(start, len), config));
    }
    return out;
}

double batches_loss(const Model& model, const std::vector<Batch>& batches, const ClassWeights& weights)
{
    double total = 0.0;
    double n = 0.0;
    for (const Batch& b : batches)
    {
        Tape tape;
        const Context ctx{tape, false, nullptr, false};
        const Var loss = compute_loss(model.forward(ctx, b), b, model.config(), weights);
        total += loss.value()(0, 0) * b.n_graphs;
        n += b.n_graphs;
    }
    return n > 0.0 ? total / n : 0.0;
}

std::vector<double> labels_of(const Cohort& data, std::span<const int> indices)
{
    std::vector<double> y;
    y.reserve(indices.size());
    for (int i : indices)
    {
        y.push_back(data.graphs[static_cast<std::size_t>(i)].label);
    }
    return y;
}

}  // namespace

double evaluate_loss(const Model& model, const Cohort& data, std::span<const int> indices,
                     const ClassWeights& weights, int batch_size)
{
    return batches_loss(model, make_batches(data, indices, model.config(), batch_size), weights);
}

TrainResult train(Model& model, const Cohort& data, const Split& split, const TrainConfig& config,
                  const EpochObserver& observer)
{
    config.validate();
    TrainResult result;
    if (model.config().architecture == Architecture::RuleBased)
    {
        return result;  // nothing to fit
    }
    if (split.train.empty() || split.val.empty())
    {
        throw SplitError("training needs non-empty train and validation splits");
    }
    const std::vector<double> train_labels = labels_of(data, split.train);
    result.weights = ClassWeights::from_labels(train_labels);
    const std::vector<Batch> val_batches = make_batches(data, split.val, model.config(), config.batch_size);

    std::vector<Parameter*> params = model.parameters().pointers();
    AdamConfig adam_config;
    adam_config.lr = config.learning_rate;
    adam_config.beta1 = config.beta1;
    adam_config.beta2 = config.beta2;
    Adam adam(params, adam_config);
    EarlyStopping stopper(config.patience);
    std::vector<Matrix> best = model.parameters().snapshot();
    std::vector<int> order = split.train;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch)
    {
        Rng shuffle_rng(derive_seed(config.seed, kStageShuffle, static_cast<std::uint64_t>(epoch), 0));
        Rng dropout_rng(derive_seed(config.seed, kStageDropout, static_cast<std::uint64_t>(epoch), 0));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double total = 0.0;
        int batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size))
        {
            ++batch_no;
            const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
            const Batch b = make_batch(data, std::span<const int>(order).subspan(start, len), model.config());
            adam.zero_grad();
            Tape tape;
            const Context ctx{tape, true, &dropout_rng};
            Var loss;
            try
            {
                loss = compute_loss(model.forward(ctx, b), b, model.config(), result.weights);
            }
            catch (const NumericError& e)
            {
                throw NumericError(fmt::format("epoch {} batch {}: {}", epoch, batch_no, e.what()));
            }
            tape.backward(loss);
            tape.deposit_parameter_grads(params);
            adam.step();
            total += loss.value()(0, 0) * static_cast<double>(len);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = total / static_cast<double>(order.size());
        rec.val_loss = batches_loss(model, val_batches, result.weights);
        rec.learning_rate = config.learning_rate;
        rec.stopped = stopper.update(epoch, rec.val_loss);
        if (stopper.improved())
        {
            best = model.parameters().snapshot();
        }
        result.history.push_back(rec);
        if (observer)
        {
            observer(rec, model.parameters());
        }
        if (rec.stopped)
        {
            result.stopped_early = true;
            break;
        }
    }
    model.parameters().restore(best);
    result.best_epoch = stopper.best_epoch();
    result.best_val_loss = stopper.best_loss();
    return result;
}

void write_history(std::ostream& out, std::span<const EpochRecord> history)
{
    out << "epoch,train_loss,val_loss,lr,stopped_flag\n";
    for (const EpochRecord& r : history)
    {
        fmt::print(out, "{},{:.10g},{:.10g},{},{}\n", r.epoch, r.train_loss, r.val_loss, r.learning_rate,
                   r.stopped ? 1 : 0);
    }
}

// ---------------------------------------------------------------------------

double tune_threshold(std::span<const double> scores, std::span<const double> labels)
{
    if (scores.size() != labels.size())
    {
        throw MetricError(fmt::format("tune_threshold: {} scores but {} labels", scores.size(), labels.size()));
    }
    const auto n_pos = std::count(labels.begin(), labels.end(), 1.0);
    if (n_pos == 0 || n_pos == static_cast<long>(labels.size()))
    {
        throw MetricError("tune_threshold: validation set needs both classes");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    if (scores[order.front()] == scores[order.back()])
    {
        return 0.5;
    }
    long long tp = 0;
    long long fp = 0;
    double best_f1 = -1.0;
    double best_threshold = 0.5;
    std::size_t i = 0;
    while (i < order.size())
    {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
        {
            (labels[order[j]] == 1.0 ? tp : fp) += 1;
            ++j;
        }
        const long long fn = n_pos - tp;
        const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        // Descending scan: only a strict gain moves to a smaller threshold.
        if (f1 > best_f1)
        {
            best_f1 = f1;
            best_threshold = scores[order[i]];
        }
        i = j;
    }
    return best_threshold;
}

Evaluation evaluate_scores(std::span<const double> scores, std::span<const double> labels, double threshold)
{
    return {auc_roc(scores, labels), auc_prc(scores, labels), mcc(scores, labels, threshold)};
}

McDropoutResult mc_dropout_eval(const Model& model, const Cohort& data, std::span<const int> indices,
                                double threshold, int n_samples, std::uint64_t seed, int batch_size)
{
    if (model.config().architecture == Architecture::RuleBased)
    {
        throw ConfigError("MC dropout needs a model with dropout layers");
    }
    if (n_samples < 2)
    {
        throw ParameterError(fmt::format("MC dropout needs at least 2 samples, got {}", n_samples));
    }
    McDropoutResult r;
    std::vector<double> roc;
    std::vector<double> prc;
    std::vector<double> m;
    for (int s = 0; s < n_samples; ++s)
    {
        Rng rng(derive_seed(seed, kStageMcDropout, static_cast<std::uint64_t>(s), 0));
        const Predictions p = model.predict(data, indices, batch_size, &rng);
        const Evaluation e = evaluate_scores(p.model(), p.labels, threshold);
        r.samples.push_back(e);
        roc.push_back(e.auc_roc);
        prc.push_back(e.auc_prc);
        m.push_back(e.mcc);
    }
    r.auc_roc = summarize(std::move(roc));
    r.auc_prc = summarize(std::move(prc));
    r.mcc = summarize(std::move(m));
    return r;
}

}  // namespace famgnn
