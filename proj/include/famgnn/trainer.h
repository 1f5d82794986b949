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
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "famgnn/metrics.h"
#include "famgnn/model.h"

namespace famgnn
{

class SplitError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct SplitSpec
{
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;
    double train_case_ratio = 0.15;  // cases / (cases + controls) in training
    std::uint64_t seed = 1;

    void validate() const;
};

/// Cohort positions per split, each sorted ascending.
struct Split
{
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

/**
 * Allocates cases 70:10:20 (train and validation counts rounded, test takes
 * the rest). Training controls are undersampled to the configured case
 * ratio, rounding down; validation and test receive controls at the cohort's
 * natural ratio. Throws SplitError with counts when fewer than 10 cases or
 * too few controls are available.
 */
Split split_dataset(std::span<const double> labels, const SplitSpec& spec);

struct TrainConfig
{
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int batch_size = 250;
    int max_epochs = 100;
    int patience = 5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochRecord
{
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
    bool stopped = false;
};

/// Patience counter on validation loss. Strict improvement resets it.
class EarlyStopping
{
public:
    explicit EarlyStopping(int patience);

    /// Records an epoch's validation loss; returns true when training should stop.
    bool update(int epoch, double val_loss);
    bool improved() const { return improved_; }
    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }

private:
    int patience_;
    int wait_ = 0;
    int best_epoch_ = 0;
    double best_loss_;
    bool improved_ = false;
};

struct TrainResult
{
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
    ClassWeights weights;
};

/// Called after each epoch with the current (not best) parameters.
using EpochObserver = std::function<void(const EpochRecord&, const ParameterSet&)>;

/**
 * Mini-batch Adam with seeded shuffling. After each epoch the validation
 * loss (same class weights as training) feeds early stopping; the model is
 * left holding the best-validation parameters. Throws NumericError naming
 * the epoch and batch if the training loss is not finite.
 */
TrainResult train(Model& model, const Cohort& data, const Split& split, const TrainConfig& config,
                  const EpochObserver& observer = {});

/// Class-weighted loss over a subset without dropout, averaged per graph.
double evaluate_loss(const Model& model, const Cohort& data, std::span<const int> indices,
                     const ClassWeights& weights, int batch_size);

void write_history(std::ostream& out, std::span<const EpochRecord> history);

/**
 * Threshold maximizing F1 when predicting positive for score >= threshold,
 * searched over the observed scores; ties go to the larger threshold.
 * Returns 0.5 if all scores are equal. Throws MetricError unless both
 * classes are present.
 */
double tune_threshold(std::span<const double> scores, std::span<const double> labels);

struct Evaluation
{
    double auc_roc = 0.0;
    double auc_prc = 0.0;
    double mcc = 0.0;
};

Evaluation evaluate_scores(std::span<const double> scores, std::span<const double> labels, double threshold);

struct McDropoutResult
{
    std::vector<Evaluation> samples;
    Summary auc_roc;
    Summary auc_prc;
    Summary mcc;
};

/**
 * n_samples stochastic passes with dropout active, metrics per pass,
 * summarized as mean and 95% interval. Throws ConfigError for a model
 * without dropout layers and ParameterError if n_samples < 2.
 */
McDropoutResult mc_dropout_eval(const Model& model, const Cohort& data, std::span<const int> indices,
                                double threshold, int n_samples, std::uint64_t seed, int batch_size = 250);

}  // namespace famgnn
