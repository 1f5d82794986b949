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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "famgnn/errors.h"

namespace famgnn
{

/// Mann-Whitney statistic: P(score_pos > score_neg) + P(tie) / 2.
/// Throws MetricError unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const double> labels);

/**
 * Area under the precision-recall step curve, sum over distinct descending
 * score thresholds of (R_k - R_{k-1}) * P_k, starting at the highest score
 * with no interpolation to recall 0. Throws MetricError without positives.
 */
double auc_prc(std::span<const double> scores, std::span<const double> labels);

struct Confusion
{
    long long tp = 0;
    long long tn = 0;
    long long fp = 0;
    long long fn = 0;
};

/// Predicted positive when score >= threshold.
Confusion confusion(std::span<const double> scores, std::span<const double> labels, double threshold);
/// 0 when any marginal of the confusion matrix is zero.
double mcc(const Confusion& c);
double mcc(std::span<const double> scores, std::span<const double> labels, double threshold);

/// Mean with a normal-approximation 95% interval from the sample standard deviation.
struct Summary
{
    std::vector<double> values;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

Summary summarize(std::vector<double> values);

struct MetricRow
{
    std::string model;
    std::string dataset;
    std::string metric;
    Summary summary;
};

/// Header plus one row `model,dataset,metric,mean,ci_low,ci_high,n` per entry.
void write_metric_report(std::ostream& out, std::span<const MetricRow> rows);

}  // namespace famgnn
