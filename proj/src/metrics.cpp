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


#include "famgnn/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace famgnn
{

namespace
{

void check_inputs(std::span<const double> scores, std::span<const double> labels, const char* what)
{
    if (scores.size() != labels.size())
    {
        throw MetricError(fmt::format("{}: {} scores but {} labels", what, scores.size(), labels.size()));
    }
    if (scores.empty())
    {
        throw MetricError(fmt::format("{}: empty input", what));
    }
    for (double y : labels)
    {
        if (y != 0.0 && y != 1.0)
        {
            throw MetricError(fmt::format("{}: label {} is not binary", what, y));
        }
    }
}

std::vector<std::size_t> order_descending(std::span<const double> scores)
{
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const double> labels)
{
    check_inputs(scores, labels, "auc_roc");
    const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1.0));
    const double n_neg = static_cast<double>(labels.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0)
    {
        throw MetricError("auc_roc: both classes must be present");
    }
    // Walk tie groups in descending order; each positive beats every negative
    // in later groups and ties with those in its own group.
    const auto order = order_descending(scores);
    double numerator = 0.0;  // concordant + ties / 2, in units of pairs
    double neg_below = n_neg;
    std::size_t i = 0;
    while (i < order.size())
    {
        std::size_t j = i;
        double pos = 0.0;
        double neg = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
        {
            (labels[order[j]] == 1.0 ? pos : neg) += 1.0;
            ++j;
        }
        neg_below -= neg;
        numerator += pos * neg_below + 0.5 * pos * neg;
        i = j;
    }
    return numerator / (n_pos * n_neg);
}

double auc_prc(std::span<const double> scores, std::span<const double> labels)
{
    check_inputs(scores, labels, "auc_prc");
    const auto n_pos = std::count(labels.begin(), labels.end(), 1.0);
    if (n_pos == 0)
    {
        throw MetricError("auc_prc: no positive labels");
    }
    const auto order = order_descending(scores);
    long long tp = 0;
    long long fp = 0;
    long long tp_prev = 0;
    double area = 0.0;
    std::size_t i = 0;
    while (i < order.size())
    {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
        {
            (labels[order[j]] == 1.0 ? tp : fp) += 1;
            ++j;
        }
        const double delta_recall = static_cast<double>(tp - tp_prev) / static_cast<double>(n_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += delta_recall * precision;
        tp_prev = tp;
        i = j;
    }
    return area;
}

Confusion confusion(std::span<const double> scores, std::span<const double> labels, double threshold)
{
    check_inputs(scores, labels, "confusion");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i)
    {
        const bool pred = scores[i] >= threshold;
        const bool pos = labels[i] == 1.0;
        if (pred && pos)
        {
            ++c.tp;
        }
        else if (pred)
        {
            ++c.fp;
        }
        else if (pos)
        {
            ++c.fn;
        }
        else
        {
            ++c.tn;
        }
    }
    return c;
}

double mcc(const Confusion& c)
{
    const double tp = static_cast<double>(c.tp);
    const double tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0)
    {
        return 0.0;
    }
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

double mcc(std::span<const double> scores, std::span<const double> labels, double threshold)
{
    return mcc(confusion(scores, labels, threshold));
}

Summary summarize(std::vector<double> values)
{
    Summary s;
    s.values = std::move(values);
    if (s.values.empty())
    {
        return s;
    }
    const double n = static_cast<double>(s.values.size());
    // Shifted by the first value so constant samples give an exact mean and zero spread.
    const double shift = s.values.front();
    double offset = 0.0;
    for (double v : s.values)
    {
        offset += v - shift;
    }
    offset /= n;
    s.mean = shift + offset;
    double half = 0.0;
    if (s.values.size() > 1)
    {
        double ss = 0.0;
        for (double v : s.values)
        {
            const double d = (v - shift) - offset;
            ss += d * d;
        }
        half = 1.959963984540054 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    s.ci_low = s.mean - half;
    s.ci_high = s.mean + half;
    return s;
}

void write_metric_report(std::ostream& out, std::span<const MetricRow> rows)
{
    out << "model,dataset,metric,mean,ci_low,ci_high,n\n";
    for (const MetricRow& r : rows)
    {
        fmt::print(out, "{},{},{},{:.6f},{:.6f},{:.6f},{}\n", r.model, r.dataset, r.metric, r.summary.mean,
                   r.summary.ci_low, r.summary.ci_high, r.summary.values.size());
    }
}

}  // namespace famgnn
