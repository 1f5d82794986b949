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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "famgnn/errors.h"
#include "famgnn/rng.h"

namespace famgnn
{

enum class StabilizerMode
{
    PaperLiteral,        // c = 1 / (a1^2 + a2)
    VariancePreserving,  // c = 1 / sqrt(a1^2 + a2^2)
};

enum class MatingScheme
{
    Couples,   // stable couples drawn once per generation; children share them
    PerChild,  // an independent random legal pair for every child
};

inline constexpr int kFemale = 0;
inline constexpr int kMale = 1;
inline constexpr int kNoParent = -1;

struct SimParams
{
    double h2 = 0.5;
    double e2 = 0.5;
    double beta_age = 1.0;
    double beta_sex = 0.5;
    double alpha1 = 0.5;  // maternal weight
    double alpha2 = 0.5;  // paternal weight
    double prevalence = 0.1;
    std::vector<int> gen_sizes{2000, 2000, 2000};
    StabilizerMode stabilizer = StabilizerMode::VariancePreserving;
    MatingScheme mating = MatingScheme::Couples;
    // Couples scheme only: chance that a child comes from a fresh random
    // pair instead of an existing couple (source of half-siblings).
    double remate_probability = 0.1;
    int n_years = 10;  // observation window for onset years
    std::uint64_t seed = 1;

    int n_generations() const { return static_cast<int>(gen_sizes.size()); }
    /// Throws ParameterError on any violated invariant.
    void validate() const;
};

double stabilizer_constant(double alpha1, double alpha2, StabilizerMode mode);

struct Individual
{
    int id = 0;
    int generation = 0;
    int mother = kNoParent;
    int father = kNoParent;
    int sex = kFemale;
    double age = 0.0;
    double l_herr = 0.0;
    double epsilon = 0.0;
    double l_total = 0.0;
    double l_standardized = 0.0;
    int case_status = 0;
    std::optional<int> onset_year;

    bool has_parents() const { return mother != kNoParent && father != kNoParent; }
};

/// Individuals are stored with id == index and grouped by generation.
class Population
{
public:
    Population() = default;

    std::span<const Individual> individuals() const { return individuals_; }
    const Individual& at(int id) const;
    Individual& at(int id);
    bool contains(int id) const { return id >= 0 && id < size(); }
    int size() const { return static_cast<int>(individuals_.size()); }
    int n_generations() const { return static_cast<int>(generation_start_.size()); }
    /// Ids of generation g are [generation_begin(g), generation_end(g)).
    int generation_begin(int g) const;
    int generation_end(int g) const;
    std::span<const int> children(int id) const;

    /// Appends a full generation; parents must be in the previous one.
    void append_generation(std::vector<Individual> members);

private:
    std::vector<Individual> individuals_;
    std::vector<int> generation_start_;
    std::vector<std::vector<int>> children_;
};

/// Same person, shared parent, or shared grandparent.
bool related_within_three_generations(const Population& pop, int a, int b);

/// Counts parent pairs that break a mating rule (sex roles, shared parent or
/// grandparent, wrong generation).
int count_mating_violations(const Population& pop);

Population generate_ancestry(const SimParams& params, int n);
void generate_generation(Population& pop, const SimParams& params, int n);
void assign_phenotypes(Population& pop, const SimParams& params);
/// Ancestry, every following generation, then phenotypes.
Population simulate_population(const SimParams& params);

/// Cases are standardized liabilities at or above the threshold.
std::vector<int> threshold_cases(std::span<const double> standardized, double threshold);
/// Phi^{-1}(1 - k): prevalence k sits in the upper tail.
double liability_threshold(double prevalence);

/**
 * Seeds for independent RNG streams. Every random draw for individual `index`
 * of generation `generation` in stage `stage` comes from its own mt19937_64
 * seeded by derive_seed(seed, stage, generation, index), so results do not
 * depend on evaluation order or worker count.
 */
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t generation, std::uint64_t index);

// ---------------------------------------------------------------------------
// Longitudinal tracks

enum class ChannelKind
{
    Noise,       // Bernoulli(rate) every year
    Liability,   // Bernoulli(sigmoid(logit(rate) + strength * standardized liability))
    CopyMother,  // mother's case status, constant over years
    CopyFather,
};

struct ChannelSpec
{
    ChannelKind kind = ChannelKind::Noise;
    double rate = 0.05;
    double strength = 1.0;
};

struct LongitudinalSpec
{
    int n_years = 10;
    /// Channels after the phenotype channel (feature 0).
    std::vector<ChannelSpec> channels;

    int n_features() const { return 1 + static_cast<int>(channels.size()); }
};

/// Binary individual x feature x year array.
class FeatureTracks
{
public:
    FeatureTracks() = default;
    FeatureTracks(int n_individuals, int n_features, int n_years);

    int n_individuals() const { return n_individuals_; }
    int n_features() const { return n_features_; }
    int n_years() const { return n_years_; }

    std::uint8_t get(int individual, int feature, int year) const { return bits_[index(individual, feature, year)]; }
    void set(int individual, int feature, int year, std::uint8_t v) { bits_[index(individual, feature, year)] = v; }
    /// 1 if the feature was recorded in any year.
    std::uint8_t ever(int individual, int feature) const;

    bool operator==(const FeatureTracks&) const = default;

private:
    std::size_t index(int i, int f, int t) const
    {
        return (static_cast<std::size_t>(i) * n_features_ + f) * n_years_ + t;
    }

    int n_individuals_ = 0;
    int n_features_ = 0;
    int n_years_ = 0;
    std::vector<std::uint8_t> bits_;
};

FeatureTracks synthesize_longitudinal(const Population& pop, const LongitudinalSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Files. Both formats open with a version line, then a header row.

void write_pedigree(std::ostream& out, const Population& pop);
Population read_pedigree(std::istream& in);
/// Sparse rows `id,year,feature` for every set bit.
void write_longitudinal(std::ostream& out, const FeatureTracks& tracks);
FeatureTracks read_longitudinal(std::istream& in);

}  // namespace famgnn
