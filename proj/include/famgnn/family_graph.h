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
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "famgnn/pedigree.h"
#include "famgnn/tensor.h"

namespace famgnn
{

enum class Relation : int
{
    Target = 0,
    Mother,
    Father,
    Sibling,
    HalfSibling,
    Grandparent,
    AuntUncle,
    Cousin,
};

inline constexpr int kNumRelations = 8;

int relation_degree(Relation r);
/// Coefficient of relationship implied by the label: 0.5^degree.
double relation_coefficient(Relation r);
std::string_view relation_name(Relation r);
Relation parse_relation(std::string_view name);

struct Relative
{
    int id;
    Relation relation;
};

enum class EdgeMode
{
    ParentChild,
    ParentChildPlusTarget,
    AllRelated,
};

std::string_view edge_mode_name(EdgeMode m);
EdgeMode parse_edge_mode(std::string_view name);

/**
 * Kinship coefficients from the pedigree by the standard recursion
 * phi(a, b) = (phi(a, mother(b)) + phi(a, father(b))) / 2 on the younger
 * member. Stateless, so one instance can be shared across threads.
 */
class Kinship
{
public:
    explicit Kinship(const Population& pop) : pop_(&pop) {}

    double coefficient(int a, int b) const;
    /// Coefficient of relationship r = 2 * phi (no inbreeding correction).
    double relatedness(int a, int b) const { return 2.0 * coefficient(a, b); }

private:
    const Population* pop_;
};

/**
 * Parents, grandparents, full and half siblings, aunts/uncles (full siblings
 * of a parent) and their children (cousins). Each individual appears once,
 * under its closest relation. Throws CohortError if a parent is missing.
 */
std::vector<Relative> enumerate_relatives(const Population& pop, int target_id);

struct GraphOptions
{
    EdgeMode mode = EdgeMode::AllRelated;
    /// Longitudinal channels copied into nodes; empty means all.
    std::vector<int> features;
    /// Zero the target's own outcome channel (feature 0) in its node track.
    bool hide_target_outcome = true;
};

/// Node static block: age, sex, then a one-hot relation indicator.
inline constexpr int kNodeStaticFeatures = 2 + kNumRelations;
/// Edge features: r, then one-hot relation of the endpoint farther from the target.
inline constexpr int kEdgeFeatures = 1 + kNumRelations;

struct FamilyGraph
{
    int target_id = -1;
    int label = 0;
    std::vector<int> node_ids;  // node 0 is the target
    std::vector<Relation> node_relations;
    Matrix node_static;  // N x kNodeStaticFeatures
    int n_long_features = 0;
    int n_years = 0;
    std::vector<std::uint8_t> node_long;  // N x F_L x T, row-major
    std::vector<std::array<int, 2>> edges;  // directed (src, dst); both directions stored
    Matrix edge_features;                   // E x kEdgeFeatures

    int n_nodes() const { return static_cast<int>(node_ids.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }
    std::uint8_t long_at(int node, int feature, int year) const
    {
        return node_long[(static_cast<std::size_t>(node) * n_long_features + feature) * n_years + year];
    }
    /// 1 if the channel is set in any year.
    std::uint8_t long_ever(int node, int feature) const;

    bool operator==(const FamilyGraph&) const = default;
};

/**
 * Assembles the graph for one target. `tracks` may be null, in which case
 * nodes carry no longitudinal block. Throws IntegrityError if a relative id
 * is not in the population.
 */
FamilyGraph build_graph(const Population& pop, const Kinship& kinship, int target_id,
                        std::span<const Relative> relatives, const FeatureTracks* tracks,
                        const GraphOptions& options);

/// Relative types carrying a history bit, in vector order.
inline constexpr std::array<Relation, 7> kHistoryRelations{Relation::Mother,      Relation::Father,
                                                           Relation::Sibling,     Relation::HalfSibling,
                                                           Relation::Grandparent, Relation::AuntUncle,
                                                           Relation::Cousin};
/// Relative types carrying an availability bit (parents are always present).
inline constexpr std::array<Relation, 5> kAvailabilityRelations{Relation::Sibling, Relation::HalfSibling,
                                                                Relation::Grandparent, Relation::AuntUncle,
                                                                Relation::Cousin};
inline constexpr int kFamilyHistoryFeatures = 12;

/**
 * Tabular family history for the baselines: for each relative type, 1 if any
 * such relative was diagnosed before `cutoff_year`, followed by availability
 * bits for the non-parent types.
 */
std::vector<double> family_history_vector(const Population& pop, std::span<const Relative> relatives,
                                          int cutoff_year);
std::vector<std::string> family_history_names();

/**
 * Channels whose carrier count among `cohort` exceeds
 * threshold_fraction * cohort size, in ascending order.
 */
std::vector<int> feature_filter(const FeatureTracks& tracks, std::span<const int> cohort, double threshold_fraction);

// ---------------------------------------------------------------------------
// Cohort assembly

struct CohortRules
{
    int target_generation = -1;  // -1: last generation
    double min_age = 0.0;
    double max_age = 1.0;
    int min_graph_size = 3;
    int cutoff_year = -1;  // -1: end of the observation window
    double feature_threshold = 0.001;
};

struct Cohort
{
    EdgeMode mode = EdgeMode::AllRelated;
    std::vector<int> retained_features;
    std::vector<FamilyGraph> graphs;
    std::vector<std::vector<double>> family_history;

    int size() const { return static_cast<int>(graphs.size()); }
    int n_cases() const;
};

/**
 * Selects targets (both parents known, not a parent of another target, age in
 * window, graph size >= min) and builds their graphs. The outcome channel
 * (feature 0) is always retained; other channels pass feature_filter.
 */
Cohort build_cohort(const Population& pop, const FeatureTracks& tracks, const CohortRules& rules, EdgeMode mode);

/// Line-delimited graph cache; see README for the record layout.
void write_graph_cache(std::ostream& out, std::span<const FamilyGraph> graphs);
std::vector<FamilyGraph> read_graph_cache(std::istream& in);

}  // namespace famgnn
