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

#include "famgnn/family_graph.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace famgnn
{

int relation_degree(Relation r)
{
    switch (r)
    {
        case Relation::Target:
            return 0;
        case Relation::Mother:
        case Relation::Father:
        case Relation::Sibling:
            return 1;
        case Relation::HalfSibling:
        case Relation::Grandparent:
        case Relation::AuntUncle:
            return 2;
        case Relation::Cousin:
            return 3;
    }
    return 0;
}

double relation_coefficient(Relation r)
{
    return std::pow(0.5, relation_degree(r));
}

std::string_view relation_name(Relation r)
{
    switch (r)
    {
        case Relation::Target:
            return "target";
        case Relation::Mother:
            return "mother";
        case Relation::Father:
            return "father";
        case Relation::Sibling:
            return "sibling";
        case Relation::HalfSibling:
            return "half_sibling";
        case Relation::Grandparent:
            return "grandparent";
        case Relation::AuntUncle:
            return "aunt_uncle";
        case Relation::Cousin:
            return "cousin";
    }
    return "?";
}

Relation parse_relation(std::string_view name)
{
    for (int i = 0; i < kNumRelations; ++i)
    {
        if (relation_name(static_cast<Relation>(i)) == name)
        {
            return static_cast<Relation>(i);
        }
    }
    throw ParameterError(fmt::format("unknown relation '{}'", name));
}

std::string_view edge_mode_name(EdgeMode m)
{
    switch (m)
    {
        case EdgeMode::ParentChild:
            return "parent_child";
        case EdgeMode::ParentChildPlusTarget:
            return "parent_child_target";
        case EdgeMode::AllRelated:
            return "all_related";
    }
    return "?";
}

EdgeMode parse_edge_mode(std::string_view name)
{
    for (EdgeMode m : {EdgeMode::ParentChild, EdgeMode::ParentChildPlusTarget, EdgeMode::AllRelated})
    {
        if (edge_mode_name(m) == name)
        {
            return m;
        }
    }
    throw ParameterError(fmt::format("unknown edge mode '{}'", name));
}

// ---------------------------------------------------------------------------

double Kinship::coefficient(int a, int b) const
{
    const Individual& x = pop_->at(a);
    const Individual& y = pop_->at(b);
    if (a == b)
    {
        return x.has_parents() ? 0.5 * (1.0 + coefficient(x.mother, x.father)) : 0.5;
    }
    // Recurse on the younger of the two; within a generation either works.
    const bool y_younger = y.generation > x.generation || (y.generation == x.generation && b > a);
    const Individual& young = y_younger ? y : x;
    const int other = y_younger ? a : b;
    double phi = 0.0;
    if (young.mother != kNoParent)
    {
        phi += 0.5 * coefficient(other, young.mother);
    }
    if (young.father != kNoParent)
    {
        phi += 0.5 * coefficient(other, young.father);
    }
    return phi;
}

// ---------------------------------------------------------------------------

std::vector<Relative> enumerate_relatives(const Population& pop, int target_id)
{
    const Individual& t = pop.at(target_id);
    if (!t.has_parents())
    {
        throw CohortError(fmt::format("target {} lacks a recorded parent", target_id));
    }
    std::vector<Relative> found;
    std::unordered_set<int> seen{target_id};
    auto add = [&](int id, Relation r) {
        if (id != kNoParent && seen.insert(id).second)
        {
            found.push_back({id, r});
        }
    };

    add(t.mother, Relation::Mother);
    add(t.father, Relation::Father);

    std::vector<int> full;
    std::vector<int> half;
    for (int parent : {t.mother, t.father})
    {
        for (int c : pop.children(parent))
        {
            if (c == target_id)
            {
                continue;
            }
            const Individual& s = pop.at(c);
            const bool same_mother = s.mother == t.mother;
            const bool same_father = s.father == t.father;
            (same_mother && same_father ? full : half).push_back(c);
        }
    }
    for (int c : full)
    {
        add(c, Relation::Sibling);
    }
    for (int c : half)
    {
        add(c, Relation::HalfSibling);
    }

    std::vector<int> aunts;
    for (int parent_id : {t.mother, t.father})
    {
        const Individual& parent = pop.at(parent_id);
        add(parent.mother, Relation::Grandparent);
        add(parent.father, Relation::Grandparent);
        if (!parent.has_parents())
        {
            continue;
        }
        for (int c : pop.children(parent.mother))
        {
            if (c != parent_id && pop.at(c).father == parent.father)
            {
                aunts.push_back(c);
            }
        }
    }
    for (int a : aunts)
    {
        add(a, Relation::AuntUncle);
    }
    for (int a : aunts)
    {
        for (int c : pop.children(a))
        {
            add(c, Relation::Cousin);
        }
    }
    return found;
}

// ---------------------------------------------------------------------------

std::uint8_t FamilyGraph::long_ever(int node, int feature) const
{
    for (int t = 0; t < n_years; ++t)
    {
        if (long_at(node, feature, t) != 0)
        {
            return 1;
        }
    }
    return 0;
}

FamilyGraph build_graph(const Population& pop, const Kinship& kinship, int target_id,
                        std::span<const Relative> relatives, const FeatureTracks* tracks,
                        const GraphOptions& options)
{
    const Individual& target = pop.at(target_id);
    std::vector<Relative> nodes;
    nodes.reserve(relatives.size() + 1);
    nodes.push_back({target_id, Relation::Target});
    for (const Relative& r : relatives)
    {
        if (!pop.contains(r.id))
        {
            throw IntegrityError(fmt::format("relative {} of target {} is not in the population", r.id, target_id));
        }
        if (r.id == target_id)
        {
            throw IntegrityError(fmt::format("target {} listed as its own relative", target_id));
        }
        nodes.push_back(r);
    }
    std::sort(nodes.begin() + 1, nodes.end(), [](const Relative& a, const Relative& b) {
        const int da = relation_degree(a.relation);
        const int db = relation_degree(b.relation);
        if (da != db)
        {
            return da < db;
        }
        if (a.relation != b.relation)
        {
            return a.relation < b.relation;
        }
        return a.id < b.id;
    });

    FamilyGraph g;
    g.target_id = target_id;
    g.label = target.case_status;
    const int n = static_cast<int>(nodes.size());
    std::unordered_map<int, int> index;
    for (int i = 0; i < n; ++i)
    {
        if (!index.emplace(nodes[static_cast<std::size_t>(i)].id, i).second)
        {
            throw IntegrityError(fmt::format("duplicate relative {} for target {}", nodes[i].id, target_id));
        }
        g.node_ids.push_back(nodes[static_cast<std::size_t>(i)].id);
        g.node_relations.push_back(nodes[static_cast<std::size_t>(i)].relation);
    }

    g.node_static = Matrix::Zero(n, kNodeStaticFeatures);
    for (int i = 0; i < n; ++i)
    {
        const Individual& ind = pop.at(g.node_ids[static_cast<std::size_t>(i)]);
        g.node_static(i, 0) = ind.age;
        g.node_static(i, 1) = ind.sex;
        g.node_static(i, 2 + static_cast<int>(g.node_relations[static_cast<std::size_t>(i)])) = 1.0;
    }

    if (tracks != nullptr)
    {
        std::vector<int> feats = options.features;
        if (feats.empty())
        {
            for (int f = 0; f < tracks->n_features(); ++f)
            {
                feats.push_back(f);
            }
        }
        g.n_long_features = static_cast<int>(feats.size());
        g.n_years = tracks->n_years();
        g.node_long.assign(static_cast<std::size_t>(n) * g.n_long_features * g.n_years, 0);
        for (int i = 0; i < n; ++i)
        {
            for (int k = 0; k < g.n_long_features; ++k)
            {
                const int f = feats[static_cast<std::size_t>(k)];
                if (i == 0 && f == 0 && options.hide_target_outcome)
                {
                    continue;
                }
                for (int t = 0; t < g.n_years; ++t)
                {
                    g.node_long[(static_cast<std::size_t>(i) * g.n_long_features + k) * g.n_years + t] =
                        tracks->get(g.node_ids[static_cast<std::size_t>(i)], f, t);
                }
            }
        }
    }

    // Undirected pairs (u < v) in lexicographic order.
    std::vector<std::pair<int, int>> pairs;
    for (int u = 0; u < n; ++u)
    {
        for (int v = u + 1; v < n; ++v)
        {
            const Individual& a = pop.at(g.node_ids[static_cast<std::size_t>(u)]);
            const Individual& b = pop.at(g.node_ids[static_cast<std::size_t>(v)]);
            const bool parent_child = a.mother == b.id || a.father == b.id || b.mother == a.id || b.father == a.id;
            bool keep = false;
            switch (options.mode)
            {
                case EdgeMode::ParentChild:
                    keep = parent_child;
                    break;
                case EdgeMode::ParentChildPlusTarget:
                    keep = parent_child || u == 0;
                    break;
                case EdgeMode::AllRelated:
                    keep = kinship.coefficient(a.id, b.id) > 0.0;
                    break;
            }
            if (keep)
            {
                pairs.emplace_back(u, v);
            }
        }
    }

    g.edge_features = Matrix::Zero(static_cast<Eigen::Index>(pairs.size() * 2), kEdgeFeatures);
    Eigen::Index row = 0;
    for (auto [u, v] : pairs)
    {
        const double r = kinship.relatedness(g.node_ids[static_cast<std::size_t>(u)], g.node_ids[static_cast<std::size_t>(v)]);
        // v > u, and nodes are sorted by degree, so v is the farther endpoint.
        const int rel = static_cast<int>(g.node_relations[static_cast<std::size_t>(v)]);
        for (auto [s, d] : {std::pair{u, v}, std::pair{v, u}})
        {
            g.edges.push_back({s, d});
            g.edge_features(row, 0) = r;
            g.edge_features(row, 1 + rel) = 1.0;
            ++row;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------

std::vector<double> family_history_vector(const Population& pop, std::span<const Relative> relatives,
                                          int cutoff_year)
{
    std::vector<double> out(kFamilyHistoryFeatures, 0.0);
    for (const Relative& r : relatives)
    {
        const Individual& ind = pop.at(r.id);
        const bool diagnosed = ind.case_status == 1 && ind.onset_year && *ind.onset_year < cutoff_year;
        for (std::size_t k = 0; k < kHistoryRelations.size(); ++k)
        {
            if (kHistoryRelations[k] == r.relation && diagnosed)
            {
                out[k] = 1.0;
            }
        }
        for (std::size_t k = 0; k < kAvailabilityRelations.size(); ++k)
        {
            if (kAvailabilityRelations[k] == r.relation)
            {
                out[kHistoryRelations.size() + k] = 1.0;
            }
        }
    }
    return out;
}

std::vector<std::string> family_history_names()
{
    std::vector<std::string> names;
    for (Relation r : kHistoryRelations)
    {
        names.push_back(fmt::format("history_{}", relation_name(r)));
    }
    for (Relation r : kAvailabilityRelations)
    {
        names.push_back(fmt::format("available_{}", relation_name(r)));
    }
    return names;
}

std::vector<int> feature_filter(const FeatureTracks& tracks, std::span<const int> cohort, double threshold_fraction)
{
    if (cohort.empty())
    {
        throw ParameterError("feature_filter: empty cohort");
    }
    if (threshold_fraction < 0.0)
    {
        throw ParameterError(fmt::format("feature_filter: negative threshold {}", threshold_fraction));
    }
    const double limit = threshold_fraction * static_cast<double>(cohort.size());
    std::vector<int> keep;
    for (int f = 0; f < tracks.n_features(); ++f)
    {
        int count = 0;
        for (int id : cohort)
        {
            count += tracks.ever(id, f);
        }
        if (count > limit)
        {
            keep.push_back(f);
        }
    }
    return keep;
}

// ---------------------------------------------------------------------------

int Cohort::n_cases() const
{
    int c = 0;
    for (const FamilyGraph& g : graphs)
    {
        c += g.label;
    }
    return c;
}

Cohort build_cohort(const Population& pop, const FeatureTracks& tracks, const CohortRules& rules, EdgeMode mode)
{
    if (pop.n_generations() == 0)
    {
        throw ParameterError("build_cohort: empty population");
    }
    const int gen = rules.target_generation < 0 ? pop.n_generations() - 1 : rules.target_generation;
    if (gen >= pop.n_generations())
    {
        throw ParameterError(fmt::format("build_cohort: no generation {}", gen));
    }
    const int cutoff = rules.cutoff_year < 0 ? tracks.n_years() : rules.cutoff_year;

    std::vector<int> candidates;
    for (int id = pop.generation_begin(gen); id < pop.generation_end(gen); ++id)
    {
        const Individual& ind = pop.at(id);
        if (ind.has_parents() && ind.age >= rules.min_age && ind.age <= rules.max_age)
        {
            candidates.push_back(id);
        }
    }
    const std::unordered_set<int> candidate_set(candidates.begin(), candidates.end());
    std::vector<int> targets;
    for (int id : candidates)
    {
        const auto kids = pop.children(id);
        const bool parent_of_target =
            std::any_of(kids.begin(), kids.end(), [&](int c) { return candidate_set.count(c) > 0; });
        if (!parent_of_target)
        {
            targets.push_back(id);
        }
    }

    Cohort cohort;
    cohort.mode = mode;
    if (targets.empty())
    {
        return cohort;
    }
    cohort.retained_features.push_back(0);
    for (int f : feature_filter(tracks, targets, rules.feature_threshold))
    {
        if (f != 0)
        {
            cohort.retained_features.push_back(f);
        }
    }

    const Kinship kinship(pop);
    GraphOptions options;
    options.mode = mode;
    options.features = cohort.retained_features;
    for (int id : targets)
    {
        const std::vector<Relative> rel = enumerate_relatives(pop, id);
        if (static_cast<int>(rel.size()) + 1 < rules.min_graph_size)
        {
            continue;
        }
        cohort.graphs.push_back(build_graph(pop, kinship, id, rel, &tracks, options));
        cohort.family_history.push_back(family_history_vector(pop, rel, cutoff));
    }
    return cohort;
}

// ---------------------------------------------------------------------------
// Graph cache

namespace
{

constexpr std::string_view kCacheVersion = "# famgnn-graphs v1";

}  // namespace

void write_graph_cache(std::ostream& out, std::span<const FamilyGraph> graphs)
{
    out << kCacheVersion << '\n';
    for (const FamilyGraph& g : graphs)
    {
        fmt::print(out, "graph {} {} {} {} {} {} {}\n", g.target_id, g.label, g.n_nodes(), g.n_edges(),
                   g.node_static.cols(), g.n_long_features, g.n_years);
        for (int i = 0; i < g.n_nodes(); ++i)
        {
            fmt::print(out, "node {} {} {}", i, g.node_ids[static_cast<std::size_t>(i)],
                       relation_name(g.node_relations[static_cast<std::size_t>(i)]));
            for (Eigen::Index c = 0; c < g.node_static.cols(); ++c)
            {
                fmt::print(out, " {:.17g}", g.node_static(i, c));
            }
            std::string bits;
            for (int f = 0; f < g.n_long_features; ++f)
            {
                for (int t = 0; t < g.n_years; ++t)
                {
                    bits.push_back(g.long_at(i, f, t) != 0 ? '1' : '0');
                }
            }
            fmt::print(out, " {}\n", bits.empty() ? "-" : bits);
        }
        for (int e = 0; e < g.n_edges(); ++e)
        {
            fmt::print(out, "edge {} {}", g.edges[static_cast<std::size_t>(e)][0],
                       g.edges[static_cast<std::size_t>(e)][1]);
            for (Eigen::Index c = 0; c < g.edge_features.cols(); ++c)
            {
                fmt::print(out, " {:.17g}", g.edge_features(e, c));
            }
            out << '\n';
        }
        out << "end\n";
    }
}

std::vector<FamilyGraph> read_graph_cache(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kCacheVersion)
    {
        throw LoadError(fmt::format("graph cache: expected version line '{}'", kCacheVersion));
    }
    std::vector<FamilyGraph> graphs;
    int line_no = 1;
    auto next = [&](std::string_view expect) {
        if (!std::getline(in, line))
        {
            throw LoadError(fmt::format("graph cache: truncated after line {}", line_no));
        }
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag != expect)
        {
            throw LoadError(fmt::format("graph cache line {}: expected '{}' record", line_no, expect));
        }
        return ss;
    };
    while (in.peek() != EOF)
    {
        auto header = next("graph");
        FamilyGraph g;
        int n = 0;
        int e = 0;
        int n_static = 0;
        header >> g.target_id >> g.label >> n >> e >> n_static >> g.n_long_features >> g.n_years;
        if (!header || n < 1 || e < 0 || n_static < 0)
        {
            throw LoadError(fmt::format("graph cache line {}: malformed graph header", line_no));
        }
        g.node_static = Matrix::Zero(n, n_static);
        g.node_long.assign(static_cast<std::size_t>(n) * g.n_long_features * g.n_years, 0);
        for (int i = 0; i < n; ++i)
        {
            auto ss = next("node");
            int idx = 0;
            int id = 0;
            std::string rel;
            ss >> idx >> id >> rel;
            if (idx != i)
            {
                throw LoadError(fmt::format("graph cache line {}: node index out of order", line_no));
            }
            g.node_ids.push_back(id);
            g.node_relations.push_back(parse_relation(rel));
            for (int c = 0; c < n_static; ++c)
            {
                std::string v;
                ss >> v;
                g.node_static(i, c) = std::strtod(v.c_str(), nullptr);
            }
            std::string bits;
            ss >> bits;
            if (!ss || (bits != "-" && bits.size() != static_cast<std::size_t>(g.n_long_features * g.n_years)))
            {
                throw LoadError(fmt::format("graph cache line {}: malformed node record", line_no));
            }
            if (bits != "-")
            {
                for (std::size_t k = 0; k < bits.size(); ++k)
                {
                    g.node_long[static_cast<std::size_t>(i) * bits.size() + k] = bits[k] == '1' ? 1 : 0;
                }
            }
        }
        g.edge_features = Matrix::Zero(e, kEdgeFeatures);
        for (int k = 0; k < e; ++k)
        {
            auto ss = next("edge");
            std::array<int, 2> edge{};
            ss >> edge[0] >> edge[1];
            if (!ss || edge[0] < 0 || edge[1] < 0 || edge[0] >= n || edge[1] >= n)
            {
                throw LoadError(fmt::format("graph cache line {}: edge endpoint out of range", line_no));
            }
            g.edges.push_back(edge);
            for (int c = 0; c < kEdgeFeatures; ++c)
            {
                std::string v;
                ss >> v;
                g.edge_features(k, c) = std::strtod(v.c_str(), nullptr);
            }
        }
        next("end");
        graphs.push_back(std::move(g));
    }
    return graphs;
}

}  // namespace famgnn
