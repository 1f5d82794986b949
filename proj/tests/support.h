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

// Fixtures shared by several test binaries.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "famgnn/family_graph.h"

namespace famgnn::testing
{

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double sd = 1.0)
{
    std::normal_distribution<double> d(0.0, sd);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
    {
        m.data()[i] = d(rng);
    }
    return m;
}

/**
 * Synthetic family graph: node 0 is the target, every other node gets a
 * random relation and is linked to a random earlier node, plus a few extra
 * edges. Features and longitudinal bits are random.
 */
inline FamilyGraph random_graph(int n_nodes, int n_features, int n_years, Rng& rng, int label = 0)
{
    FamilyGraph g;
    g.target_id = static_cast<int>(rng() % 100000);
    g.label = label;
    std::uniform_int_distribution<int> rel(1, kNumRelations - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n_nodes; ++i)
    {
        g.node_ids.push_back(g.target_id * 100 + i);
        g.node_relations.push_back(i == 0 ? Relation::Target : static_cast<Relation>(rel(rng)));
    }
    g.node_static = Matrix::Zero(n_nodes, kNodeStaticFeatures);
    for (int i = 0; i < n_nodes; ++i)
    {
        g.node_static(i, 0) = unit(rng);
        g.node_static(i, 1) = static_cast<double>(rng() % 2);
        g.node_static(i, 2 + static_cast<int>(g.node_relations[static_cast<std::size_t>(i)])) = 1.0;
    }
    g.n_long_features = n_features;
    g.n_years = n_years;
    g.node_long.resize(static_cast<std::size_t>(n_nodes) * n_features * n_years);
    for (auto& bit : g.node_long)
    {
        bit = unit(rng) < 0.3 ? 1 : 0;
    }
    std::vector<std::pair<int, int>> pairs;
    for (int i = 1; i < n_nodes; ++i)
    {
        pairs.emplace_back(static_cast<int>(rng() % static_cast<unsigned>(i)), i);
    }
    for (int k = 0; k < n_nodes / 2; ++k)
    {
        int u = static_cast<int>(rng() % static_cast<unsigned>(n_nodes));
        int v = static_cast<int>(rng() % static_cast<unsigned>(n_nodes));
        if (u == v)
        {
            continue;
        }
        auto p = std::minmax(u, v);
        if (std::find(pairs.begin(), pairs.end(), std::pair<int, int>(p.first, p.second)) == pairs.end())
        {
            pairs.emplace_back(p.first, p.second);
        }
    }
    g.edge_features = Matrix::Zero(static_cast<Eigen::Index>(2 * pairs.size()), kEdgeFeatures);
    Eigen::Index row = 0;
    for (auto [u, v] : pairs)
    {
        const double r = relation_coefficient(g.node_relations[static_cast<std::size_t>(v)]);
        for (auto [s, d] : {std::pair{u, v}, std::pair{v, u}})
        {
            g.edges.push_back({s, d});
            g.edge_features(row, 0) = r;
            g.edge_features(row, 1 + static_cast<int>(g.node_relations[static_cast<std::size_t>(v)])) = 1.0;
            ++row;
        }
    }
    return g;
}

/// Reorders non-target nodes: new position of old node i (i >= 1) is perm[i - 1] + 1.
inline FamilyGraph permute_relatives(const FamilyGraph& g, const std::vector<int>& perm)
{
    const int n = g.n_nodes();
    std::vector<int> to(static_cast<std::size_t>(n));
    to[0] = 0;
    for (int i = 1; i < n; ++i)
    {
        to[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(i - 1)] + 1;
    }
    FamilyGraph p = g;
    for (int i = 0; i < n; ++i)
    {
        const auto j = static_cast<std::size_t>(to[static_cast<std::size_t>(i)]);
        p.node_ids[j] = g.node_ids[static_cast<std::size_t>(i)];
        p.node_relations[j] = g.node_relations[static_cast<std::size_t>(i)];
        p.node_static.row(static_cast<Eigen::Index>(j)) = g.node_static.row(i);
        for (int f = 0; f < g.n_long_features; ++f)
        {
            for (int t = 0; t < g.n_years; ++t)
            {
                p.node_long[(j * g.n_long_features + f) * g.n_years + t] = g.long_at(i, f, t);
            }
        }
    }
    for (auto& e : p.edges)
    {
        e = {to[static_cast<std::size_t>(e[0])], to[static_cast<std::size_t>(e[1])]};
    }
    return p;
}

inline Cohort cohort_of(std::vector<FamilyGraph> graphs, EdgeMode mode = EdgeMode::AllRelated)
{
    Cohort c;
    c.mode = mode;
    c.graphs = std::move(graphs);
    Rng rng(99);
    for (std::size_t i = 0; i < c.graphs.size(); ++i)
    {
        std::vector<double> h(kFamilyHistoryFeatures);
        for (auto& v : h)
        {
            v = static_cast<double>(rng() % 2);
        }
        c.family_history.push_back(h);
    }
    return c;
}

inline std::vector<int> iota_vector(int n)
{
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace famgnn::testing
