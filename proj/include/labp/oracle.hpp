#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "labp/graph.hpp"
#include "labp/half_integer.hpp"
#include "labp/zero_temp.hpp"

// Brute-force ground truth. Everything here is deliberately naive and
// structurally unrelated to the message-passing solvers, so agreement between
// the two is evidence rather than tautology. Caps fail loudly.

namespace labp {

struct MatchingCounts {
    std::vector<std::uint64_t> by_size;  // index k: number of matchings with k edges
    int max_size = 0;                    // matching number
};

namespace oracle_detail {

inline void count_matchings_rec(const Graph& g, EdgeId next, int size, std::vector<char>& used,
                                std::vector<std::uint64_t>& counts, int& best) {
    if (static_cast<std::size_t>(size) >= counts.size()) counts.resize(static_cast<std::size_t>(size) + 1, 0);
    ++counts[static_cast<std::size_t>(size)];
    best = std::max(best, size);
    for (EdgeId e = next; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        if (used[static_cast<std::size_t>(u)] || used[static_cast<std::size_t>(v)]) continue;
        used[static_cast<std::size_t>(u)] = used[static_cast<std::size_t>(v)] = 1;
        count_matchings_rec(g, e + 1, size + 1, used, counts, best);
        used[static_cast<std::size_t>(u)] = used[static_cast<std::size_t>(v)] = 0;
    }
}

}  // namespace oracle_detail

// Backtracking enumeration of all matchings, counted by size.
inline MatchingCounts enumerate_matchings(const Graph& g, int max_edges = 24) {
    if (g.edge_count() > max_edges)
        throw std::length_error("enumerate_matchings: edge count " + std::to_string(g.edge_count()) +
                                " exceeds cap " + std::to_string(max_edges));
    MatchingCounts mc;
    std::vector<char> used(static_cast<std::size_t>(g.vertex_count()), 0);
    oracle_detail::count_matchings_rec(g, 0, 0, used, mc.by_size, mc.max_size);
    return mc;
}

namespace oracle_detail {

// DFS over per-edge weights drawn from {0, 1/denom, ..., denom/denom},
// maintaining denom-scaled per-vertex loads; prunes as soon as an endpoint
// overflows. Totals are scaled by denom so everything stays integral.
inline void fractional_matching_rec(const Graph& g, EdgeId e, int denom, std::vector<int>& load,
                                    int total, int& best) {
    if (e == g.edge_count()) {
        best = std::max(best, total);
        return;
    }
    auto [u, v] = g.endpoints(e);
    for (int w = denom; w >= 0; --w) {
        if (load[static_cast<std::size_t>(u)] + w > denom || load[static_cast<std::size_t>(v)] + w > denom) continue;
        load[static_cast<std::size_t>(u)] += w;
        load[static_cast<std::size_t>(v)] += w;
        fractional_matching_rec(g, e + 1, denom, load, total + w, best);
        load[static_cast<std::size_t>(u)] -= w;
        load[static_cast<std::size_t>(v)] -= w;
    }
}

}  // namespace oracle_detail

// Exact scan of the half-integral grid {0, 1/2, 1}^E inside the fractional
// matching polytope; the maximum over this grid is the fractional matching
// number (validated against the quarter grid in the test suite).
inline HalfInt max_fractional_matching_scan(const Graph& g, int max_edges = 12) {
    if (g.edge_count() > max_edges)
        throw std::length_error("max_fractional_matching_scan: edge count exceeds cap " +
                                std::to_string(max_edges));
    std::vector<int> load(static_cast<std::size_t>(g.vertex_count()), 0);
    int best = 0;
    oracle_detail::fractional_matching_rec(g, 0, 2, load, 0, best);
    return HalfInt{best};
}

// Same scan over a finer grid (weights k/denom); used to validate that the
// half-integral grid already attains the optimum. Result is scaled by denom.
inline int max_fractional_matching_grid(const Graph& g, int denom, int max_edges = 8) {
    if (g.edge_count() > max_edges)
        throw std::length_error("max_fractional_matching_grid: edge count exceeds cap");
    std::vector<int> load(static_cast<std::size_t>(g.vertex_count()), 0);
    int best = 0;
    oracle_detail::fractional_matching_rec(g, 0, denom, load, 0, best);
    return best;
}

namespace oracle_detail {

inline void vertex_cover_rec(const Graph& g, const std::vector<std::vector<VertexId>>& earlier,
                             VertexId v, int denom, std::vector<int>& weight, int total, int& best) {
    if (total >= best) return;  // covers only get more expensive
    if (v == g.vertex_count()) {
        best = total;
        return;
    }
    for (int w = 0; w <= denom; ++w) {
        bool ok = true;
        for (VertexId u : earlier[static_cast<std::size_t>(v)])
            if (weight[static_cast<std::size_t>(u)] + w < denom) { ok = false; break; }
        if (!ok) continue;
        weight[static_cast<std::size_t>(v)] = w;
        vertex_cover_rec(g, earlier, v + 1, denom, weight, total + w, best);
    }
    weight[static_cast<std::size_t>(v)] = 0;
}

inline int min_cover_scan(const Graph& g, int denom) {
    std::vector<std::vector<VertexId>> earlier(static_cast<std::size_t>(g.vertex_count()));
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        earlier[static_cast<std::size_t>(std::max(u, v))].push_back(std::min(u, v));
    }
    std::vector<int> weight(static_cast<std::size_t>(g.vertex_count()), 0);
    int best = denom * g.vertex_count() + 1;
    vertex_cover_rec(g, earlier, 0, denom, weight, 0, best);
    return best;
}

}  // namespace oracle_detail

inline int min_vertex_cover_scan(const Graph& g, int max_vertices = 24) {
    if (g.vertex_count() > max_vertices)
        throw std::length_error("min_vertex_cover_scan: vertex count exceeds cap");
    return oracle_detail::min_cover_scan(g, 1);
}

inline HalfInt min_half_vertex_cover_scan(const Graph& g, int max_vertices = 16) {
    if (g.vertex_count() > max_vertices)
        throw std::length_error("min_half_vertex_cover_scan: vertex count exceeds cap");
    return HalfInt{oracle_detail::min_cover_scan(g, 2)};
}

// Hopcroft-Karp maximum matching; needs a valid 2-coloring.
inline int bipartite_max_matching(const Graph& g, const Bipartition& b) {
    const VertexId n = g.vertex_count();
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        if (b.side[static_cast<std::size_t>(u)] == b.side[static_cast<std::size_t>(v)])
            throw std::invalid_argument("bipartite_max_matching: labeling is not a proper 2-coloring");
    }
    constexpr VertexId kFree = -1;
    constexpr int kInfDist = std::numeric_limits<int>::max();
    std::vector<VertexId> match(static_cast<std::size_t>(n), kFree);
    std::vector<int> dist(static_cast<std::size_t>(n), 0);

    auto bfs = [&]() {
        std::queue<VertexId> q;
        bool found = false;
        for (VertexId u = 0; u < n; ++u) {
            if (b.side[static_cast<std::size_t>(u)] != 0) continue;
            if (match[static_cast<std::size_t>(u)] == kFree) {
                dist[static_cast<std::size_t>(u)] = 0;
                q.push(u);
            } else {
                dist[static_cast<std::size_t>(u)] = kInfDist;
            }
        }
        while (!q.empty()) {
            VertexId u = q.front();
            q.pop();
            for (const auto& arc : g.arcs(u)) {
                VertexId w = match[static_cast<std::size_t>(arc.to)];
                if (w == kFree) {
                    found = true;
                } else if (dist[static_cast<std::size_t>(w)] == kInfDist) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
                    q.push(w);
                }
            }
        }
        return found;
    };
    std::function<bool(VertexId)> dfs = [&](VertexId u) {
        for (const auto& arc : g.arcs(u)) {
            VertexId v = arc.to;
            VertexId w = match[static_cast<std::size_t>(v)];
            if (w == kFree ||
                (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(u)] + 1 && dfs(w))) {
                match[static_cast<std::size_t>(v)] = u;
                match[static_cast<std::size_t>(u)] = v;
                return true;
            }
        }
        dist[static_cast<std::size_t>(u)] = kInfDist;
        return false;
    };

    int matched = 0;
    while (bfs()) {
        for (VertexId u = 0; u < n; ++u)
            if (b.side[static_cast<std::size_t>(u)] == 0 && match[static_cast<std::size_t>(u)] == kFree && dfs(u))
                ++matched;
    }
    return matched;
}

struct PpFixedPoint {
    BoolMsgVec messages;
    int total_weight = 0;  // sum over vertices of cover_contribution
};

// Exhaustive scan of all 2^(2|E|) boolean message vectors for double-map
// fixed points. Returned in mask order, so the minimum is well defined.
inline std::vector<PpFixedPoint> enumerate_pp_fixed_points(const Graph& g, int max_edges = 8) {
    if (g.edge_count() > max_edges)
        throw std::length_error("enumerate_pp_fixed_points: edge count exceeds cap");
    const int bits = g.dir_count();
    std::vector<PpFixedPoint> out;
    for (std::uint32_t mask = 0; mask < (1u << bits); ++mask) {
        BoolMsgVec ind(static_cast<std::size_t>(bits));
        for (int d = 0; d < bits; ++d) ind[static_cast<std::size_t>(d)] = (mask >> d) & 1u;
        if (!is_pp_fixed_point(g, ind)) continue;
        out.push_back({ind, total_cover_contribution(g, ind)});
    }
    return out;
}

}  // namespace labp
