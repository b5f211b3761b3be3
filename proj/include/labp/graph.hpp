#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace labp {

using VertexId = std::int32_t;
using EdgeId = std::int32_t;
// Directed edge ids: undirected edge k yields 2k (low endpoint -> high) and
// 2k+1 (the reversal), so reverse() is a bit flip and needs no table.
using DirId = std::int32_t;

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

// Simple undirected graph, immutable after construction. Vertex ids are dense
// 0-based; multi-edges and self-loops are rejected.
class Graph {
public:
    struct Arc {
        VertexId to;
        DirId dir;  // directed id of this->to
    };

    Graph() = default;

    static Graph from_edges(VertexId n_vertices, std::vector<std::pair<VertexId, VertexId>> edges) {
        Graph g;
        g.n_ = n_vertices;
        g.edges_.reserve(edges.size());
        g.adj_.assign(static_cast<std::size_t>(n_vertices), {});
        std::set<std::pair<VertexId, VertexId>> seen;
        for (auto [u, v] : edges) {
            if (u < 0 || v < 0 || u >= n_vertices || v >= n_vertices)
                throw std::invalid_argument("edge endpoint out of range");
            if (u == v) throw std::invalid_argument("self-loop");
            auto lo = std::min(u, v), hi = std::max(u, v);
            if (!seen.insert({lo, hi}).second) throw std::invalid_argument("duplicate edge");
            auto e = static_cast<EdgeId>(g.edges_.size());
            g.edges_.emplace_back(lo, hi);
            g.adj_[static_cast<std::size_t>(lo)].push_back({hi, 2 * e});
            g.adj_[static_cast<std::size_t>(hi)].push_back({lo, 2 * e + 1});
        }
        return g;
    }

    VertexId vertex_count() const { return n_; }
    EdgeId edge_count() const { return static_cast<EdgeId>(edges_.size()); }
    DirId dir_count() const { return 2 * edge_count(); }

    static DirId reverse(DirId d) { return d ^ 1; }
    static EdgeId edge_of(DirId d) { return d >> 1; }

    // (low, high) endpoints of undirected edge e.
    std::pair<VertexId, VertexId> endpoints(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }

    VertexId tail(DirId d) const {
        auto [lo, hi] = endpoints(edge_of(d));
        return (d & 1) ? hi : lo;
    }
    VertexId head(DirId d) const {
        auto [lo, hi] = endpoints(edge_of(d));
        return (d & 1) ? lo : hi;
    }

    int degree(VertexId v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }
    const std::vector<Arc>& arcs(VertexId v) const { return adj_[static_cast<std::size_t>(v)]; }

    int max_degree() const {
        int d = 0;
        for (VertexId v = 0; v < n_; ++v) d = std::max(d, degree(v));
        return d;
    }

private:
    VertexId n_ = 0;
    std::vector<std::pair<VertexId, VertexId>> edges_;
    std::vector<std::vector<Arc>> adj_;
};

// Directed edges w->u with w a neighbor of u other than v, for d = u->v.
// This is the index set of the running sum in every message update; an empty
// result means the update's sum is zero.
inline std::vector<DirId> neighbors_excluding(const Graph& g, DirId d) {
    std::vector<DirId> out;
    VertexId u = g.tail(d);
    for (const auto& arc : g.arcs(u))
        if (arc.dir != d) out.push_back(Graph::reverse(arc.dir));
    return out;
}

// Edge-list text: one "u v" pair per line, '#' comments and blank lines
// ignored. Vertex count is max id + 1; every id up to the max must occur.
inline Graph parse_edge_list(std::istream& in) {
    std::vector<std::pair<VertexId, VertexId>> edges;
    std::set<std::pair<VertexId, VertexId>> seen;
    VertexId max_id = -1;
    std::string line;
    int lineno = 0;
    constexpr long long id_limit = 100'000'000;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t pos = line.find('#');
        if (pos != std::string::npos) line.resize(pos);
        const char* p = line.data();
        const char* end = p + line.size();
        auto skip_ws = [&] { while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p; };
        auto read_id = [&]() -> long long {
            long long v = -1;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || v < 0) throw ParseError(lineno, "expected nonnegative vertex id");
            if (v >= id_limit) throw ParseError(lineno, "vertex id too large");
            p = next;
            return v;
        };
        skip_ws();
        if (p == end) continue;
        long long u = read_id();
        skip_ws();
        long long v = read_id();
        skip_ws();
        if (p != end) throw ParseError(lineno, "trailing characters after edge");
        if (u == v) throw ParseError(lineno, "self-loop");
        auto lo = static_cast<VertexId>(std::min(u, v));
        auto hi = static_cast<VertexId>(std::max(u, v));
        if (!seen.insert({lo, hi}).second) throw ParseError(lineno, "duplicate edge");
        edges.emplace_back(lo, hi);
        max_id = std::max(max_id, hi);
    }
    if (edges.empty()) throw ParseError(lineno, "no edges in input");

    std::vector<char> used(static_cast<std::size_t>(max_id) + 1, 0);
    for (auto [u, v] : edges) used[static_cast<std::size_t>(u)] = used[static_cast<std::size_t>(v)] = 1;
    for (VertexId v = 0; v <= max_id; ++v)
        if (!used[static_cast<std::size_t>(v)])
            throw ParseError(lineno, "sparse vertex ids: vertex " + std::to_string(v) + " unused");

    return Graph::from_edges(max_id + 1, std::move(edges));
}

struct Bipartition {
    // 0 = U side, 1 = W side. Component roots (smallest id) are on U.
    std::vector<std::uint8_t> side;

    Bipartition swapped() const {
        Bipartition b = *this;
        for (auto& s : b.side) s ^= 1;
        return b;
    }
};

// BFS 2-coloring; returns nothing if some component has an odd cycle.
inline std::optional<Bipartition> bipartition(const Graph& g) {
    const VertexId n = g.vertex_count();
    std::vector<std::int8_t> color(static_cast<std::size_t>(n), -1);
    std::queue<VertexId> q;
    for (VertexId root = 0; root < n; ++root) {
        if (color[static_cast<std::size_t>(root)] != -1) continue;
        color[static_cast<std::size_t>(root)] = 0;
        q.push(root);
        while (!q.empty()) {
            VertexId u = q.front();
            q.pop();
            for (const auto& arc : g.arcs(u)) {
                auto& c = color[static_cast<std::size_t>(arc.to)];
                if (c == -1) {
                    c = static_cast<std::int8_t>(1 - color[static_cast<std::size_t>(u)]);
                    q.push(arc.to);
                } else if (c == color[static_cast<std::size_t>(u)]) {
                    return std::nullopt;
                }
            }
        }
    }
    Bipartition b;
    b.side.assign(color.begin(), color.end());
    return b;
}

// Witness for non-bipartiteness: vertices of one odd cycle, in order.
inline std::vector<VertexId> find_odd_cycle(const Graph& g) {
    const VertexId n = g.vertex_count();
    std::vector<std::int8_t> color(static_cast<std::size_t>(n), -1);
    std::vector<VertexId> parent(static_cast<std::size_t>(n), -1);
    std::queue<VertexId> q;
    for (VertexId root = 0; root < n; ++root) {
        if (color[static_cast<std::size_t>(root)] != -1) continue;
        color[static_cast<std::size_t>(root)] = 0;
        q.push(root);
        while (!q.empty()) {
            VertexId u = q.front();
            q.pop();
            for (const auto& arc : g.arcs(u)) {
                VertexId w = arc.to;
                if (color[static_cast<std::size_t>(w)] == -1) {
                    color[static_cast<std::size_t>(w)] = static_cast<std::int8_t>(1 - color[static_cast<std::size_t>(u)]);
                    parent[static_cast<std::size_t>(w)] = u;
                    q.push(w);
                } else if (color[static_cast<std::size_t>(w)] == color[static_cast<std::size_t>(u)]) {
                    // Walk both endpoints up to their common ancestor.
                    std::vector<VertexId> pu{u}, pw{w};
                    auto depth = [&](VertexId x) {
                        int d = 0;
                        while (parent[static_cast<std::size_t>(x)] != -1) { x = parent[static_cast<std::size_t>(x)]; ++d; }
                        return d;
                    };
                    VertexId a = u, b = w;
                    int da = depth(a), db = depth(b);
                    while (da > db) { a = parent[static_cast<std::size_t>(a)]; pu.push_back(a); --da; }
                    while (db > da) { b = parent[static_cast<std::size_t>(b)]; pw.push_back(b); --db; }
                    while (a != b) {
                        a = parent[static_cast<std::size_t>(a)];
                        b = parent[static_cast<std::size_t>(b)];
                        pu.push_back(a);
                        pw.push_back(b);
                    }
                    // pu ends at the ancestor; pw's copy of it is dropped.
                    std::vector<VertexId> cycle(pu);
                    for (auto it = pw.rbegin() + 1; it != pw.rend(); ++it) cycle.push_back(*it);
                    return cycle;
                }
            }
        }
    }
    return {};
}

// Acyclic check; trees and forests get exact marginals from the engine.
inline bool is_forest(const Graph& g) {
    VertexId n = g.vertex_count();
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    EdgeId tree_edges = 0;
    std::queue<VertexId> q;
    for (VertexId root = 0; root < n; ++root) {
        if (visited[static_cast<std::size_t>(root)]) continue;
        visited[static_cast<std::size_t>(root)] = 1;
        q.push(root);
        while (!q.empty()) {
            VertexId u = q.front();
            q.pop();
            for (const auto& arc : g.arcs(u))
                if (!visited[static_cast<std::size_t>(arc.to)]) {
                    visited[static_cast<std::size_t>(arc.to)] = 1;
                    ++tree_edges;
                    q.push(arc.to);
                }
        }
    }
    return tree_edges == g.edge_count();
}

}  // namespace labp
