#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "labp/graph.hpp"
#include "labp/parallel.hpp"

namespace labp {

// One finite nonnegative real per directed edge.
using MessageVec = std::vector<double>;

inline constexpr double kMaxTemperature = 1e300;

// Cumulative count of envelope-ordering violations across all runs in this
// process. The update map is exactly antitone in floating point (same
// summation order, monotone rounding), so this should stay zero; it is
// counted rather than assumed.
inline std::atomic<std::uint64_t>& envelope_violation_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

namespace detail {

// out[u->v] = z / (1 + sum_{w in adj(u) \ v} m[w->u]); the sum over an empty
// neighborhood is zero, so leaf-origin messages equal z. Summation follows
// adjacency order, independent of how the range is chunked.
inline void bp_update_range(const Graph& g, double z, const MessageVec& m, MessageVec& out,
                            std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
        const VertexId u = g.tail(static_cast<DirId>(d));
        double sum = 0.0;
        for (const auto& arc : g.arcs(u))
            if (arc.dir != static_cast<DirId>(d)) sum += m[static_cast<std::size_t>(Graph::reverse(arc.dir))];
        out[d] = z / (1.0 + sum);
    }
}

inline void bp_update_into(const Graph& g, double z, const MessageVec& m, MessageVec& out,
                           ThreadPool* pool) {
    const std::size_t n = m.size();
    if (pool && pool->thread_count() > 1 && n >= 4096) {
        pool->for_range(n, [&](std::size_t b, std::size_t e) { bp_update_range(g, z, m, out, b, e); });
    } else {
        bp_update_range(g, z, m, out, 0, n);
    }
}

}  // namespace detail

inline MessageVec bp_update(const Graph& g, double z, const MessageVec& m, ThreadPool* pool = nullptr) {
    if (!(z > 0.0) || z > kMaxTemperature) throw std::invalid_argument("temperature z must be in (0, 1e300]");
    if (m.size() != static_cast<std::size_t>(g.dir_count())) throw std::invalid_argument("message vector size mismatch");
    MessageVec out(m.size());
    detail::bp_update_into(g, z, m, out, pool);
    return out;
}

// Two-sided bracket of the unique message fixed point: even iterates from
// below, odd iterates from above. Both sequences are monotone, so the bracket
// is a certificate, not a heuristic.
struct EnvelopeState {
    MessageVec lower;  // latest even iterate
    MessageVec upper;  // latest odd iterate
    std::uint64_t rounds = 0;
    double gap = std::numeric_limits<double>::infinity();
    std::uint64_t sandwich_violations = 0;
    bool warm_start_used = false;
};

struct BpResult {
    MessageVec y;  // envelope midpoint; entrywise error bounded by gap/2
    EnvelopeState env;
    bool converged = false;
};

// Synchronous iteration from the all-zero start (or a supplied lower bound on
// the fixed point). Stops once the envelope gap falls below
// tol * max(1, largest message), or when max_rounds updates have been spent.
inline BpResult run_labp(const Graph& g, double z, double tol = 1e-12,
                         std::uint64_t max_rounds = 1'000'000, ThreadPool* pool = nullptr,
                         const MessageVec* warm_lower = nullptr) {
    if (!(z > 0.0) || z > kMaxTemperature) throw std::invalid_argument("temperature z must be in (0, 1e300]");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    const std::size_t n = static_cast<std::size_t>(g.dir_count());
    BpResult res;
    res.env.rounds = 0;
    if (n == 0) {
        res.converged = true;
        res.env.gap = 0.0;
        return res;
    }

    MessageVec lower(n, 0.0);
    bool warm = false;
    if (warm_lower && warm_lower->size() == n) {
        lower = *warm_lower;
        for (auto& v : lower) v = std::min(v, z);
        warm = true;
    }

    MessageVec upper(n);
    detail::bp_update_into(g, z, lower, upper, pool);
    res.env.rounds += 1;
    if (warm) {
        for (std::size_t d = 0; d < n; ++d)
            if (!(lower[d] <= upper[d])) { warm = false; break; }
        if (!warm) {
            lower.assign(n, 0.0);
            detail::bp_update_into(g, z, lower, upper, pool);
            res.env.rounds += 1;
        }
    }
    bool warm_probation = warm;
    res.env.warm_start_used = warm;

    bool converged = false;
    double gap = std::numeric_limits<double>::infinity();
    MessageVec new_lower(n), new_upper(n);
    while (res.env.rounds < max_rounds) {
        detail::bp_update_into(g, z, upper, new_lower, pool);
        detail::bp_update_into(g, z, new_lower, new_upper, pool);
        res.env.rounds += 2;

        if (warm_probation) {
            // A stale warm start can break even-iterate monotonicity; fall
            // back to the certified cold start instead of counting it.
            bool ok = true;
            for (std::size_t d = 0; d < n && ok; ++d) ok = new_lower[d] >= lower[d];
            warm_probation = false;
            if (!ok) {
                res.env.warm_start_used = false;
                lower.assign(n, 0.0);
                detail::bp_update_into(g, z, lower, upper, pool);
                res.env.rounds += 1;
                continue;
            }
        } else {
            for (std::size_t d = 0; d < n; ++d) {
                if (!(new_lower[d] >= lower[d]) || !(new_upper[d] <= upper[d]) ||
                    !(new_lower[d] <= new_upper[d])) {
                    ++res.env.sandwich_violations;
                    envelope_violation_count().fetch_add(1, std::memory_order_relaxed);
                }
            }
        }

        lower.swap(new_lower);
        upper.swap(new_upper);

        gap = 0.0;
        double max_msg = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            gap = std::max(gap, upper[d] - lower[d]);
            max_msg = std::max(max_msg, upper[d]);
        }
        if (gap <= tol * std::max(1.0, max_msg)) {
            converged = true;
            break;
        }
    }

    res.env.gap = gap;
    res.converged = converged;
    res.y.resize(n);
    for (std::size_t d = 0; d < n; ++d) res.y[d] = 0.5 * (lower[d] + upper[d]);
    res.env.lower = std::move(lower);
    res.env.upper = std::move(upper);
    return res;
}

// Edge weights in [0,1] with per-vertex totals at most one.
struct FractionalMatching {
    std::vector<double> x;  // per undirected edge
    double value = 0.0;     // sum of x
};

// x_e = Y_e * Y_rev(e) / (z + Y_e * Y_rev(e)), evaluated as 1/(1 + z/Ya/Yb)
// so that extreme temperatures cannot overflow the product. Feasibility of
// the result is checked, since it only holds near the fixed point.
inline FractionalMatching extract_matching(const Graph& g, double z, const MessageVec& y,
                                           double feas_tol = 1e-9) {
    if (!(z > 0.0)) throw std::invalid_argument("temperature z must be positive");
    if (y.size() != static_cast<std::size_t>(g.dir_count()))
        throw std::invalid_argument("message vector size mismatch");
    const EdgeId m = g.edge_count();
    FractionalMatching fm;
    fm.x.resize(static_cast<std::size_t>(m));
    for (EdgeId e = 0; e < m; ++e) {
        const double a = y[static_cast<std::size_t>(2 * e)];
        const double b = y[static_cast<std::size_t>(2 * e + 1)];
        const double t = z / a / b;  // +inf when a or b is 0
        const double xe = 1.0 / (1.0 + t);
        fm.x[static_cast<std::size_t>(e)] = xe;
        fm.value += xe;
    }
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        double load = 0.0;
        for (const auto& arc : g.arcs(v)) load += fm.x[static_cast<std::size_t>(Graph::edge_of(arc.dir))];
        if (load > 1.0 + feas_tol)
            throw std::domain_error("extracted matching infeasible: vertex load " + std::to_string(load));
    }
    return fm;
}

// S/(1+S) with S the total incoming message at v; at a fixed point this is
// the total matching weight incident to v.
inline double vertex_coverage(const Graph& g, const MessageVec& y, VertexId v) {
    double s = 0.0;
    for (const auto& arc : g.arcs(v)) s += y[static_cast<std::size_t>(Graph::reverse(arc.dir))];
    return s / (1.0 + s);
}

inline std::vector<double> default_ladder() {
    std::vector<double> zs;
    for (int k = 0; k <= 8; ++k) zs.push_back(std::pow(10.0, k));
    return zs;
}

struct AnnealPoint {
    double z = 0.0;
    FractionalMatching matching;
    double gap = 0.0;
    bool converged = false;
    std::uint64_t rounds = 0;
};

// Runs the engine along an increasing temperature ladder, seeding each rung
// with the previous rung's lower envelope (a valid lower bound for larger z
// by message monotonicity; run_labp rechecks and restarts from zero if not).
inline std::vector<AnnealPoint> anneal(const Graph& g, const std::vector<double>& ladder,
                                       double tol = 1e-12, std::uint64_t max_rounds = 1'000'000,
                                       ThreadPool* pool = nullptr) {
    if (ladder.empty()) throw std::invalid_argument("ladder must not be empty");
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i + 1])) throw std::invalid_argument("ladder must be strictly increasing");
    std::vector<AnnealPoint> points;
    points.reserve(ladder.size());
    MessageVec warm;
    for (double z : ladder) {
        BpResult r = run_labp(g, z, tol, max_rounds, pool, warm.empty() ? nullptr : &warm);
        AnnealPoint p;
        p.z = z;
        // An unconverged midpoint can sit above the fixed point and extract an
        // infeasible matching; the lower envelope cannot, and its value is a
        // valid lower bound, so report that instead alongside the flag.
        p.matching = extract_matching(g, z, r.converged ? r.y : r.env.lower);
        p.gap = r.env.gap;
        p.converged = r.converged;
        p.rounds = r.env.rounds;
        warm = r.env.lower;
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace labp
