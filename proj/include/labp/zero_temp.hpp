#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "labp/bp.hpp"
#include "labp/graph.hpp"
#include "labp/half_integer.hpp"

namespace labp {

// One value in [0, +inf] per directed edge. IEEE arithmetic supplies exactly
// the conventions these maps need: 1/0 = inf, 1/inf = 0, empty sum = 0.
using ExtMessageVec = std::vector<double>;
using BoolMsgVec = std::vector<std::uint8_t>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// out[u->v] = 1 / (1 + sum_{w in adj(u) \ v} y[w->u]); any infinite summand
// drives the output to 0, a leaf origin yields 1.
inline ExtMessageVec r_map(const Graph& g, const ExtMessageVec& y) {
    ExtMessageVec out(static_cast<std::size_t>(g.dir_count()));
    for (DirId d = 0; d < g.dir_count(); ++d) {
        double sum = 0.0;
        for (const auto& arc : g.arcs(g.tail(d)))
            if (arc.dir != d) sum += y[static_cast<std::size_t>(Graph::reverse(arc.dir))];
        out[static_cast<std::size_t>(d)] = 1.0 / (1.0 + sum);
    }
    return out;
}

// out[u->v] = 1 / sum_{w in adj(u) \ v} x[w->u], entries of x in [0,1];
// an all-zero (or empty) sum yields inf.
inline ExtMessageVec q_map(const Graph& g, const ExtMessageVec& x) {
    ExtMessageVec out(static_cast<std::size_t>(g.dir_count()));
    for (DirId d = 0; d < g.dir_count(); ++d) {
        double sum = 0.0;
        for (const auto& arc : g.arcs(g.tail(d)))
            if (arc.dir != d) sum += x[static_cast<std::size_t>(Graph::reverse(arc.dir))];
        out[static_cast<std::size_t>(d)] = 1.0 / sum;
    }
    return out;
}

// Boolean message update: out[u->v] = 1 iff no incoming indicator at u from a
// neighbor other than v is set. Leaf origins always emit 1.
inline BoolMsgVec p_map(const Graph& g, const BoolMsgVec& ind) {
    BoolMsgVec out(static_cast<std::size_t>(g.dir_count()));
    for (DirId d = 0; d < g.dir_count(); ++d) {
        int sum = 0;
        for (const auto& arc : g.arcs(g.tail(d)))
            if (arc.dir != d) sum += ind[static_cast<std::size_t>(Graph::reverse(arc.dir))];
        out[static_cast<std::size_t>(d)] = (sum == 0) ? 1 : 0;
    }
    return out;
}

inline bool is_pp_fixed_point(const Graph& g, const BoolMsgVec& ind) {
    return p_map(g, p_map(g, ind)) == ind;
}

// F_v: min(1, incoming indicators) + max(0, 1 - outgoing indicators).
// Twice the vertex weight of the candidate half-integral cover.
inline int cover_contribution(const Graph& g, const BoolMsgVec& ind, VertexId v) {
    int in = 0, out = 0;
    for (const auto& arc : g.arcs(v)) {
        in += ind[static_cast<std::size_t>(Graph::reverse(arc.dir))];
        out += ind[static_cast<std::size_t>(arc.dir)];
    }
    return std::min(1, in) + std::max(0, 1 - out);
}

inline int total_cover_contribution(const Graph& g, const BoolMsgVec& ind) {
    int total = 0;
    for (VertexId v = 0; v < g.vertex_count(); ++v) total += cover_contribution(g, ind, v);
    return total;
}

// Per-vertex weights in {0, 1/2, 1}, stored doubled so the total is exact.
struct HalfIntegralCover {
    std::vector<std::uint8_t> y_twice;
    HalfInt value;

    double weight(VertexId v) const { return 0.5 * y_twice[static_cast<std::size_t>(v)]; }
};

// Builds the cover (F_v / 2) from a double-map fixed point and checks
// feasibility edge by edge. A violation here cannot come from the input being
// a fixed point, so it is reported as an internal error.
inline HalfIntegralCover half_integral_cover(const Graph& g, const BoolMsgVec& ind) {
    if (!is_pp_fixed_point(g, ind))
        throw std::invalid_argument("half_integral_cover: messages are not a double-map fixed point");
    HalfIntegralCover cover;
    cover.y_twice.resize(static_cast<std::size_t>(g.vertex_count()));
    std::int64_t total = 0;
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        int f = cover_contribution(g, ind, v);
        cover.y_twice[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(f);
        total += f;
    }
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        if (cover.y_twice[static_cast<std::size_t>(u)] + cover.y_twice[static_cast<std::size_t>(v)] < 2)
            throw std::logic_error("half-integral cover infeasible on edge " + std::to_string(e));
    }
    cover.value = HalfInt{total};
    return cover;
}

// Extension of vertex_coverage to [0, inf]: 1 as soon as any incoming
// message is infinite (S/(1+S) would be inf/inf otherwise).
inline double ext_vertex_coverage(const Graph& g, const ExtMessageVec& y, VertexId v) {
    double s = 0.0;
    for (const auto& arc : g.arcs(v)) {
        double val = y[static_cast<std::size_t>(Graph::reverse(arc.dir))];
        if (std::isinf(val)) return 1.0;
        s += val;
    }
    return s / (1.0 + s);
}

struct FixedPointResult {
    ExtMessageVec y;
    BoolMsgVec divergent;  // 1 where y is infinite
    bool stationary = false;
    bool pp_fixed_point = false;
    std::uint64_t rounds = 0;
    double divergence_bound = 0.0;
};

// Iterates q_map(r_map(.)) from zero. The iteration is monotone
// nondecreasing; entries crossing divergence_bound are pinned to inf and stay
// pinned, which keeps the monotonicity exact and leaves any wrong pin to be
// caught by the fixed-point and duality certificates downstream.
inline FixedPointResult smallest_fixed_point(const Graph& g, double divergence_bound,
                                             std::uint64_t max_rounds) {
    if (!(divergence_bound > 1.0)) throw std::invalid_argument("divergence_bound must exceed 1");
    const std::size_t n = static_cast<std::size_t>(g.dir_count());
    FixedPointResult res;
    res.divergence_bound = divergence_bound;
    res.y.assign(n, 0.0);
    constexpr double step_tol = 1e-12;

    int stable = 0;
    while (res.rounds < max_rounds) {
        ExtMessageVec next = q_map(g, r_map(g, res.y));
        ++res.rounds;
        bool pattern_changed = false;
        bool settled = true;
        for (std::size_t d = 0; d < n; ++d) {
            if (std::isinf(res.y[d])) {
                next[d] = kInf;  // sticky pin
                continue;
            }
            if (next[d] > divergence_bound) {
                next[d] = kInf;
                pattern_changed = true;
                continue;
            }
            if (!(next[d] >= res.y[d]))
                throw std::logic_error("zero-temperature iteration lost monotonicity");
            if (next[d] - res.y[d] > step_tol) settled = false;
        }
        res.y = std::move(next);
        stable = (!pattern_changed && settled) ? stable + 1 : 0;
        if (stable >= 2) {
            res.stationary = true;
            break;
        }
    }

    res.divergent.resize(n);
    for (std::size_t d = 0; d < n; ++d) res.divergent[d] = std::isinf(res.y[d]) ? 1 : 0;
    res.pp_fixed_point = is_pp_fixed_point(g, res.divergent);
    return res;
}

struct VertexCover {
    std::vector<std::uint8_t> in_cover;
    int size = 0;

    bool covers(const Graph& g) const {
        for (EdgeId e = 0; e < g.edge_count(); ++e) {
            auto [u, v] = g.endpoints(e);
            if (!in_cover[static_cast<std::size_t>(u)] && !in_cover[static_cast<std::size_t>(v)]) return false;
        }
        return true;
    }
};

namespace detail {

inline VertexCover cover_for_labeling(const Graph& g, const Bipartition& b, const BoolMsgVec& ind,
                                      const BoolMsgVec& propagated) {
    VertexCover c;
    c.in_cover.assign(static_cast<std::size_t>(g.vertex_count()), 0);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        int count = 0;
        if (b.side[static_cast<std::size_t>(v)] == 0) {
            for (const auto& arc : g.arcs(v)) count += ind[static_cast<std::size_t>(Graph::reverse(arc.dir))];
            c.in_cover[static_cast<std::size_t>(v)] = (count >= 1) ? 1 : 0;
        } else {
            for (const auto& arc : g.arcs(v)) count += propagated[static_cast<std::size_t>(Graph::reverse(arc.dir))];
            c.in_cover[static_cast<std::size_t>(v)] = (count >= 2) ? 1 : 0;
        }
        c.size += c.in_cover[static_cast<std::size_t>(v)];
    }
    return c;
}

}  // namespace detail

// Integral minimum cover on a bipartite graph, read off the divergence
// indicators: a U-vertex joins when it receives any set indicator, a W-vertex
// when at least two propagated indicators point at it. The two sides play
// asymmetric roles, so both labelings are tried and the smaller feasible
// cover wins (they tie in size on certified input; this is a determinism
// tie-break).
inline VertexCover bipartite_min_cover(const Graph& g, const Bipartition& b, const BoolMsgVec& ind) {
    if (!is_pp_fixed_point(g, ind))
        throw std::invalid_argument("bipartite_min_cover: messages are not a double-map fixed point");
    const BoolMsgVec propagated = p_map(g, ind);
    const int expected_twice = total_cover_contribution(g, ind);

    VertexCover primary = detail::cover_for_labeling(g, b, ind, propagated);
    VertexCover swapped = detail::cover_for_labeling(g, b.swapped(), ind, propagated);
    const bool primary_ok = primary.covers(g);
    const bool swapped_ok = swapped.covers(g);
    if (!primary_ok && !swapped_ok)
        throw std::runtime_error("bipartite cover certification failure: both labelings infeasible");
    VertexCover chosen = primary_ok ? primary : swapped;
    if (primary_ok && swapped_ok && swapped.size < primary.size) chosen = swapped;
    if (2 * chosen.size != expected_twice)
        throw std::runtime_error("bipartite cover certification failure: size " +
                                 std::to_string(chosen.size) + " does not match half-cover value");
    return chosen;
}

struct Certificate {
    double primal_value = 0.0;
    HalfInt dual_value;
    double gap = 0.0;
    double gap_tol = 0.0;
    bool rounding_consistent = false;  // dual equals nearest half-integer of primal
    bool passed = false;
};

// LP duality check: a feasible matching and a feasible cover with (almost)
// equal values certify each other. Weak duality can only fail through an
// implementation bug, so that case throws rather than reporting.
inline Certificate certify_optimal(const Graph& g, const FractionalMatching& primal,
                                   const HalfIntegralCover& dual, double gap_tol) {
    if (primal.x.size() != static_cast<std::size_t>(g.edge_count()))
        throw std::invalid_argument("certify_optimal: primal size mismatch");
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        double load = 0.0;
        for (const auto& arc : g.arcs(v)) {
            double xe = primal.x[static_cast<std::size_t>(Graph::edge_of(arc.dir))];
            if (xe < -1e-12 || xe > 1.0 + 1e-9) throw std::invalid_argument("certify_optimal: primal entry out of range");
            load += xe;
        }
        if (load > 1.0 + 1e-9) throw std::invalid_argument("certify_optimal: primal infeasible");
    }
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        if (dual.y_twice[static_cast<std::size_t>(u)] + dual.y_twice[static_cast<std::size_t>(v)] < 2)
            throw std::invalid_argument("certify_optimal: dual infeasible");
    }

    Certificate cert;
    cert.primal_value = primal.value;
    cert.dual_value = dual.value;
    cert.gap_tol = gap_tol;
    cert.gap = dual.value.value() - primal.value;
    if (cert.gap < -1e-6 * std::max(1.0, dual.value.value()))
        throw std::logic_error("weak duality violated: cover value below matching value");
    cert.rounding_consistent = cert.gap >= 0.25 || HalfInt::nearest(primal.value) == dual.value;
    cert.passed = cert.gap <= gap_tol && cert.rounding_consistent;
    return cert;
}

struct SolveOptions {
    std::vector<double> ladder;          // empty: 10^0 .. 10^8
    double bp_tol = 1e-12;
    std::uint64_t bp_max_rounds = 1'000'000;
    double divergence_bound = 0.0;       // 0: max(1e6, |V|^2 * max_degree)
    std::uint64_t zt_max_rounds = 0;     // 0: derived from the bound
    int max_retries = 3;
    double gap_tol = 1e-2;
    ThreadPool* pool = nullptr;
};

struct ExactSolution {
    std::vector<AnnealPoint> anneal_trace;
    FixedPointResult fp;
    bool has_cover = false;
    HalfIntegralCover cover;
    HalfInt nu_star;  // fractional matching number = cover value when certified
    Certificate certificate;
    bool certified = false;
    int attempts = 0;
    std::string diagnostic;
};

inline double auto_divergence_bound(const Graph& g) {
    double nv = static_cast<double>(g.vertex_count());
    return std::max(1e6, nv * nv * static_cast<double>(g.max_degree()));
}

// Divergent entries grow at worst ~1/(max_degree - 1) per round, so this
// budget lets promotion finish before the rounds do. The hard cap keeps a
// runaway retry from hanging: exhausting it yields an honest uncertified
// result instead.
inline std::uint64_t auto_zt_rounds(const Graph& g, double bound) {
    double est = bound * (g.max_degree() + 1) + 10000.0;
    return static_cast<std::uint64_t>(std::min(est, 2e8));
}

// Full pipeline: anneal a primal matching, locate the zero-temperature fixed
// point, read off the half-integral cover, and certify by duality. A failed
// certificate squares the divergence bound and retries; persistent failure is
// reported, never patched over.
inline ExactSolution solve_exact(const Graph& g, const SolveOptions& opts = {}) {
    ExactSolution sol;
    const std::vector<double> ladder = opts.ladder.empty() ? default_ladder() : opts.ladder;
    sol.anneal_trace = anneal(g, ladder, opts.bp_tol, opts.bp_max_rounds, opts.pool);
    const AnnealPoint& last = sol.anneal_trace.back();
    if (!last.converged)
        sol.diagnostic = "annealed primal did not converge (gap " + std::to_string(last.gap) + "); ";

    double bound = opts.divergence_bound > 0 ? opts.divergence_bound : auto_divergence_bound(g);
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        sol.attempts = attempt + 1;
        std::uint64_t rounds = opts.zt_max_rounds > 0 ? opts.zt_max_rounds : auto_zt_rounds(g, bound);
        sol.fp = smallest_fixed_point(g, bound, rounds);
        if (sol.fp.stationary && sol.fp.pp_fixed_point) {
            sol.cover = half_integral_cover(g, sol.fp.divergent);
            sol.has_cover = true;
            sol.nu_star = sol.cover.value;
            sol.certificate = certify_optimal(g, last.matching, sol.cover, opts.gap_tol);
            if (sol.certificate.passed) {
                sol.certified = true;
                sol.diagnostic.clear();
                return sol;
            }
            sol.diagnostic += "duality certificate failed (gap " + std::to_string(sol.certificate.gap) +
                              " at bound " + std::to_string(bound) + "); ";
        } else {
            sol.diagnostic += std::string("fixed-point iteration ") +
                              (sol.fp.stationary ? "settled off a double-map fixed point"
                                                 : "did not become stationary") +
                              " at bound " + std::to_string(bound) + "; ";
            // Out of rounds, not out of bound: a larger bound needs even more
            // rounds, so retrying cannot help.
            if (!sol.fp.stationary) break;
        }
        if (bound >= 1e100) break;
        bound = std::min(bound * bound, 1e100);
    }
    return sol;
}

// Certified fractional matching number, as an exact half-integer.
inline HalfInt fractional_matching_number(const Graph& g, const SolveOptions& opts = {}) {
    ExactSolution sol = solve_exact(g, opts);
    if (!sol.certified)
        throw std::runtime_error("fractional matching number could not be certified: " + sol.diagnostic);
    return sol.nu_star;
}

}  // namespace labp
