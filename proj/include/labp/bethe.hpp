#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "labp/bp.hpp"
#include "labp/graph.hpp"

namespace labp {

namespace bethe_detail {

inline double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

inline void check_in_polytope(const Graph& g, const std::vector<double>& x, double tol) {
    if (x.size() != static_cast<std::size_t>(g.edge_count()))
        throw std::invalid_argument("edge weight vector size mismatch");
    for (double xe : x)
        if (xe < -tol || xe > 1.0 + tol) throw std::domain_error("edge weight outside [0,1]");
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        double load = 0.0;
        for (const auto& arc : g.arcs(v)) load += x[static_cast<std::size_t>(Graph::edge_of(arc.dir))];
        if (load > 1.0 + tol) throw std::domain_error("vertex load exceeds 1");
    }
}

}  // namespace bethe_detail

// Entropy of the edge-factorized approximation at edge marginals x:
//   (1/2) sum_v { sum_{e@v} [-x ln x + (1-x)ln(1-x)] - 2(1-load_v)ln(1-load_v) }
// with 0 ln 0 = 0. Nonnegative and concave on the fractional matching
// polytope; both facts are exercised by the test suite rather than assumed.
inline double bethe_entropy(const Graph& g, const std::vector<double>& x, double feas_tol = 1e-9) {
    bethe_detail::check_in_polytope(g, x, feas_tol);
    using bethe_detail::xlogx;
    double total = 0.0;
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        double term = 0.0;
        double load = 0.0;
        for (const auto& arc : g.arcs(v)) {
            double xe = std::clamp(x[static_cast<std::size_t>(Graph::edge_of(arc.dir))], 0.0, 1.0);
            term += -xlogx(xe) + xlogx(1.0 - xe);
            load += xe;
        }
        term -= 2.0 * xlogx(std::max(0.0, 1.0 - load));
        total += term;
    }
    return 0.5 * total;
}

// Free entropy (sum_e x_e) ln z + S(x): the variational objective the
// message fixed point maximizes over the polytope.
inline double bethe_free_entropy(const Graph& g, const std::vector<double>& x, double z,
                                 double feas_tol = 1e-9) {
    if (!(z > 0.0)) throw std::invalid_argument("z must be positive");
    double sum = 0.0;
    for (double xe : x) sum += xe;
    return sum * std::log(z) + bethe_entropy(g, x, feas_tol);
}

// d/dx_e of the free entropy at an interior point:
//   ln z + ln[(1 - load_u)(1 - load_v)] - ln[x_e (1 - x_e)].
inline double bethe_free_entropy_gradient(const Graph& g, const std::vector<double>& x, double z,
                                          EdgeId e) {
    auto [u, v] = g.endpoints(e);
    auto load = [&](VertexId w) {
        double s = 0.0;
        for (const auto& arc : g.arcs(w)) s += x[static_cast<std::size_t>(Graph::edge_of(arc.dir))];
        return s;
    };
    const double xe = x[static_cast<std::size_t>(e)];
    const double lu = load(u), lv = load(v);
    if (!(xe > 0.0) || !(xe < 1.0) || !(lu < 1.0) || !(lv < 1.0))
        throw std::domain_error("gradient requires a strictly interior point");
    return std::log(z) + std::log((1.0 - lu) * (1.0 - lv)) - std::log(xe * (1.0 - xe));
}

// Exact matching-generating polynomial: coefficient k counts the matchings
// with k edges. Computed by the deletion recursion
//   P(G) = P(G - e) + z * P(G - {u,v}),
// memoized on the set of surviving edges (first-surviving-edge branching
// keeps the state count small).
struct MatchingPolynomial {
    std::vector<std::uint64_t> coeff;  // c_0 = 1, c_1 = |E|, ...

    int max_size() const { return static_cast<int>(coeff.size()) - 1; }

    double eval(double z) const {
        double acc = 0.0;
        for (std::size_t k = coeff.size(); k-- > 0;) acc = acc * z + static_cast<double>(coeff[k]);
        return acc;
    }

    // log P(z), stable for large z where eval would overflow.
    double log_eval(double z) const {
        const int m = max_size();
        double log_z = std::log(z);
        double top = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= m; ++k)
            if (coeff[static_cast<std::size_t>(k)] > 0)
                top = std::max(top, std::log(static_cast<double>(coeff[static_cast<std::size_t>(k)])) + k * log_z);
        double acc = 0.0;
        for (int k = 0; k <= m; ++k)
            if (coeff[static_cast<std::size_t>(k)] > 0)
                acc += std::exp(std::log(static_cast<double>(coeff[static_cast<std::size_t>(k)])) + k * log_z - top);
        return top + std::log(acc);
    }
};

namespace bethe_detail {

struct PolyContext {
    const Graph* g;
    std::vector<std::uint32_t> incident;  // per vertex: bitmask of incident edges
    std::unordered_map<std::uint32_t, std::vector<std::uint64_t>> memo;

    const std::vector<std::uint64_t>& rec(std::uint32_t mask) {
        auto it = memo.find(mask);
        if (it != memo.end()) return it->second;
        std::vector<std::uint64_t> result;
        if (mask == 0) {
            result = {1};
        } else {
            const int e = std::countr_zero(mask);
            auto [u, v] = g->endpoints(static_cast<EdgeId>(e));
            const std::uint32_t without_edge = mask & ~(1u << e);
            const std::uint32_t without_ends =
                mask & ~(incident[static_cast<std::size_t>(u)] | incident[static_cast<std::size_t>(v)]);
            result = rec(without_edge);
            const std::vector<std::uint64_t>& taken = rec(without_ends);
            if (result.size() < taken.size() + 1) result.resize(taken.size() + 1, 0);
            for (std::size_t k = 0; k < taken.size(); ++k) result[k + 1] += taken[k];
        }
        return memo.emplace(mask, std::move(result)).first->second;
    }
};

inline PolyContext make_poly_context(const Graph& g) {
    PolyContext ctx;
    ctx.g = &g;
    ctx.incident.assign(static_cast<std::size_t>(g.vertex_count()), 0);
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        ctx.incident[static_cast<std::size_t>(u)] |= 1u << e;
        ctx.incident[static_cast<std::size_t>(v)] |= 1u << e;
    }
    return ctx;
}

}  // namespace bethe_detail

inline MatchingPolynomial matching_polynomial(const Graph& g, int max_edges = 30) {
    if (g.edge_count() > max_edges)
        throw std::length_error("matching_polynomial: edge count " + std::to_string(g.edge_count()) +
                                " exceeds cap " + std::to_string(max_edges));
    auto ctx = bethe_detail::make_poly_context(g);
    const std::uint32_t all = g.edge_count() == 32 ? ~0u : (1u << g.edge_count()) - 1u;
    return MatchingPolynomial{ctx.rec(all)};
}

inline double log_partition(const Graph& g, double z, int max_edges = 30) {
    return matching_polynomial(g, max_edges).log_eval(z);
}

// Exact per-edge occupation probabilities under the size-weighted matching
// distribution: mu(B_e = 1) = z * P(G - {u,v}) / P(G).
inline std::vector<double> gibbs_marginals(const Graph& g, double z, int max_edges = 30) {
    if (g.edge_count() > max_edges)
        throw std::length_error("gibbs_marginals: edge count exceeds cap");
    if (!(z > 0.0)) throw std::invalid_argument("z must be positive");
    auto ctx = bethe_detail::make_poly_context(g);
    const std::uint32_t all = g.edge_count() == 32 ? ~0u : (1u << g.edge_count()) - 1u;
    const double log_pg = MatchingPolynomial{ctx.rec(all)}.log_eval(z);
    std::vector<double> mu(static_cast<std::size_t>(g.edge_count()));
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        auto [u, v] = g.endpoints(e);
        const std::uint32_t rest =
            all & ~(ctx.incident[static_cast<std::size_t>(u)] | ctx.incident[static_cast<std::size_t>(v)]);
        const double log_rest = MatchingPolynomial{ctx.rec(rest)}.log_eval(z);
        mu[static_cast<std::size_t>(e)] = std::exp(std::log(z) + log_rest - log_pg);
    }
    return mu;
}

struct LoopTerm {
    std::uint32_t edges = 0;  // bitmask of the participating edge ids
    double value = 0.0;
};

struct LoopSeries {
    double correction = 1.0;  // 1 + sum over generalized loops
    std::vector<LoopTerm> terms;
    bool terms_truncated = false;

    // Running totals of 1 + sum over loops with at most k edges, k ascending.
    // A cheap truncated estimate; no accuracy claim is attached to it.
    std::vector<double> partial_sums_by_size() const {
        int max_size = 0;
        for (const auto& t : terms) max_size = std::max(max_size, std::popcount(t.edges));
        std::vector<double> by_size(static_cast<std::size_t>(max_size) + 1, 0.0);
        for (const auto& t : terms) by_size[static_cast<std::size_t>(std::popcount(t.edges))] += t.value;
        std::vector<double> partial;
        double acc = 1.0;
        for (double s : by_size) {
            acc += s;
            partial.push_back(acc);
        }
        return partial;
    }
};

namespace bethe_detail {

struct LoopContext {
    const Graph* g;
    std::vector<double> ratio;          // x_e / (1 - x_e)
    std::vector<int> deg_in_subset;     // current d_F(v)
    std::vector<int> undecided;         // per vertex: incident edges not yet decided
    LoopSeries* out;
    std::size_t term_limit;

    // Depth-first include/exclude over edges in index order. A vertex whose
    // incident edges are all decided must not have subset degree exactly 1;
    // checking at decision time prunes every stranded branch.
    void rec(EdgeId e, std::uint32_t chosen, double weight) {
        if (e == g->edge_count()) {
            if (chosen == 0) return;
            int covered = 0;
            double factor = 1.0;
            for (VertexId v = 0; v < g->vertex_count(); ++v) {
                int d = deg_in_subset[static_cast<std::size_t>(v)];
                if (d >= 1) {
                    ++covered;
                    factor *= static_cast<double>(d - 1);
                }
            }
            const double sign = (covered % 2 == 0) ? 1.0 : -1.0;
            const double value = sign * factor * weight;
            out->correction += value;
            if (out->terms.size() < term_limit)
                out->terms.push_back({chosen, value});
            else
                out->terms_truncated = true;
            return;
        }
        auto [u, v] = g->endpoints(e);
        auto decide = [&](VertexId w, int delta) {
            deg_in_subset[static_cast<std::size_t>(w)] += delta;
            --undecided[static_cast<std::size_t>(w)];
        };
        auto undo = [&](VertexId w, int delta) {
            deg_in_subset[static_cast<std::size_t>(w)] -= delta;
            ++undecided[static_cast<std::size_t>(w)];
        };
        auto stranded = [&](VertexId w) {
            return undecided[static_cast<std::size_t>(w)] == 0 && deg_in_subset[static_cast<std::size_t>(w)] == 1;
        };
        for (int take = 0; take <= 1; ++take) {
            decide(u, take);
            decide(v, take);
            if (!stranded(u) && !stranded(v))
                rec(e + 1, take ? (chosen | (1u << e)) : chosen,
                    take ? weight * ratio[static_cast<std::size_t>(e)] : weight);
            undo(u, take);
            undo(v, take);
        }
    }
};

}  // namespace bethe_detail

// Exact correction factor relating the edge-factorized approximation to the
// true distribution: 1 + sum over generalized loops F (edge subsets with no
// degree-1 vertex) of
//   (-1)^{#covered} * prod_{covered v} (d_F(v) - 1) * prod_{e in F} x_e/(1-x_e).
// Terms are emitted in depth-first edge order and reported alongside the sum.
inline LoopSeries loop_series(const Graph& g, const std::vector<double>& x, int max_edges = 24,
                              std::size_t term_limit = 4'000'000) {
    if (g.edge_count() > max_edges)
        throw std::length_error("loop_series: edge count " + std::to_string(g.edge_count()) +
                                " exceeds cap " + std::to_string(max_edges));
    bethe_detail::check_in_polytope(g, x, 1e-9);
    for (double xe : x)
        if (!(xe > 0.0) || !(xe < 1.0))
            throw std::domain_error("loop_series requires edge weights strictly inside (0,1)");
    LoopSeries series;
    bethe_detail::LoopContext ctx;
    ctx.g = &g;
    ctx.ratio.resize(x.size());
    for (std::size_t e = 0; e < x.size(); ++e) ctx.ratio[e] = x[e] / (1.0 - x[e]);
    ctx.deg_in_subset.assign(static_cast<std::size_t>(g.vertex_count()), 0);
    ctx.undecided.assign(static_cast<std::size_t>(g.vertex_count()), 0);
    for (VertexId v = 0; v < g.vertex_count(); ++v) ctx.undecided[static_cast<std::size_t>(v)] = g.degree(v);
    ctx.out = &series;
    ctx.term_limit = term_limit;
    ctx.rec(0, 0, 1.0);
    return series;
}

// Local marginal of the vertex neighborhood under edge weights x: at most
// one incident edge occupied, with weight x_e for that edge and 1 - load for
// the empty configuration.
inline double neighborhood_marginal(const Graph& g, const std::vector<double>& x, VertexId v,
                                    const std::vector<std::uint8_t>& occupied) {
    double load = 0.0;
    double result = 1.0;
    int ones = 0;
    for (const auto& arc : g.arcs(v)) {
        EdgeId e = Graph::edge_of(arc.dir);
        load += x[static_cast<std::size_t>(e)];
        if (occupied[static_cast<std::size_t>(e)]) {
            ++ones;
            result *= x[static_cast<std::size_t>(e)];
        }
    }
    if (ones > 1) return 0.0;
    if (ones == 0) result = 1.0 - load;
    return result;
}

// Max deviation between the exact distribution over matchings and its
// loop-corrected factorized form, both normalized; small caps only.
inline double reparameterization_error(const Graph& g, double z, int max_edges = 12,
                                       double bp_tol = 1e-12) {
    if (g.edge_count() > max_edges)
        throw std::length_error("reparameterization_error: edge count exceeds cap");
    BpResult bp = run_labp(g, z, bp_tol);
    FractionalMatching fm = extract_matching(g, z, bp.y);
    const auto& x = fm.x;
    MatchingPolynomial poly = matching_polynomial(g, max_edges);
    const double pg = poly.eval(z);

    const EdgeId m = g.edge_count();
    std::vector<std::uint8_t> occupied(static_cast<std::size_t>(m), 0);
    std::vector<double> exact, factorized;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        for (EdgeId e = 0; e < m; ++e) occupied[static_cast<std::size_t>(e)] = (mask >> e) & 1u;
        bool matching = true;
        for (VertexId v = 0; v < g.vertex_count() && matching; ++v) {
            int ones = 0;
            for (const auto& arc : g.arcs(v)) ones += occupied[static_cast<std::size_t>(Graph::edge_of(arc.dir))];
            matching = ones <= 1;
        }
        if (!matching) continue;
        int size = 0;
        double ratio = 1.0;
        for (EdgeId e = 0; e < m; ++e) {
            if (occupied[static_cast<std::size_t>(e)]) {
                ++size;
                ratio /= x[static_cast<std::size_t>(e)];
            } else {
                ratio /= 1.0 - x[static_cast<std::size_t>(e)];
            }
        }
        double numerator = 1.0;
        for (VertexId v = 0; v < g.vertex_count(); ++v) numerator *= neighborhood_marginal(g, x, v, occupied);
        exact.push_back(std::pow(z, size) / pg);
        factorized.push_back(numerator * ratio);
    }
    double norm = 0.0;
    for (double f : factorized) norm += f;
    double max_dev = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i)
        max_dev = std::max(max_dev, std::abs(factorized[i] / norm - exact[i]));
    return max_dev;
}

// Everything the analysis command reports at one temperature. Exact and
// loop-corrected fields are filled only when the caps allow.
struct BetheReport {
    double z = 0.0;
    FractionalMatching x;
    double internal_energy = 0.0;  // -sum_e x_e
    double entropy = 0.0;
    double free_entropy = 0.0;
    bool bp_converged = false;
    double bp_gap = 0.0;
    std::optional<double> exact_free_entropy;  // ln P_G(z)
    std::optional<double> log_correction;      // ln of the loop-series correction
    std::optional<LoopSeries> loops;
};

inline BetheReport bethe_report(const Graph& g, double z, bool with_loops, int poly_cap = 30,
                                int loop_cap = 24, double bp_tol = 1e-12,
                                std::uint64_t bp_max_rounds = 1'000'000, ThreadPool* pool = nullptr) {
    BetheReport rep;
    rep.z = z;
    BpResult bp = run_labp(g, z, bp_tol, bp_max_rounds, pool);
    rep.bp_converged = bp.converged;
    rep.bp_gap = bp.env.gap;
    rep.x = extract_matching(g, z, bp.converged ? bp.y : bp.env.lower);
    rep.internal_energy = -rep.x.value;
    rep.entropy = bethe_entropy(g, rep.x.x);
    rep.free_entropy = rep.x.value * std::log(z) + rep.entropy;
    if (with_loops && g.edge_count() <= poly_cap && g.edge_count() <= loop_cap) {
        rep.exact_free_entropy = log_partition(g, z, poly_cap);
        LoopSeries series = loop_series(g, rep.x.x, loop_cap);
        rep.log_correction = std::log(series.correction);
        rep.loops = std::move(series);
    }
    return rep;
}

}  // namespace labp
