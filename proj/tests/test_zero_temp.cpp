#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "labp/labp.hpp"
#include "support/generators.hpp"

using namespace labp;
using Catch::Matchers::WithinAbs;

TEST_CASE("extended map updates") {
    Graph c3 = testgen::cycle(3);
    Graph p3 = testgen::path(3);
    SECTION("r_map extension rules") {
        for (double v : r_map(c3, ExtMessageVec(6, kInf))) CHECK(v == 0.0);
        for (double v : r_map(c3, ExtMessageVec(6, 0.0))) CHECK(v == 1.0);
        ExtMessageVec y(4, 0.7);
        CHECK(r_map(p3, y)[0] == 1.0);  // leaf origin 0->1
    }
    SECTION("q_map conventions") {
        for (double v : q_map(c3, ExtMessageVec(6, 1.0))) CHECK(v == 1.0);
        for (double v : q_map(c3, ExtMessageVec(6, 0.0))) CHECK(std::isinf(v));
        ExtMessageVec x(4, 0.5);
        CHECK(std::isinf(q_map(p3, x)[0]));  // empty sum at a leaf
    }
    SECTION("p_map") {
        for (auto b : p_map(c3, BoolMsgVec(6, 0))) CHECK(b == 1);
        for (auto b : p_map(c3, BoolMsgVec(6, 1))) CHECK(b == 0);
        // All-zeros is a double-map fixed point on the triangle.
        CHECK(is_pp_fixed_point(c3, BoolMsgVec(6, 0)));
        CHECK(is_pp_fixed_point(c3, BoolMsgVec(6, 1)));
    }
}

TEST_CASE("smallest fixed point on the named small graphs") {
    SECTION("triangle: everything diverges") {
        auto fp = smallest_fixed_point(testgen::cycle(3), 1e4, 100000);
        REQUIRE(fp.stationary);
        REQUIRE(fp.pp_fixed_point);
        for (auto b : fp.divergent) CHECK(b == 1);
    }
    SECTION("3-path: leaf->center diverges, center->leaf settles at 1") {
        auto fp = smallest_fixed_point(testgen::path(3), 1e6, 100000);
        REQUIRE(fp.stationary);
        REQUIRE(fp.pp_fixed_point);
        CHECK(std::isinf(fp.y[0]));
        CHECK_THAT(fp.y[1], WithinAbs(1.0, 1e-12));
        CHECK_THAT(fp.y[2], WithinAbs(1.0, 1e-12));
        CHECK(std::isinf(fp.y[3]));
    }
    SECTION("4-cycle: all-ones indicators") {
        auto fp = smallest_fixed_point(testgen::cycle(4), 1e4, 100000);
        REQUIRE(fp.pp_fixed_point);
        for (auto b : fp.divergent) CHECK(b == 1);
    }
    SECTION("single edge") {
        auto fp = smallest_fixed_point(testgen::path(2), 1e4, 1000);
        REQUIRE(fp.stationary);
        CHECK(std::isinf(fp.y[0]));
        CHECK(std::isinf(fp.y[1]));
    }
    SECTION("star: hub-to-leaf messages stay at 1/(k-1)") {
        // Hub is vertex 0, the low endpoint of every edge, so even ids point
        // hub->leaf and odd ids leaf->hub.
        auto fp = smallest_fixed_point(testgen::star(4), 1e6, 100000);
        REQUIRE(fp.stationary);
        for (DirId d = 0; d < 8; ++d) {
            if (d % 2 == 1)
                CHECK(std::isinf(fp.y[d]));
            else
                CHECK_THAT(fp.y[d], WithinAbs(1.0 / 3.0, 1e-12));
        }
    }
    SECTION("round budget exhaustion is reported, not hidden") {
        auto fp = smallest_fixed_point(testgen::cycle(3), 1e9, 50);
        CHECK_FALSE(fp.stationary);
    }
    SECTION("bound must exceed 1") {
        CHECK_THROWS_AS(smallest_fixed_point(testgen::cycle(3), 1.0, 10), std::invalid_argument);
    }
}

TEST_CASE("monotone iteration and the divergence indicators") {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 12; ++trial) {
        Graph g = testgen::random_connected(std::uniform_int_distribution<int>(4, 8)(rng), 10, rng);
        // Re-run the iteration by hand and require componentwise growth.
        ExtMessageVec y(g.dir_count(), 0.0);
        for (int k = 0; k < 60; ++k) {
            ExtMessageVec next = q_map(g, r_map(g, y));
            for (std::size_t d = 0; d < y.size(); ++d) {
                if (std::isinf(y[d])) next[d] = kInf;
                CHECK(next[d] >= y[d]);
            }
            y = std::move(next);
        }
        auto fp = smallest_fixed_point(g, 1e5, 2'000'000);
        REQUIRE(fp.stationary);
        REQUIRE(fp.pp_fixed_point);

        // Messages that do not diverge agree with a positive image under the
        // ratio map, and the two indicator families propagate onto each other.
        BoolMsgVec ind_x(g.dir_count());
        ExtMessageVec rx = r_map(g, fp.y);
        for (std::size_t d = 0; d < rx.size(); ++d) ind_x[d] = rx[d] > 0.0 ? 1 : 0;
        CHECK(p_map(g, ind_x) == fp.divergent);
        CHECK(p_map(g, fp.divergent) == ind_x);
    }
}

TEST_CASE("cover contributions") {
    SECTION("triangle, all-ones") {
        Graph c3 = testgen::cycle(3);
        BoolMsgVec ones(6, 1);
        for (VertexId v = 0; v < 3; ++v) CHECK(cover_contribution(c3, ones, v) == 1);
    }
    SECTION("3-path fixed point: center carries everything") {
        Graph p3 = testgen::path(3);
        auto fp = smallest_fixed_point(p3, 1e4, 10000);
        CHECK(cover_contribution(p3, fp.divergent, 0) == 0);
        CHECK(cover_contribution(p3, fp.divergent, 1) == 2);
        CHECK(cover_contribution(p3, fp.divergent, 2) == 0);
    }
    SECTION("isolated vertex scores 1") {
        Graph g = Graph::from_edges(3, {{0, 1}});
        BoolMsgVec ind(2, 1);
        CHECK(cover_contribution(g, ind, 2) == 1);
    }
}

TEST_CASE("half-integral cover") {
    SECTION("triangle: all-halves, value 3/2") {
        Graph c3 = testgen::cycle(3);
        auto fp = smallest_fixed_point(c3, 1e4, 100000);
        auto cover = half_integral_cover(c3, fp.divergent);
        for (auto t : cover.y_twice) CHECK(t == 1);
        CHECK(cover.value == HalfInt{3});
    }
    SECTION("3-path: cover (0,1,0)") {
        Graph p3 = testgen::path(3);
        auto fp = smallest_fixed_point(p3, 1e4, 10000);
        auto cover = half_integral_cover(p3, fp.divergent);
        CHECK(cover.y_twice == std::vector<std::uint8_t>{0, 2, 0});
        CHECK(cover.value == HalfInt{2});
    }
    SECTION("4-cycle: all-halves, value 2") {
        Graph c4 = testgen::cycle(4);
        auto cover = half_integral_cover(c4, BoolMsgVec(8, 1));
        CHECK(cover.value == HalfInt{4});
    }
    SECTION("non-fixed-point input is a contract violation") {
        Graph p3 = testgen::path(3);
        CHECK_THROWS_AS(half_integral_cover(p3, BoolMsgVec(4, 1)), std::invalid_argument);
    }
    SECTION("every enumerated fixed point yields a feasible cover") {
        std::mt19937 rng(67);
        for (int trial = 0; trial < 10; ++trial) {
            Graph g = testgen::random_connected(std::uniform_int_distribution<int>(3, 6)(rng), 8, rng);
            if (g.edge_count() > 8) continue;
            for (const auto& fp : enumerate_pp_fixed_points(g)) {
                auto cover = half_integral_cover(g, fp.messages);  // throws if infeasible
                CHECK(cover.value == HalfInt{fp.total_weight});
            }
        }
    }
}

TEST_CASE("fixed-point infimum equals the optimum") {
    std::mt19937 rng(71);
    std::vector<Graph> graphs{testgen::cycle(3), testgen::path(3), testgen::path(2), testgen::star(3)};
    for (int trial = 0; trial < 8; ++trial)
        graphs.push_back(testgen::random_connected(std::uniform_int_distribution<int>(3, 6)(rng), 8, rng));
    for (const Graph& g : graphs) {
        if (g.edge_count() > 8) continue;
        auto fps = enumerate_pp_fixed_points(g);
        REQUIRE_FALSE(fps.empty());
        int min_total = fps[0].total_weight;
        for (const auto& fp : fps) min_total = std::min(min_total, fp.total_weight);
        HalfInt truth = max_fractional_matching_scan(g);
        CHECK(min_total == truth.twice);  // the minimum F-total is twice nu*

        auto sfp = smallest_fixed_point(g, 1e5, 2'000'000);
        REQUIRE(sfp.pp_fixed_point);
        CHECK(total_cover_contribution(g, sfp.divergent) == min_total);

        // The coverage total of the limit messages matches the cover total.
        double coverage = 0.0;
        for (VertexId v = 0; v < g.vertex_count(); ++v) coverage += ext_vertex_coverage(g, sfp.y, v);
        CHECK_THAT(coverage, WithinAbs(static_cast<double>(min_total), 1e-9));
    }
}

TEST_CASE("coverage totals stay below the cover total along seeded iterations") {
    // From any enumerated fixed point I, seed messages at inf where I is set
    // and iterate: indicators must stay at I, messages must grow, and the
    // coverage total must stay below the cover total of I.
    std::mt19937 rng(73);
    for (int trial = 0; trial < 6; ++trial) {
        Graph g = testgen::random_connected(std::uniform_int_distribution<int>(3, 5)(rng), 7, rng);
        if (g.edge_count() > 7) continue;
        for (const auto& fp : enumerate_pp_fixed_points(g)) {
            ExtMessageVec w(g.dir_count());
            for (std::size_t d = 0; d < w.size(); ++d) w[d] = fp.messages[d] ? kInf : 0.0;
            for (int k = 0; k < 25; ++k) {
                double coverage = 0.0;
                for (VertexId v = 0; v < g.vertex_count(); ++v) coverage += ext_vertex_coverage(g, w, v);
                CHECK(coverage <= fp.total_weight + 1e-9);

                ExtMessageVec next = q_map(g, r_map(g, w));
                BoolMsgVec ind(g.dir_count());
                for (std::size_t d = 0; d < w.size(); ++d) {
                    CHECK(next[d] >= w[d]);
                    ind[d] = std::isinf(next[d]) ? 1 : 0;
                }
                CHECK(ind == fp.messages);
                w = std::move(next);
            }
        }
    }
}

TEST_CASE("ext_vertex_coverage handles infinities") {
    Graph p3 = testgen::path(3);
    ExtMessageVec y{kInf, 1.0, 1.0, kInf};
    CHECK(ext_vertex_coverage(p3, y, 0) == 1.0 / 2.0);       // incoming 1->0 carries 1
    CHECK(ext_vertex_coverage(p3, y, 1) == 1.0);             // incoming infinities
    Graph iso = Graph::from_edges(2, {});
    CHECK(ext_vertex_coverage(iso, {}, 0) == 0.0);
}

TEST_CASE("solve_exact end to end") {
    SECTION("triangle") {
        ExactSolution s = solve_exact(testgen::cycle(3));
        REQUIRE(s.certified);
        CHECK(s.nu_star == HalfInt{3});
        CHECK(s.nu_star.str() == "3/2");
    }
    SECTION("3-path") {
        ExactSolution s = solve_exact(testgen::path(3));
        REQUIRE(s.certified);
        CHECK(s.nu_star == HalfInt{2});
        CHECK(s.nu_star.str() == "1");
    }
    SECTION("5-cycle") {
        ExactSolution s = solve_exact(testgen::cycle(5));
        REQUIRE(s.certified);
        CHECK(s.nu_star == HalfInt{5});
    }
    SECTION("petersen graph") {
        ExactSolution s = solve_exact(testgen::petersen());
        REQUIRE(s.certified);
        CHECK(s.nu_star == HalfInt{10});
    }
    SECTION("disconnected input: two triangles") {
        Graph g = Graph::from_edges(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}});
        SolveOptions opts;
        opts.divergence_bound = 1e5;
        ExactSolution s = solve_exact(g, opts);
        REQUIRE(s.certified);
        CHECK(s.nu_star == HalfInt{6});
        CHECK(s.nu_star.str() == "3");
    }
    SECTION("even cycle gives an integral optimum") {
        ExactSolution s = solve_exact(testgen::cycle(6));
        REQUIRE(s.certified);
        CHECK(s.nu_star == HalfInt{6});
    }
    SECTION("wrapper throws when uncertified") {
        SolveOptions opts;
        opts.zt_max_rounds = 3;  // far too few for the triangle's linear growth
        opts.max_retries = 0;
        CHECK_THROWS_AS(fractional_matching_number(testgen::cycle(3), opts), std::runtime_error);
    }
}

TEST_CASE("bipartite minimum covers") {
    SECTION("4-cycle: one side, size 2") {
        Graph c4 = testgen::cycle(4);
        auto b = bipartition(c4);
        ExactSolution s = solve_exact(c4);
        auto vc = bipartite_min_cover(c4, *b, s.fp.divergent);
        CHECK(vc.size == 2);
        CHECK(vc.in_cover == std::vector<std::uint8_t>{1, 0, 1, 0});
    }
    SECTION("3-path: the center") {
        Graph p3 = testgen::path(3);
        auto b = bipartition(p3);
        ExactSolution s = solve_exact(p3);
        auto vc = bipartite_min_cover(p3, *b, s.fp.divergent);
        CHECK(vc.size == 1);
        CHECK(vc.in_cover == std::vector<std::uint8_t>{0, 1, 0});
    }
    SECTION("single edge: one endpoint") {
        Graph k2 = testgen::path(2);
        auto b = bipartition(k2);
        ExactSolution s = solve_exact(k2);
        auto vc = bipartite_min_cover(k2, *b, s.fp.divergent);
        CHECK(vc.size == 1);
        CHECK(vc.in_cover == std::vector<std::uint8_t>{1, 0});
    }
    SECTION("random bipartite graphs match the augmenting-path oracle") {
        std::mt19937 rng(79);
        SolveOptions opts;
        opts.divergence_bound = 1e5;
        for (int trial = 0; trial < 15; ++trial) {
            int nu = std::uniform_int_distribution<int>(2, 7)(rng);
            int nw = std::uniform_int_distribution<int>(2, 7)(rng);
            Graph g = testgen::random_bipartite(nu, nw, 0.35, rng);
            auto b = bipartition(g);
            REQUIRE(b.has_value());
            ExactSolution s = solve_exact(g, opts);
            REQUIRE(s.certified);
            auto vc = bipartite_min_cover(g, *b, s.fp.divergent);
            CHECK(vc.covers(g));
            CHECK(vc.size == bipartite_max_matching(g, *b));
        }
    }
    SECTION("non-fixed-point input rejected") {
        Graph p3 = testgen::path(3);
        CHECK_THROWS_AS(bipartite_min_cover(p3, *bipartition(p3), BoolMsgVec(4, 1)), std::invalid_argument);
    }
}

TEST_CASE("duality certificates") {
    SECTION("triangle: annealed primal against the exact dual") {
        Graph c3 = testgen::cycle(3);
        auto pts = anneal(c3, default_ladder());
        auto cover = half_integral_cover(c3, BoolMsgVec(6, 1));
        Certificate cert = certify_optimal(c3, pts.back().matching, cover, 1e-3);
        CHECK(cert.passed);
        CHECK(cert.gap > 0.0);
        CHECK(cert.gap < 1e-4);
        CHECK(cert.rounding_consistent);
    }
    SECTION("single edge at z=1e6") {
        Graph k2 = testgen::path(2);
        auto pts = anneal(k2, {1e6});
        auto cover = half_integral_cover(k2, BoolMsgVec(2, 1));
        Certificate cert = certify_optimal(k2, pts.back().matching, cover, 1e-3);
        CHECK(cert.passed);
        CHECK_THAT(cert.primal_value, WithinAbs(1e6 / (1.0 + 1e6), 1e-9));
    }
    SECTION("infeasible inputs are rejected before comparison") {
        Graph k2 = testgen::path(2);
        FractionalMatching bad_primal{{1.5}, 1.5};
        auto cover = half_integral_cover(k2, BoolMsgVec(2, 1));
        CHECK_THROWS_AS(certify_optimal(k2, bad_primal, cover, 1e-3), std::invalid_argument);

        FractionalMatching primal{{0.5}, 0.5};
        HalfIntegralCover bad_dual;
        bad_dual.y_twice = {0, 0};
        bad_dual.value = HalfInt{0};
        CHECK_THROWS_AS(certify_optimal(k2, primal, bad_dual, 1e-3), std::invalid_argument);
    }
    SECTION("a primal above the dual is a hard failure") {
        // Unreachable through honest feasible pairs (that is the point of
        // weak duality); force it by lying in the cached value field.
        Graph k2 = testgen::path(2);
        FractionalMatching primal{{1.0}, 1.0};
        HalfIntegralCover dual;
        dual.y_twice = {2, 0};
        dual.value = HalfInt{0};
        CHECK_THROWS_AS(certify_optimal(k2, primal, dual, 1e-3), std::logic_error);
    }
    SECTION("wide gap fails the certificate") {
        Graph c3 = testgen::cycle(3);
        auto pts = anneal(c3, {2.0});  // value 1, far from 3/2
        auto cover = half_integral_cover(c3, BoolMsgVec(6, 1));
        Certificate cert = certify_optimal(c3, pts.back().matching, cover, 1e-3);
        CHECK_FALSE(cert.passed);
    }
}

TEST_CASE("rounded half-integral cover is a 2-approximation") {
    std::mt19937 rng(83);
    SolveOptions opts;
    opts.divergence_bound = 1e5;
    for (int trial = 0; trial < 10; ++trial) {
        Graph g = testgen::random_connected(std::uniform_int_distribution<int>(4, 9)(rng), 12, rng);
        ExactSolution s = solve_exact(g, opts);
        REQUIRE(s.certified);
        int rounded = 0;
        for (auto t : s.cover.y_twice) rounded += t > 0 ? 1 : 0;
        int tau = min_vertex_cover_scan(g);
        CHECK(rounded <= 2 * tau);

        VertexCover vc;
        vc.in_cover.resize(g.vertex_count());
        for (VertexId v = 0; v < g.vertex_count(); ++v) vc.in_cover[v] = s.cover.y_twice[v] > 0 ? 1 : 0;
        CHECK(vc.covers(g));
    }
}
