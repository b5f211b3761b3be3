// labp: fractional matching / vertex cover solver driven by annealed belief
// propagation, with exact brute-force oracles and Bethe analysis.
//
// Subcommands:
//   nu-star  exact fractional matching number + minimum half-integral cover
//   cover    half-integral cover (general) or integral minimum cover (bipartite)
//   match    fractional matching x(z) at one temperature or along a ladder
//   bethe    Bethe energy/entropy/free entropy, optional exact + loop terms
//   oracle   brute-force ground truth for small graphs
//
// stdout carries the report (text or --json) and is byte-deterministic for
// fixed inputs and flags, independent of --threads; diagnostics and timings
// go to stderr. Exit codes: 0 certified success, 2 completed but uncertified
// (or not converged), 1 hard error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "labp/labp.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUncertified = 2;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Doubles are rounded to their 12-significant-digit printed form before they
// enter the JSON document, so parsing the output recovers each number exactly.
double json_num(double v) { return std::strtod(fmt(v).c_str(), nullptr); }

std::string frac_twice(int twice) { return labp::HalfInt{twice}.str(); }

labp::Graph load_graph(const std::string& path) {
    if (path == "-") return labp::parse_edge_list(std::cin);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    return labp::parse_edge_list(in);
}

struct Report {
    std::ostringstream text;
    json j;
    int exit_code = kExitOk;

    void kv(const std::string& key, const std::string& value) { text << key << " = " << value << "\n"; }
    void kv(const std::string& key, double value) { kv(key, fmt(value)); }
    void note(const std::string& message) { text << "note: " << message << "\n"; }
};

void emit_graph_summary(Report& rep, const labp::Graph& g, bool bip) {
    rep.text << "graph: vertices=" << g.vertex_count() << " edges=" << g.edge_count()
             << " bipartite=" << (bip ? "yes" : "no") << "\n";
    rep.j["graph"] = {{"vertices", g.vertex_count()}, {"edges", g.edge_count()}, {"bipartite", bip}};
}

json anneal_point_json(const labp::AnnealPoint& p) {
    return json{{"z", json_num(p.z)},
                {"value", json_num(p.matching.value)},
                {"gap", json_num(p.gap)},
                {"rounds", p.rounds},
                {"converged", p.converged}};
}

void emit_certificate(Report& rep, const labp::ExactSolution& sol) {
    const auto& cert = sol.certificate;
    rep.kv("primal_value", cert.primal_value);
    rep.kv("primal_z", sol.anneal_trace.back().z);
    rep.kv("primal_envelope_gap", sol.anneal_trace.back().gap);
    rep.kv("duality_gap", cert.gap);
    rep.kv("gap_tol", cert.gap_tol);
    rep.kv("envelope_violations", std::to_string(labp::envelope_violation_count().load()));
    rep.j["envelope_violations"] = labp::envelope_violation_count().load();
    rep.kv("certificate", std::string(cert.passed ? "pass" : "fail"));
    rep.kv("status", std::string(sol.certified ? "certified" : "uncertified"));
    if (!sol.certified && !sol.diagnostic.empty()) rep.note(sol.diagnostic);
    rep.j["certificate"] = {{"primal_value", json_num(cert.primal_value)},
                            {"dual_value", cert.dual_value.str()},
                            {"duality_gap", json_num(cert.gap)},
                            {"gap_tol", json_num(cert.gap_tol)},
                            {"passed", cert.passed}};
    rep.j["certified"] = sol.certified;
    if (!sol.diagnostic.empty()) rep.j["diagnostic"] = sol.diagnostic;
}

void emit_half_cover(Report& rep, const labp::Graph& g, const labp::HalfIntegralCover& cover) {
    if (g.vertex_count() <= 64) {
        std::string line = "[";
        for (labp::VertexId v = 0; v < g.vertex_count(); ++v) {
            if (v) line += ", ";
            line += frac_twice(cover.y_twice[static_cast<std::size_t>(v)]);
        }
        line += "]";
        rep.kv("cover", line);
    }
    rep.kv("cover_value", cover.value.str());
    json yj = json::array();
    for (auto t : cover.y_twice) yj.push_back(frac_twice(t));
    rep.j["cover"] = {{"y", yj}, {"value", cover.value.str()}};
}

struct CommonOpts {
    bool as_json = false;
    int threads = 0;
    double tol = 1e-12;
    std::uint64_t max_rounds = 1'000'000;
};

int default_threads() {
    if (const char* env = std::getenv("LABP_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_flag("--json", o.as_json, "emit a JSON report on stdout");
    cmd->add_option("--threads", o.threads, "worker threads (default: LABP_THREADS or all cores)");
    cmd->add_option("--tol", o.tol, "relative envelope-gap tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-rounds", o.max_rounds, "maximum message updates per temperature");
}

int finish(Report& rep, bool as_json) {
    rep.j["exit_code"] = rep.exit_code;
    if (as_json)
        std::cout << rep.j.dump(2) << "\n";
    else
        std::cout << rep.text.str();
    return rep.exit_code;
}

void check_temperature(double z) {
    if (!(z > 0.0)) throw std::runtime_error("z must be positive");
    if (z > labp::kMaxTemperature) throw std::runtime_error("z above the 1e300 cap");
    if (z > 1e12)
        std::cerr << "warning: z=" << fmt(z) << " exceeds 1e12; double precision cannot separate the "
                  << "finite-temperature iterates there. Use 'nu-star' for the exact optimum.\n";
}

labp::SolveOptions make_solve_options(const CommonOpts& common, double gap_tol,
                                      double divergence_bound, int retries, labp::ThreadPool* pool) {
    labp::SolveOptions opts;
    opts.bp_tol = common.tol;
    opts.bp_max_rounds = common.max_rounds;
    opts.gap_tol = gap_tol;
    opts.divergence_bound = divergence_bound;
    opts.max_retries = retries;
    opts.pool = pool;
    return opts;
}

int cmd_nu_star(const std::string& path, const CommonOpts& common, double gap_tol,
                double divergence_bound, int retries) {
    labp::Graph g = load_graph(path);
    labp::ThreadPool pool(common.threads);
    labp::ExactSolution sol =
        labp::solve_exact(g, make_solve_options(common, gap_tol, divergence_bound, retries, &pool));

    Report rep;
    rep.text << "command: nu-star\n";
    rep.j["command"] = "nu-star";
    emit_graph_summary(rep, g, bipartition(g).has_value());
    if (sol.has_cover) {
        rep.kv("nu_star", sol.nu_star.str());
        rep.j["nu_star"] = sol.nu_star.str();
        rep.j["nu_star_value"] = json_num(sol.nu_star.value());
        emit_half_cover(rep, g, sol.cover);
    } else {
        rep.note("no double-map fixed point found; result unavailable");
    }
    emit_certificate(rep, sol);
    rep.exit_code = sol.certified ? kExitOk : kExitUncertified;
    return finish(rep, common.as_json);
}

int cmd_cover(const std::string& path, const CommonOpts& common, bool bipartite_mode, double gap_tol,
              double divergence_bound, int retries) {
    labp::Graph g = load_graph(path);
    auto bip = labp::bipartition(g);
    if (bipartite_mode && !bip) {
        auto cycle = labp::find_odd_cycle(g);
        std::string msg = "graph is not bipartite; odd cycle:";
        for (auto v : cycle) msg += " " + std::to_string(v);
        throw std::runtime_error(msg);
    }
    labp::ThreadPool pool(common.threads);
    labp::ExactSolution sol =
        labp::solve_exact(g, make_solve_options(common, gap_tol, divergence_bound, retries, &pool));

    Report rep;
    rep.text << "command: cover\n";
    rep.j["command"] = "cover";
    emit_graph_summary(rep, g, bip.has_value());
    rep.exit_code = sol.certified ? kExitOk : kExitUncertified;

    if (!sol.has_cover) {
        rep.note("no double-map fixed point found; result unavailable");
        emit_certificate(rep, sol);
        return finish(rep, common.as_json);
    }

    if (bipartite_mode) {
        labp::VertexCover vc = labp::bipartite_min_cover(g, *bip, sol.fp.divergent);
        std::string members;
        for (labp::VertexId v = 0; v < g.vertex_count(); ++v)
            if (vc.in_cover[static_cast<std::size_t>(v)]) members += (members.empty() ? "" : " ") + std::to_string(v);
        rep.kv("cover_size", std::to_string(vc.size));
        if (g.vertex_count() <= 200) rep.kv("cover_members", members);
        int matching_number = labp::bipartite_max_matching(g, *bip);
        rep.kv("matching_number", std::to_string(matching_number));
        rep.kv("oracle_verified", std::string(matching_number == vc.size ? "yes" : "NO"));
        json members_json = json::array();
        for (labp::VertexId v = 0; v < g.vertex_count(); ++v)
            if (vc.in_cover[static_cast<std::size_t>(v)]) members_json.push_back(v);
        rep.j["cover"] = {{"size", vc.size}, {"members", members_json}};
        rep.j["matching_number"] = matching_number;
        if (matching_number != vc.size) rep.exit_code = kExitUncertified;
    } else {
        emit_half_cover(rep, g, sol.cover);
        int rounded = 0;
        for (auto t : sol.cover.y_twice) rounded += t > 0 ? 1 : 0;
        rep.kv("rounded_cover_size", std::to_string(rounded));
        rep.j["rounded_cover_size"] = rounded;
    }
    emit_certificate(rep, sol);
    return finish(rep, common.as_json);
}

int cmd_match(const std::string& path, const CommonOpts& common, std::optional<double> z_single) {
    labp::Graph g = load_graph(path);
    labp::ThreadPool pool(common.threads);

    std::vector<double> ladder;
    if (z_single) {
        check_temperature(*z_single);
        ladder = {*z_single};
    } else {
        ladder = labp::default_ladder();
    }

    auto trace = labp::anneal(g, ladder, common.tol, common.max_rounds, &pool);

    Report rep;
    rep.text << "command: match\n";
    rep.j["command"] = "match";
    emit_graph_summary(rep, g, labp::bipartition(g).has_value());
    json points = json::array();
    bool all_converged = true;
    for (const auto& p : trace) {
        rep.text << "z=" << fmt(p.z) << " value=" << fmt(p.matching.value) << " gap=" << fmt(p.gap)
                 << " rounds=" << p.rounds << " converged=" << (p.converged ? "yes" : "no") << "\n";
        points.push_back(anneal_point_json(p));
        all_converged = all_converged && p.converged;
    }
    rep.j["points"] = points;

    const labp::AnnealPoint& last = trace.back();
    if (g.edge_count() <= 50) {
        for (labp::EdgeId e = 0; e < g.edge_count(); ++e) {
            auto [u, v] = g.endpoints(e);
            rep.text << "x[" << u << "-" << v << "] = " << fmt(last.matching.x[static_cast<std::size_t>(e)])
                     << "\n";
        }
    }
    json xs = json::array();
    for (double xe : last.matching.x) xs.push_back(json_num(xe));
    rep.j["x"] = xs;
    rep.kv("value", last.matching.value);
    rep.j["value"] = json_num(last.matching.value);

    if (labp::is_forest(g) && g.edge_count() <= 12) {
        auto mu = labp::gibbs_marginals(g, last.z);
        double dev = 0.0;
        for (labp::EdgeId e = 0; e < g.edge_count(); ++e)
            dev = std::max(dev, std::abs(mu[static_cast<std::size_t>(e)] -
                                         last.matching.x[static_cast<std::size_t>(e)]));
        rep.kv("tree_marginal_max_dev", dev);
        rep.j["tree_marginal_max_dev"] = json_num(dev);
    }

    rep.kv("envelope_violations", std::to_string(labp::envelope_violation_count().load()));
    rep.j["envelope_violations"] = labp::envelope_violation_count().load();
    rep.exit_code = all_converged ? kExitOk : kExitUncertified;
    rep.j["converged"] = all_converged;
    return finish(rep, common.as_json);
}

int cmd_bethe(const std::string& path, const CommonOpts& common, double z, bool loops, int poly_cap,
              int loop_cap) {
    labp::Graph g = load_graph(path);
    check_temperature(z);
    labp::ThreadPool pool(common.threads);
    labp::BetheReport br =
        labp::bethe_report(g, z, loops, poly_cap, loop_cap, common.tol, common.max_rounds, &pool);

    Report rep;
    rep.text << "command: bethe\n";
    rep.j["command"] = "bethe";
    emit_graph_summary(rep, g, labp::bipartition(g).has_value());
    rep.kv("z", z);
    rep.kv("matching_value", br.x.value);
    rep.kv("internal_energy", br.internal_energy);
    rep.kv("entropy", br.entropy);
    rep.kv("free_entropy", br.free_entropy);
    rep.j["z"] = json_num(z);
    rep.j["matching_value"] = json_num(br.x.value);
    rep.j["internal_energy"] = json_num(br.internal_energy);
    rep.j["entropy"] = json_num(br.entropy);
    rep.j["free_entropy"] = json_num(br.free_entropy);
    rep.j["bp_converged"] = br.bp_converged;

    if (loops) {
        if (br.exact_free_entropy) {
            double residual = std::abs(*br.log_correction - (*br.exact_free_entropy - br.free_entropy));
            rep.kv("exact_free_entropy", *br.exact_free_entropy);
            rep.kv("loop_correction", br.loops->correction);
            rep.kv("log_loop_correction", *br.log_correction);
            rep.kv("identity_residual", residual);
            rep.j["exact_free_entropy"] = json_num(*br.exact_free_entropy);
            rep.j["loop_correction"] = json_num(br.loops->correction);
            rep.j["log_loop_correction"] = json_num(*br.log_correction);
            rep.j["identity_residual"] = json_num(residual);

            auto partial = br.loops->partial_sums_by_size();
            json pj = json::array();
            std::string pline;
            for (std::size_t k = 0; k < partial.size(); ++k) {
                pline += (k ? ", " : "") + fmt(partial[k]);
                pj.push_back(json_num(partial[k]));
            }
            rep.kv("partial_sums_by_loop_size", "[" + pline + "]");
            rep.j["partial_sums_by_loop_size"] = pj;

            auto terms = br.loops->terms;
            std::stable_sort(terms.begin(), terms.end(), [](const labp::LoopTerm& a, const labp::LoopTerm& b) {
                return std::abs(a.value) > std::abs(b.value);
            });
            if (terms.size() > 10) terms.resize(10);
            json tj = json::array();
            for (const auto& t : terms) {
                std::string edges;
                for (labp::EdgeId e = 0; e < g.edge_count(); ++e)
                    if (t.edges & (1u << e)) edges += (edges.empty() ? "" : ",") + std::to_string(e);
                rep.text << "loop {" << edges << "} contribution = " << fmt(t.value) << "\n";
                tj.push_back({{"edges", edges}, {"value", json_num(t.value)}});
            }
            rep.j["top_loops"] = tj;
        } else {
            rep.note("exact/loop fields omitted: edge count above cap (poly " + std::to_string(poly_cap) +
                     ", loops " + std::to_string(loop_cap) + ")");
        }
    }
    rep.exit_code = br.bp_converged ? kExitOk : kExitUncertified;
    return finish(rep, common.as_json);
}

int cmd_oracle(const std::string& path, bool as_json, int matching_cap, int nu_star_cap, int tau_cap,
               int tau_half_cap, int pp_cap) {
    labp::Graph g = load_graph(path);
    Report rep;
    rep.text << "command: oracle\n";
    rep.j["command"] = "oracle";
    emit_graph_summary(rep, g, labp::bipartition(g).has_value());

    if (g.edge_count() <= matching_cap) {
        auto mc = labp::enumerate_matchings(g, matching_cap);
        rep.kv("nu", std::to_string(mc.max_size));
        rep.j["nu"] = mc.max_size;
        std::string counts;
        json cj = json::array();
        for (auto c : mc.by_size) {
            counts += (counts.empty() ? "" : ",") + std::to_string(c);
            cj.push_back(c);
        }
        rep.kv("matchings_by_size", counts);
        rep.j["matchings_by_size"] = cj;
    } else {
        rep.note("matching enumeration skipped: edge count above cap " + std::to_string(matching_cap));
    }
    if (g.edge_count() <= nu_star_cap) {
        auto ns = labp::max_fractional_matching_scan(g, nu_star_cap);
        rep.kv("nu_star", ns.str());
        rep.j["nu_star"] = ns.str();
    } else {
        rep.note("fractional matching scan skipped: edge count above cap " + std::to_string(nu_star_cap));
    }
    if (g.vertex_count() <= tau_cap) {
        int tau = labp::min_vertex_cover_scan(g, tau_cap);
        rep.kv("tau", std::to_string(tau));
        rep.j["tau"] = tau;
    } else {
        rep.note("vertex cover scan skipped: vertex count above cap " + std::to_string(tau_cap));
    }
    if (g.vertex_count() <= tau_half_cap) {
        auto th = labp::min_half_vertex_cover_scan(g, tau_half_cap);
        rep.kv("tau_star", th.str());
        rep.j["tau_star"] = th.str();
    } else {
        rep.note("half-integral cover scan skipped: vertex count above cap " + std::to_string(tau_half_cap));
    }
    if (g.edge_count() <= pp_cap) {
        auto fps = labp::enumerate_pp_fixed_points(g, pp_cap);
        int best = -1;
        for (const auto& fp : fps)
            if (best < 0 || fp.total_weight < best) best = fp.total_weight;
        rep.kv("pp_fixed_points", std::to_string(fps.size()));
        rep.kv("pp_min_total", frac_twice(best));
        rep.j["pp_fixed_points"] = fps.size();
        rep.j["pp_min_total"] = frac_twice(best);
    } else {
        rep.note("fixed-point enumeration skipped: edge count above cap " + std::to_string(pp_cap));
    }
    return finish(rep, as_json);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractional matching and vertex cover via annealed belief propagation"};
    app.require_subcommand(1);

    std::string path;
    CommonOpts common;
    common.threads = default_threads();

    double gap_tol = 1e-2;
    double divergence_bound = 0.0;
    int retries = 3;

    auto* nu = app.add_subcommand("nu-star", "exact fractional matching number with certificate");
    nu->add_option("graph", path, "edge-list file, or - for stdin")->required();
    add_common(nu, common);
    nu->add_option("--gap-tol", gap_tol, "duality gap tolerance for certification");
    nu->add_option("--divergence-bound", divergence_bound, "promotion threshold (0 = auto)");
    nu->add_option("--retries", retries, "certification retries with squared bound");

    bool bipartite_mode = false;
    auto* cover = app.add_subcommand("cover", "minimum (half-integral) vertex cover");
    cover->add_option("graph", path, "edge-list file, or - for stdin")->required();
    add_common(cover, common);
    cover->add_flag("--bipartite", bipartite_mode, "require 2-colorable input; emit an integral cover");
    cover->add_option("--gap-tol", gap_tol, "duality gap tolerance for certification");
    cover->add_option("--divergence-bound", divergence_bound, "promotion threshold (0 = auto)");
    cover->add_option("--retries", retries, "certification retries with squared bound");

    double z_value = 0.0;
    bool do_anneal = false;
    auto* match = app.add_subcommand("match", "fractional matching from message passing");
    match->add_option("graph", path, "edge-list file, or - for stdin")->required();
    add_common(match, common);
    auto* z_opt = match->add_option("--z", z_value, "single temperature (default: anneal a ladder)");
    match->add_flag("--anneal", do_anneal, "run the default ladder 10^0..10^8")->excludes(z_opt);

    double bethe_z = 1.0;
    bool loops = false;
    int poly_cap = 30, loop_cap = 24;
    auto* bethe = app.add_subcommand("bethe", "Bethe quantities at temperature z");
    bethe->add_option("graph", path, "edge-list file, or - for stdin")->required();
    add_common(bethe, common);
    bethe->add_option("--z", bethe_z, "temperature")->required();
    bethe->add_flag("--loops", loops, "also compute the exact value and loop corrections");
    bethe->add_option("--poly-cap", poly_cap, "edge cap for the exact polynomial");
    bethe->add_option("--loop-cap", loop_cap, "edge cap for loop enumeration");

    bool oracle_json = false;
    int matching_cap = 24, nu_star_cap = 12, tau_cap = 24, tau_half_cap = 16, pp_cap = 8;
    auto* oracle = app.add_subcommand("oracle", "brute-force ground truth (small graphs)");
    oracle->add_option("graph", path, "edge-list file, or - for stdin")->required();
    oracle->add_flag("--json", oracle_json, "emit a JSON report on stdout");
    oracle->add_option("--matching-cap", matching_cap, "edge cap for matching enumeration");
    oracle->add_option("--nu-star-cap", nu_star_cap, "edge cap for the fractional matching scan");
    oracle->add_option("--tau-cap", tau_cap, "vertex cap for the cover scan");
    oracle->add_option("--tau-half-cap", tau_half_cap, "vertex cap for the half-integral cover scan");
    oracle->add_option("--pp-cap", pp_cap, "edge cap for fixed-point enumeration");

    CLI11_PARSE(app, argc, argv);

    const auto t0 = std::chrono::steady_clock::now();
    int code = kExitError;
    try {
        if (nu->parsed())
            code = cmd_nu_star(path, common, gap_tol, divergence_bound, retries);
        else if (cover->parsed())
            code = cmd_cover(path, common, bipartite_mode, gap_tol, divergence_bound, retries);
        else if (match->parsed())
            code = cmd_match(path, common, z_opt->count() ? std::optional<double>(z_value) : std::nullopt);
        else if (bethe->parsed())
            code = cmd_bethe(path, common, bethe_z, loops, poly_cap, loop_cap);
        else if (oracle->parsed())
            code = cmd_oracle(path, oracle_json, matching_cap, nu_star_cap, tau_cap, tau_half_cap, pp_cap);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "elapsed_ms=" << fmt(ms) << "\n";
    return code;
}
