#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "regret/analytic.hpp"
#include "regret/dpp.hpp"
#include "regret/io.hpp"
#include "regret/lattice.hpp"
#include "regret/matrix_game.hpp"
#include "regret/payoff.hpp"
#include "regret/strategy.hpp"
#include "regret/types.hpp"
#include "regret/version.hpp"

namespace regret {

/// Invalid configuration (unknown key, bad value, inconsistent combination).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One experiment: a subcommand plus every tunable, declaratively.
struct ExperimentConfig {
    std::string command;
    int n = 3;
    std::string payoff_name = "max"; // max | logsumexp | mean
    double tau = 0.5;                // logsumexp temperature
    std::vector<double> eps{0.1};
    double R = 3.0; // physical gap-box radius; lattice radius M = round(R/eps)
    double T = 1.0;
    double tol = 1e-10;
    int max_iter = 200000;
    std::string method = "value-iteration"; // value-iteration | euler-map
    double rho = 0.0;                        // <= 0: default 0.49/K
    std::uint64_t seed = 1;
    long paths = 10000;
    std::string mode = "geometric";  // simulate: geometric | finite-horizon
    std::string policy = "exact-u3"; // simulate: exact-u3 | uniform
    Vec x0;                          // empty = origin
    int samples = 10000;             // validate-payoff
    double radius = 2.0;             // validate-payoff sampling radius
    long trace_paths = 0;
    std::string out = "out";
    bool quiet = false;
};

namespace detail {

template <class T>
T get_typed(const nlohmann::json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: invalid value for key '" + key + "'");
    }
}

inline std::vector<double> get_number_list(const nlohmann::json& j, const std::string& key) {
    if (j.is_number()) return {j.get<double>()};
    if (j.is_array()) {
        std::vector<double> out;
        for (const auto& e : j) {
            if (!e.is_number()) throw ConfigError("config: invalid value for key '" + key + "'");
            out.push_back(e.get<double>());
        }
        return out;
    }
    throw ConfigError("config: invalid value for key '" + key + "'");
}

} // namespace detail

/// Merge a parsed JSON document into cfg.  Every key is checked against the
/// schema; unknown keys are an error naming the key.
inline void merge_config_json(ExperimentConfig& cfg, const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (const auto& [key, val] : doc.items()) {
        if (key == "command") cfg.command = detail::get_typed<std::string>(val, key);
        else if (key == "n") cfg.n = detail::get_typed<int>(val, key);
        else if (key == "payoff") {
            if (!val.is_object()) throw ConfigError("config: 'payoff' must be an object");
            for (const auto& [pk, pv] : val.items()) {
                if (pk == "name") cfg.payoff_name = detail::get_typed<std::string>(pv, "payoff.name");
                else if (pk == "tau") cfg.tau = detail::get_typed<double>(pv, "payoff.tau");
                else throw ConfigError("config: unknown key 'payoff." + pk + "'");
            }
        } else if (key == "eps") cfg.eps = detail::get_number_list(val, key);
        else if (key == "R") cfg.R = detail::get_typed<double>(val, key);
        else if (key == "T") cfg.T = detail::get_typed<double>(val, key);
        else if (key == "tol") cfg.tol = detail::get_typed<double>(val, key);
        else if (key == "max_iter") cfg.max_iter = detail::get_typed<int>(val, key);
        else if (key == "method") cfg.method = detail::get_typed<std::string>(val, key);
        else if (key == "rho") cfg.rho = detail::get_typed<double>(val, key);
        else if (key == "seed") cfg.seed = detail::get_typed<std::uint64_t>(val, key);
        else if (key == "paths") cfg.paths = detail::get_typed<long>(val, key);
        else if (key == "mode") cfg.mode = detail::get_typed<std::string>(val, key);
        else if (key == "policy") cfg.policy = detail::get_typed<std::string>(val, key);
        else if (key == "x0") cfg.x0 = detail::get_number_list(val, key);
        else if (key == "samples") cfg.samples = detail::get_typed<int>(val, key);
        else if (key == "radius") cfg.radius = detail::get_typed<double>(val, key);
        else if (key == "trace_paths") cfg.trace_paths = detail::get_typed<long>(val, key);
        else if (key == "out") cfg.out = detail::get_typed<std::string>(val, key);
        else if (key == "quiet") cfg.quiet = detail::get_typed<bool>(val, key);
        else throw ConfigError("config: unknown key '" + key + "'");
    }
}

inline void merge_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse error in '" + path + "': " + e.what());
    }
    merge_config_json(cfg, doc);
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n < 2 || cfg.n > 10) throw ConfigError("config: 'n' must lie in [2, 10]");
    if (cfg.payoff_name != "max" && cfg.payoff_name != "logsumexp" && cfg.payoff_name != "mean")
        throw ConfigError("config: 'payoff.name' must be max, logsumexp, or mean");
    if (cfg.payoff_name == "logsumexp" && !(cfg.tau > 0.0))
        throw ConfigError("config: 'payoff.tau' must be positive");
    if (cfg.eps.empty()) throw ConfigError("config: 'eps' must not be empty");
    for (double e : cfg.eps)
        if (!(e > 0.0) || !(e < 1.0)) throw ConfigError("config: 'eps' entries must lie in (0, 1)");
    if (!(cfg.R > 0.0)) throw ConfigError("config: 'R' must be positive");
    if (!(cfg.T > 0.0)) throw ConfigError("config: 'T' must be positive");
    if (!(cfg.tol > 0.0)) throw ConfigError("config: 'tol' must be positive");
    if (cfg.max_iter < 1) throw ConfigError("config: 'max_iter' must be >= 1");
    if (cfg.method != "value-iteration" && cfg.method != "euler-map")
        throw ConfigError("config: 'method' must be value-iteration or euler-map");
    if (cfg.paths < 1) throw ConfigError("config: 'paths' must be >= 1");
    if (cfg.mode != "geometric" && cfg.mode != "finite-horizon")
        throw ConfigError("config: 'mode' must be geometric or finite-horizon");
    if (cfg.policy != "exact-u3" && cfg.policy != "uniform")
        throw ConfigError("config: 'policy' must be exact-u3 or uniform");
    if (cfg.samples < 1) throw ConfigError("config: 'samples' must be >= 1");
    if (!(cfg.radius > 0.0)) throw ConfigError("config: 'radius' must be positive");
    if (cfg.trace_paths < 0) throw ConfigError("config: 'trace_paths' must be >= 0");
    if (cfg.out.empty()) throw ConfigError("config: 'out' must not be empty");
}

inline Payoff make_payoff(const ExperimentConfig& cfg) {
    if (cfg.payoff_name == "max") return Payoff::max(cfg.n);
    if (cfg.payoff_name == "logsumexp") return Payoff::log_sum_exp(cfg.n, cfg.tau);
    return Payoff::mean(cfg.n);
}

namespace detail {

inline std::string config_echo_json(const ExperimentConfig& cfg) {
    JsonWriter payoff;
    payoff.field("name", cfg.payoff_name).field("tau", cfg.tau);
    JsonWriter w;
    w.field("command", cfg.command)
        .field("n", cfg.n)
        .raw("payoff", payoff.str())
        .field("eps", cfg.eps)
        .field("R", cfg.R)
        .field("T", cfg.T)
        .field("tol", cfg.tol)
        .field("max_iter", cfg.max_iter)
        .field("method", cfg.method)
        .field("rho", cfg.rho)
        .field("seed", static_cast<unsigned long long>(cfg.seed))
        .field("paths", cfg.paths)
        .field("mode", cfg.mode)
        .field("policy", cfg.policy)
        .field("x0", cfg.x0)
        .field("samples", cfg.samples)
        .field("radius", cfg.radius)
        .field("trace_paths", cfg.trace_paths)
        .field("out", cfg.out)
        .field("quiet", cfg.quiet);
    return w.str();
}

class ArtifactSink {
public:
    ArtifactSink(const ExperimentConfig& cfg) : cfg_(cfg), t0_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(cfg.out);
    }

    std::string path_of(const std::string& name) const {
        return (std::filesystem::path(cfg_.out) / name).string();
    }

    void write(const std::string& name, const std::string& content) {
        const std::string p = path_of(name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write artifact '" + p + "'");
        out << content;
        names_.push_back(name);
        if (!cfg_.quiet) std::cout << "wrote " << p << "\n";
    }

    template <class F>
    void write_stream(const std::string& name, F&& fill) {
        const std::string p = path_of(name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write artifact '" + p + "'");
        fill(out);
        names_.push_back(name);
        if (!cfg_.quiet) std::cout << "wrote " << p << "\n";
    }

    /// The manifest records the effective config, artifact list, and timing.
    void finish() {
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0_)
                              .count();
        std::string arts = "[";
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (i) arts += ", ";
            arts += "\"" + names_[i] + "\"";
        }
        arts += "]";
        JsonWriter w;
        w.field("command", cfg_.command)
            .field("version", kVersion)
            .raw("config", config_echo_json(cfg_))
            .raw("artifacts", arts)
            .field("elapsed_ms", ms);
        write("manifest.json", w.str());
    }

private:
    const ExperimentConfig& cfg_;
    std::chrono::steady_clock::time_point t0_;
    std::vector<std::string> names_;
};

inline GapLattice lattice_for(const ExperimentConfig& cfg, double eps) {
    const int M = static_cast<int>(std::lround(cfg.R / eps));
    if (M < 1) throw ConfigError("config: 'R' must cover at least one lattice step");
    return GapLattice(cfg.n, eps, M);
}

inline GeometricConfig geometric_config(const ExperimentConfig& cfg, double eps) {
    GeometricConfig g;
    g.eps = eps;
    g.tol = cfg.tol;
    g.max_iter = cfg.max_iter;
    g.rho = cfg.rho;
    g.method = cfg.method == "euler-map" ? GeometricConfig::Method::EulerMap
                                         : GeometricConfig::Method::ValueIteration;
    return g;
}

inline void require_single_eps(const ExperimentConfig& cfg) {
    if (cfg.eps.size() != 1)
        throw ConfigError("config: 'eps' must be a single value for command '" + cfg.command +
                          "'");
}

inline Vec x0_or_origin(const ExperimentConfig& cfg, int n) {
    if (cfg.x0.empty()) return Vec(static_cast<std::size_t>(n), 0.0);
    if (static_cast<int>(cfg.x0.size()) != n)
        throw ConfigError("config: 'x0' must have length n");
    return cfg.x0;
}

// --- subcommand bodies -----------------------------------------------------

inline int cmd_solve_geometric(const ExperimentConfig& cfg) {
    require_single_eps(cfg);
    const double eps = cfg.eps[0];
    const Payoff phi = make_payoff(cfg);
    const GapLattice lat = lattice_for(cfg, eps);
    ArtifactSink sink(cfg);
    auto [grid, rep] = solve_geometric(lat, phi, geometric_config(cfg, eps));
    sink.write_stream("grid.csv", [&grid](std::ostream& os) { write_grid_csv(os, grid); });
    sink.write("convergence.json", convergence_report_json(rep));

    // Stage-game strategy at the origin cell, market balanced.
    const GapState center{std::vector<int>(static_cast<std::size_t>(lat.dim()), 0)};
    const StageGame game = build_stage_game(grid, phi, center, eps);
    MinimaxSolution sol = solve_minimax(game);
    sol.market = balance_market(game, sol);
    sink.write("strategy.json", strategy_json(sol, true));
    sink.finish();
    if (!cfg.quiet)
        std::cout << "solve-geometric: " << rep.iterations << " sweeps, residual "
                  << format_sig17(rep.scheme_residual) << (rep.converged ? "" : " (NOT converged)")
                  << "\n";
    return rep.converged ? 0 : 3;
}

inline int cmd_solve_horizon(const ExperimentConfig& cfg) {
    require_single_eps(cfg);
    const double eps = cfg.eps[0];
    const Payoff phi = make_payoff(cfg);
    const GapLattice lat = lattice_for(cfg, eps);
    ArtifactSink sink(cfg);
    const TimeValueGrid w = solve_finite_horizon(lat, phi, eps, cfg.T);
    for (int j = 0; j <= w.steps; ++j) {
        char name[32];
        std::snprintf(name, sizeof name, "slice_%04d.csv", j);
        const ValueGrid g = w.slice_grid(j);
        sink.write_stream(name, [&g](std::ostream& os) { write_grid_csv(os, g); });
    }
    JsonWriter rep;
    rep.field("T_requested", w.T_requested)
        .field("T_actual", w.T_actual)
        .field("steps", w.steps)
        .field("eps", eps)
        .field("slice_time_order", "slice_0000.csv is t = T_actual; each next file is one "
                                   "eps^2 step earlier; the last is t = 0");
    sink.write("horizon.json", rep.str());
    sink.finish();
    return 0;
}

inline int cmd_compare_exact(const ExperimentConfig& cfg) {
    if (cfg.n != 3) throw ConfigError("config: compare-exact requires n = 3");
    if (cfg.payoff_name != "max") throw ConfigError("config: compare-exact requires payoff max");
    const Payoff phi = make_payoff(cfg);
    ArtifactSink sink(cfg);
    std::ostringstream csv;
    csv << "eps,cells,iterations,sup_error_window\n";
    bool all_converged = true;
    for (double eps : cfg.eps) {
        const GapLattice lat = lattice_for(cfg, eps);
        auto [grid, rep] = solve_geometric(lat, phi, geometric_config(cfg, eps));
        all_converged = all_converged && rep.converged;
        const double window = cfg.R / 3.0;
        double sup = 0.0;
        for (std::size_t i = 0; i < grid.values.size(); ++i) {
            const std::vector<int> m = lat.m_of(i);
            bool inside = true;
            for (int c : m) inside = inside && std::fabs(c * eps) <= window + 1e-12;
            if (!inside) continue;
            const double exact = exact_u3(RegretPoint{lat.lift(m)});
            sup = std::max(sup, std::fabs(grid.values[i] - exact));
        }
        csv << format_sig17(eps) << "," << lat.cell_count() << "," << rep.iterations << ","
            << format_sig17(sup) << "\n";
        if (!cfg.quiet)
            std::cout << "compare-exact eps=" << eps << ": sup error " << format_sig17(sup)
                      << "\n";
    }
    sink.write("compare_exact.csv", csv.str());
    sink.finish();
    return all_converged ? 0 : 3;
}

inline int cmd_residual_study(const ExperimentConfig& cfg) {
    const Payoff phi = make_payoff(cfg);
    ArtifactSink sink(cfg);
    std::ostringstream csv;
    csv << "eps,cells,iterations,sup_pde_residual_window\n";
    bool all_converged = true;
    for (double eps : cfg.eps) {
        const GapLattice lat = lattice_for(cfg, eps);
        auto [grid, rep] = solve_geometric(lat, phi, geometric_config(cfg, eps));
        all_converged = all_converged && rep.converged;
        const double window = cfg.R / 3.0;
        double sup = 0.0;
        for (std::size_t i = 0; i < grid.values.size(); ++i) {
            const std::vector<int> m = lat.m_of(i);
            bool inside = true;
            for (int c : m) inside = inside && std::fabs(c * eps) <= window + 1e-12;
            if (!inside) continue;
            sup = std::max(sup, std::fabs(pde_residual_grid(grid, phi, m, 1)));
        }
        csv << format_sig17(eps) << "," << lat.cell_count() << "," << rep.iterations << ","
            << format_sig17(sup) << "\n";
    }
    sink.write("residual_study.csv", csv.str());
    sink.finish();
    return all_converged ? 0 : 3;
}

inline int cmd_counterexample_n4(const ExperimentConfig& cfg) {
    const Vec x0 = cfg.x0.empty() ? Vec(4, 0.0) : cfg.x0;
    if (x0.size() != 4) throw ConfigError("config: counterexample-n4 requires a length-4 'x0'");
    ArtifactSink sink(cfg);
    sink.write("counterexample.json", n4_gap_json(n4_gap(RegretPoint{x0})));
    sink.finish();
    return 0;
}

inline int cmd_simulate(const ExperimentConfig& cfg) {
    require_single_eps(cfg);
    const double eps = cfg.eps[0];
    const Payoff phi = make_payoff(cfg);
    PlayerPolicy player;
    MarketPolicy market;
    if (cfg.policy == "exact-u3") {
        if (cfg.n != 3 || cfg.payoff_name != "max")
            throw ConfigError("config: policy exact-u3 requires n = 3 and payoff max");
        player = player_policy_exact_u3();
        market = market_policy_exact_u3();
    } else {
        player = player_policy_uniform(cfg.n);
        market = market_policy_uniform(cfg.n);
    }
    SimulationConfig sc;
    sc.mode = cfg.mode == "finite-horizon" ? GameMode::FiniteHorizon : GameMode::Geometric;
    sc.eps = eps;
    sc.T = cfg.T;
    sc.paths = cfg.paths;
    sc.seed = cfg.seed;
    sc.trace_paths = cfg.trace_paths;
    const RegretPoint x0{x0_or_origin(cfg, cfg.n)};

    ArtifactSink sink(cfg);
    SimulationReport rep;
    if (cfg.trace_paths > 0) {
        std::ostringstream trace;
        rep = simulate(phi, player, market, x0, sc, &trace);
        sink.write("trace.csv", trace.str());
    } else {
        rep = simulate(phi, player, market, x0, sc);
    }
    sink.write("simulation.json", simulation_report_json(rep));
    sink.finish();
    if (!cfg.quiet)
        std::cout << "simulate: mean " << format_sig17(rep.mean_payoff) << " +- "
                  << format_sig17(rep.ci95_halfwidth) << "\n";
    return 0;
}

inline int cmd_validate_payoff(const ExperimentConfig& cfg) {
    const Payoff phi = make_payoff(cfg);
    ArtifactSink sink(cfg);
    const ValidationReport rep = validate_payoff(phi, cfg.samples, cfg.radius, cfg.seed);
    sink.write("validation.json", validation_report_json(rep));
    sink.finish();
    if (!cfg.quiet)
        std::cout << "validate-payoff: " << (rep.all_pass ? "all axioms pass" : "axiom FAILURES")
                  << "\n";
    return 0;
}

} // namespace detail

/**
 * Execute one experiment.  Exit status: 0 success, 2 config error
 * (thrown as ConfigError before any solve), 3 solver non-convergence
 * (partial artifacts are still written), exceptions propagate for the
 * caller to map to 1.
 */
inline int run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.command == "solve-geometric") return detail::cmd_solve_geometric(cfg);
    if (cfg.command == "solve-horizon") return detail::cmd_solve_horizon(cfg);
    if (cfg.command == "compare-exact") return detail::cmd_compare_exact(cfg);
    if (cfg.command == "residual-study") return detail::cmd_residual_study(cfg);
    if (cfg.command == "counterexample-n4") return detail::cmd_counterexample_n4(cfg);
    if (cfg.command == "simulate") return detail::cmd_simulate(cfg);
    if (cfg.command == "validate-payoff") return detail::cmd_validate_payoff(cfg);
    throw ConfigError("config: unknown command '" + cfg.command + "'");
}

} // namespace regret
