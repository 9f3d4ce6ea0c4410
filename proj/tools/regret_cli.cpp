// Batch front end: parse config + flags, run one experiment, write artifacts.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "regret/config.hpp"
#include "regret/version.hpp"

namespace {

/// CLI11 option handles for one subcommand, so flag presence can be checked
/// after parsing (flags override config-file values only when actually given).
struct FlagSet {
    std::string config_path;
    regret::ExperimentConfig flags;
    CLI::Option* config = nullptr;
    CLI::Option* n = nullptr;
    CLI::Option* payoff = nullptr;
    CLI::Option* tau = nullptr;
    CLI::Option* eps = nullptr;
    CLI::Option* R = nullptr;
    CLI::Option* T = nullptr;
    CLI::Option* tol = nullptr;
    CLI::Option* max_iter = nullptr;
    CLI::Option* method = nullptr;
    CLI::Option* rho = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* paths = nullptr;
    CLI::Option* mode = nullptr;
    CLI::Option* policy = nullptr;
    CLI::Option* x0 = nullptr;
    CLI::Option* samples = nullptr;
    CLI::Option* radius = nullptr;
    CLI::Option* trace_paths = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* quiet = nullptr;
};

void register_flags(CLI::App* sub, FlagSet& fs) {
    fs.config = sub->add_option("--config", fs.config_path, "JSON config file (flags override it)");
    fs.n = sub->add_option("--n", fs.flags.n, "number of experts");
    fs.payoff = sub->add_option("--payoff", fs.flags.payoff_name, "payoff: max | logsumexp | mean");
    fs.tau = sub->add_option("--tau", fs.flags.tau, "logsumexp temperature");
    fs.eps = sub->add_option("--eps", fs.flags.eps, "step size(s) in (0,1)");
    fs.R = sub->add_option("--R", fs.flags.R, "physical gap-box radius");
    fs.T = sub->add_option("--T", fs.flags.T, "finite horizon");
    fs.tol = sub->add_option("--tol", fs.flags.tol, "solver stopping tolerance");
    fs.max_iter = sub->add_option("--max-iter", fs.flags.max_iter, "solver sweep cap");
    fs.method = sub->add_option("--method", fs.flags.method, "value-iteration | euler-map");
    fs.rho = sub->add_option("--rho", fs.flags.rho, "Euler step (<= 0 selects 0.49/K)");
    fs.seed = sub->add_option("--seed", fs.flags.seed, "RNG seed");
    fs.paths = sub->add_option("--paths", fs.flags.paths, "simulation paths");
    fs.mode = sub->add_option("--mode", fs.flags.mode, "geometric | finite-horizon");
    fs.policy = sub->add_option("--policy", fs.flags.policy, "exact-u3 | uniform");
    fs.x0 = sub->add_option("--x0", fs.flags.x0, "initial payoff state (n numbers)");
    fs.samples = sub->add_option("--samples", fs.flags.samples, "payoff validation samples");
    fs.radius = sub->add_option("--radius", fs.flags.radius, "payoff validation sampling radius");
    fs.trace_paths = sub->add_option("--trace-paths", fs.flags.trace_paths,
                                     "number of simulation paths to trace to CSV");
    fs.out = sub->add_option("--out", fs.flags.out, "output directory");
    fs.quiet = sub->add_flag("--quiet", fs.flags.quiet, "suppress progress output");
}

regret::ExperimentConfig assemble(const std::string& command, const FlagSet& fs) {
    regret::ExperimentConfig cfg;
    cfg.command = command;
    if (fs.config->count()) {
        regret::merge_config_file(cfg, fs.config_path);
        if (cfg.command != command)
            throw regret::ConfigError("config: 'command' is '" + cfg.command +
                                      "' but the invoked subcommand is '" + command + "'");
    }
    if (fs.n->count()) cfg.n = fs.flags.n;
    if (fs.payoff->count()) cfg.payoff_name = fs.flags.payoff_name;
    if (fs.tau->count()) cfg.tau = fs.flags.tau;
    if (fs.eps->count()) cfg.eps = fs.flags.eps;
    if (fs.R->count()) cfg.R = fs.flags.R;
    if (fs.T->count()) cfg.T = fs.flags.T;
    if (fs.tol->count()) cfg.tol = fs.flags.tol;
    if (fs.max_iter->count()) cfg.max_iter = fs.flags.max_iter;
    if (fs.method->count()) cfg.method = fs.flags.method;
    if (fs.rho->count()) cfg.rho = fs.flags.rho;
    if (fs.seed->count()) cfg.seed = fs.flags.seed;
    if (fs.paths->count()) cfg.paths = fs.flags.paths;
    if (fs.mode->count()) cfg.mode = fs.flags.mode;
    if (fs.policy->count()) cfg.policy = fs.flags.policy;
    if (fs.x0->count()) cfg.x0 = fs.flags.x0;
    if (fs.samples->count()) cfg.samples = fs.flags.samples;
    if (fs.radius->count()) cfg.radius = fs.flags.radius;
    if (fs.trace_paths->count()) cfg.trace_paths = fs.flags.trace_paths;
    if (fs.out->count()) cfg.out = fs.flags.out;
    if (fs.quiet->count()) cfg.quiet = fs.flags.quiet;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regret: minimax solvers for prediction with expert advice"};
    app.set_version_flag("--version", std::string(regret::kVersion));
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> kCommands = {
        {"solve-geometric", "solve the geometric-stopping value on the gap lattice"},
        {"solve-horizon", "solve the finite-horizon value by backward induction"},
        {"compare-exact", "n=3 grid versus exact solution: sup-error table over the eps list"},
        {"residual-study", "PDE residual of the solved grid versus eps"},
        {"counterexample-n4", "evaluate the n=4 second-difference gap report"},
        {"simulate", "Monte-Carlo play under extracted or uniform policies"},
        {"validate-payoff", "probe payoff axioms at random points"},
    };
    std::vector<FlagSet> flags(kCommands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < kCommands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(kCommands[i].first, kCommands[i].second);
        register_flags(sub, flags[i]);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        for (std::size_t i = 0; i < kCommands.size(); ++i) {
            if (subs[i]->parsed()) {
                const regret::ExperimentConfig cfg = assemble(kCommands[i].first, flags[i]);
                return regret::run_experiment(cfg);
            }
        }
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const regret::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
