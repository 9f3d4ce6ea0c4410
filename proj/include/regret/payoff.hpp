#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regret/io.hpp"
#include "regret/rng.hpp"
#include "regret/types.hpp"

namespace regret {

/**
 * Terminal payoff phi : R^n -> R.  The solvers assume phi is Lipschitz,
 * coordinate-monotone, symmetric under permutations, of linear growth, and
 * translation-covariant: phi(x + c*1) = phi(x) + c.  Feeding a payoff that
 * violates these (a custom one, say) is allowed but voids the convergence
 * guarantees; validate_payoff() probes the axioms empirically.
 */
class Payoff {
public:
    enum class Kind { Max, LogSumExp, Custom };

    using Fn = std::function<double(std::span<const double>)>;

    static Payoff max(int n) {
        Payoff p(n, Kind::Max, "max", 0.0);
        return p;
    }

    /// Smooth soft-max: tau * log(sum_i exp(x_i / tau)), tau > 0.
    static Payoff log_sum_exp(int n, double tau) {
        if (!(tau > 0.0)) throw std::invalid_argument("log_sum_exp: tau must be positive");
        Payoff p(n, Kind::LogSumExp, "logsumexp", tau);
        return p;
    }

    /// Arithmetic mean of the coordinates (the degenerate "indifferent" payoff).
    static Payoff mean(int n) {
        return custom(n, "mean", [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v;
            return s / static_cast<double>(x.size());
        });
    }

    static Payoff custom(int n, std::string name, Fn fn) {
        Payoff p(n, Kind::Custom, std::move(name), 0.0);
        p.fn_ = std::move(fn);
        return p;
    }

    int n() const { return n_; }
    Kind kind() const { return kind_; }
    double tau() const { return tau_; }
    const std::string& name() const { return name_; }

    double operator()(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n_)
            throw std::invalid_argument("Payoff: dimension mismatch");
        switch (kind_) {
            case Kind::Max: {
                double m = x[0];
                for (double v : x) m = std::max(m, v);
                return m;
            }
            case Kind::LogSumExp: {
                double m = x[0];
                for (double v : x) m = std::max(m, v);
                double s = 0.0;
                for (double v : x) s += std::exp((v - m) / tau_);
                return m + tau_ * std::log(s);
            }
            case Kind::Custom:
                return fn_(x);
        }
        throw std::logic_error("Payoff: unreachable");
    }

    double operator()(const Vec& x) const { return (*this)(std::span<const double>(x)); }

private:
    Payoff(int n, Kind kind, std::string name, double tau)
        : n_(n), kind_(kind), tau_(tau), name_(std::move(name)) {
        if (n < 1) throw std::invalid_argument("Payoff: n must be >= 1");
    }

    int n_;
    Kind kind_;
    double tau_;
    std::string name_;
    Fn fn_;
};

inline double eval_payoff(const Payoff& phi, const RegretPoint& p) {
    if (!all_finite(p.x)) throw std::invalid_argument("eval_payoff: non-finite input");
    return phi(p.x);
}

struct AxiomCheck {
    std::string axiom;
    bool pass = false;
    double worst = 0.0; // worst observed violation (axiom-specific scale)
};

struct ValidationReport {
    std::vector<AxiomCheck> axioms;
    bool all_pass = false;
    double lipschitz_estimate = 0.0; // sup |phi(x)-phi(y)| / |x-y|_inf over samples
    double growth_c1 = 0.0;          // slope of the |phi(x)| <= c1*|x|_inf + c2 envelope
    double growth_c2 = 0.0;
    std::uint64_t seed = 0;
    int samples = 0;
    double radius = 0.0;
};

/**
 * Empirically probe the payoff axioms on `samples` points drawn uniformly
 * from [-radius, radius]^n.  Deterministic for a fixed (samples, radius,
 * seed) triple.  An exact certificate is impossible for black-box payoffs;
 * the checks use tolerance 1e-9 on each sampled identity.
 */
inline ValidationReport validate_payoff(const Payoff& phi, int samples, double radius,
                                        std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("validate_payoff: samples must be >= 1");
    if (!(radius > 0.0)) throw std::invalid_argument("validate_payoff: radius must be positive");
    const int n = phi.n();
    const double tol = 1e-9;
    SplitMix64 g(derive_stream(seed, 0x7A11DA7EULL));

    double worst_translation = 0.0, worst_symmetry = 0.0, worst_monotone = 0.0;
    double lip = 0.0, growth_c2 = std::fabs(phi(Vec(static_cast<std::size_t>(n), 0.0)));

    Vec x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    std::vector<int> perm(static_cast<std::size_t>(n));
    struct Sample { double fx, norm; };
    std::vector<Sample> seen;
    seen.reserve(static_cast<std::size_t>(samples));

    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = g.uniform(-radius, radius);
        const double fx = phi(x);
        double norm = 0.0;
        for (double v : x) norm = std::max(norm, std::fabs(v));
        seen.push_back({fx, norm});

        // Translation: phi(x + c*1) = phi(x) + c.
        const double c = g.uniform(-radius, radius);
        y = x;
        for (double& v : y) v += c;
        worst_translation = std::max(worst_translation, std::fabs(phi(y) - fx - c));

        // Symmetry: phi(sigma x) = phi(x) for a random permutation sigma.
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[static_cast<std::size_t>(i)],
                      perm[g.below(static_cast<std::uint64_t>(i + 1))]);
        for (int i = 0; i < n; ++i)
            y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        worst_symmetry = std::max(worst_symmetry, std::fabs(phi(y) - fx));

        // Monotonicity: bumping one coordinate up cannot decrease phi.
        const int i0 = static_cast<int>(g.below(static_cast<std::uint64_t>(n)));
        y = x;
        y[static_cast<std::size_t>(i0)] += g.uniform(0.0, radius);
        worst_monotone = std::max(worst_monotone, fx - phi(y));

        // Lipschitz ratio against a fresh random point.
        for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = g.uniform(-radius, radius);
        double dist = 0.0;
        for (int i = 0; i < n; ++i)
            dist = std::max(dist, std::fabs(x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]));
        if (dist > 1e-12) lip = std::max(lip, std::fabs(phi(y) - fx) / dist);
    }
    for (const Sample& s : seen) growth_c2 = std::max(growth_c2, std::fabs(s.fx) - lip * s.norm);

    ValidationReport rep;
    rep.seed = seed;
    rep.samples = samples;
    rep.radius = radius;
    rep.lipschitz_estimate = lip;
    rep.growth_c1 = lip;
    rep.growth_c2 = growth_c2;
    rep.axioms = {
        {"lipschitz", std::isfinite(lip) && lip < 1e6, lip},
        {"monotone", worst_monotone <= tol, worst_monotone},
        {"symmetric", worst_symmetry <= tol, worst_symmetry},
        {"translation", worst_translation <= tol, worst_translation},
        {"linear_growth", std::isfinite(growth_c2) && growth_c2 < 1e6, growth_c2},
    };
    rep.all_pass = true;
    for (const AxiomCheck& a : rep.axioms) rep.all_pass = rep.all_pass && a.pass;
    return rep;
}

inline std::string validation_report_json(const ValidationReport& rep) {
    std::string axioms = "[\n";
    for (std::size_t i = 0; i < rep.axioms.size(); ++i) {
        const AxiomCheck& a = rep.axioms[i];
        axioms += "    {\"axiom\": \"" + a.axiom + "\", \"pass\": " +
                  (a.pass ? "true" : "false") + ", \"worst\": " + format_sig17(a.worst) + "}";
        if (i + 1 < rep.axioms.size()) axioms += ",";
        axioms += "\n";
    }
    axioms += "  ]";
    JsonWriter w;
    w.raw("axioms", axioms)
        .field("all_pass", rep.all_pass)
        .field("lipschitz_estimate", rep.lipschitz_estimate)
        .field("growth_c1", rep.growth_c1)
        .field("growth_c2", rep.growth_c2)
        .field("seed", static_cast<unsigned long long>(rep.seed))
        .field("samples", rep.samples)
        .field("radius", rep.radius);
    return w.str();
}

} // namespace regret
