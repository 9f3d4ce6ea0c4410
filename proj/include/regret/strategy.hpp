#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "regret/analytic.hpp"
#include "regret/io.hpp"
#include "regret/lattice.hpp"
#include "regret/payoff.hpp"
#include "regret/rng.hpp"
#include "regret/types.hpp"

namespace regret {

/// Player mix read off a solved grid, with the raw (pre-projection) gradient.
struct PlayerExtraction {
    PlayerMix alpha;
    Vec raw;                 // central differences for experts 1..n-1, remainder for n
    double displacement = 0.0; // sup-norm distance between raw and projected mix
};

/**
 * The optimal player mix is the value gradient.  Experts i < n get the
 * central difference of U along g_i; the last expert gets the remainder
 * 1 - sum, which is exact because u(x + c 1) = u(x) + c forces the gradient
 * onto the simplex hyperplane.  Tiny negatives from discretization are
 * clipped and the mix renormalized.
 */
inline PlayerExtraction extract_player(const ValueGrid& grid, const Payoff& phi,
                                       const GapState& g, double eps) {
    const GapLattice& lat = grid.lattice;
    if (eps != lat.eps())
        throw std::invalid_argument("extract_player: eps must match the lattice step");
    if (!lat.in_box(g.m)) throw std::invalid_argument("extract_player: cell outside box");
    const int n = lat.n();
    PlayerExtraction out;
    out.raw.resize(static_cast<std::size_t>(n));
    std::vector<int> mp, mm;
    double partial = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        mp = g.m;
        mm = g.m;
        mp[static_cast<std::size_t>(i)] += 1;
        mm[static_cast<std::size_t>(i)] -= 1;
        out.raw[static_cast<std::size_t>(i)] = (grid.read(mp, phi) - grid.read(mm, phi)) / (2.0 * eps);
        partial += out.raw[static_cast<std::size_t>(i)];
    }
    out.raw[static_cast<std::size_t>(n - 1)] = 1.0 - partial;

    Vec clipped(out.raw);
    double s = 0.0;
    for (double& a : clipped) s += (a = std::max(a, 0.0));
    if (!(s > 0.5))
        throw std::runtime_error("extract_player: degenerate gradient (sum far from 1)");
    out.alpha.alpha.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.alpha.alpha[static_cast<std::size_t>(i)] = clipped[static_cast<std::size_t>(i)] / s;
    for (int i = 0; i < n; ++i)
        out.displacement = std::max(out.displacement,
                                    std::fabs(out.alpha.alpha[static_cast<std::size_t>(i)] -
                                              out.raw[static_cast<std::size_t>(i)]));
    return out;
}

/// One complementary outcome pair {v, ~v} played half/half, with the value
/// of its second-difference form.
struct MarketPair {
    OutcomeVector v;    // lexicographically smaller member
    OutcomeVector vbar; // complement
    double form;
};

/**
 * Market strategies read off a solved grid.  The optimal market maximizes
 * the second difference of U along the displacement of v; v and its
 * complement displace oppositely, so their forms coincide exactly and the
 * maximizer set splits into pairs.  `pairs` lists every maximizer pair
 * within a fixed tie tolerance; `canonical` is the lexicographically
 * smallest member across them.  When every form is near zero (a payoff the
 * market cannot exploit) the profile is flagged degenerate and the
 * canonical choice falls back to the lexicographically smallest nontrivial
 * pair.
 */
struct StrategyProfile {
    PlayerMix alpha;
    double alpha_displacement = 0.0;
    std::vector<MarketPair> pairs;
    OutcomeVector canonical;
    bool degenerate = false;
    double max_form = 0.0;
};

namespace detail {
inline std::vector<MarketPair> maximizer_pairs(int n, const std::function<double(std::uint32_t)>& form,
                                               double tie_tol, double* max_out) {
    const int C = 1 << n;
    Vec q(static_cast<std::size_t>(C));
    double qmax = -1e300;
    for (int v = 0; v < C; ++v) {
        q[static_cast<std::size_t>(v)] = form(static_cast<std::uint32_t>(v));
        if (v != 0 && v != C - 1) qmax = std::max(qmax, q[static_cast<std::size_t>(v)]);
    }
    std::vector<MarketPair> pairs;
    for (std::uint32_t v = 1; v < static_cast<std::uint32_t>(C - 1); ++v) {
        const OutcomeVector ov(n, v);
        const OutcomeVector oc = ov.complement();
        if (!lex_less(ov, oc)) continue; // keep one representative per pair
        if (q[v] >= qmax - tie_tol) pairs.push_back({ov, oc, q[v]});
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const MarketPair& a, const MarketPair& b) { return lex_less(a.v, b.v); });
    *max_out = qmax;
    return pairs;
}
} // namespace detail

inline StrategyProfile extract_market(const ValueGrid& grid, const Payoff& phi,
                                      const GapState& g, double eps) {
    const GapLattice& lat = grid.lattice;
    if (eps != lat.eps())
        throw std::invalid_argument("extract_market: eps must match the lattice step");
    if (!lat.in_box(g.m)) throw std::invalid_argument("extract_market: cell outside box");
    const int n = lat.n();
    const double u0 = grid.values[lat.index_of(g.m)];
    const double tie_tol = 1e-7;

    auto form = [&](std::uint32_t v) {
        const std::vector<int> d = gap_displacement(OutcomeVector(n, v));
        std::vector<int> mp(g.m), mm(g.m);
        for (std::size_t i = 0; i < mp.size(); ++i) {
            mp[i] += d[i];
            mm[i] -= d[i];
        }
        return (grid.read(mp, phi) - 2.0 * u0 + grid.read(mm, phi)) / (eps * eps);
    };

    StrategyProfile prof{{}, 0.0, {}, OutcomeVector(n, 1), false, 0.0};
    prof.pairs = detail::maximizer_pairs(n, form, tie_tol, &prof.max_form);
    prof.degenerate = prof.max_form <= tie_tol; // market gains nothing by moving
    prof.canonical = prof.pairs.front().v;

    const PlayerExtraction pe = extract_player(grid, phi, g, eps);
    prof.alpha = pe.alpha;
    prof.alpha_displacement = pe.displacement;
    return prof;
}

// ---------------------------------------------------------------------------
// Simulation

using PlayerPolicy = std::function<PlayerMix(const RegretPoint&)>;

struct MarketAction {
    OutcomeVector v;
    double prob;
};
using MarketPolicy = std::function<std::vector<MarketAction>(const RegretPoint&)>;

enum class GameMode { Geometric, FiniteHorizon };

struct SimulationConfig {
    GameMode mode = GameMode::Geometric;
    double eps = 0.1;
    double T = 1.0; // finite-horizon only
    long paths = 10000;
    std::uint64_t seed = 1;
    long trace_paths = 0; // paths whose rounds are streamed to the trace sink
};

struct SimulationReport {
    std::string mode;
    long paths = 0;
    double mean_payoff = 0.0;
    double ci95_halfwidth = 0.0;
    double mean_rounds = 0.0;
    std::uint64_t seed = 0;
    double eps = 0.0;
};

namespace detail {

/// Exact-rounding-friendly sum: pairwise reduction, independent of chunking.
inline double pairwise_sum(const double* a, std::size_t len) {
    if (len <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += a[i];
        return s;
    }
    const std::size_t half = len / 2;
    return pairwise_sum(a, half) + pairwise_sum(a + half, len - half);
}

inline int sample_index(const double* prob, int count, double u) {
    double acc = 0.0;
    for (int i = 0; i + 1 < count; ++i) {
        acc += prob[i];
        if (u < acc) return i;
    }
    return count - 1;
}

} // namespace detail

/**
 * Play out the repeated game under the given policies and average the final
 * payoff.  Geometric mode stops each round with probability eps^2 before any
 * play; finite-horizon mode plays ceil(T / eps^2) rounds.  Each path uses
 * its own counter-derived RNG stream, so results do not depend on path
 * evaluation order, and the mean uses pairwise summation.
 */
inline SimulationReport simulate(const Payoff& phi, const PlayerPolicy& player,
                                 const MarketPolicy& market, const RegretPoint& x0,
                                 const SimulationConfig& cfg, std::ostream* trace = nullptr) {
    if (cfg.paths < 1) throw std::invalid_argument("simulate: paths must be >= 1");
    if (!(cfg.eps > 0.0) || !(cfg.eps < 1.0))
        throw std::invalid_argument("simulate: eps must lie in (0, 1)");
    const int n = phi.n();
    if (x0.n() != n) throw std::invalid_argument("simulate: x0 dimension mismatch");
    const double delta = cfg.eps * cfg.eps;
    const long horizon_rounds =
        cfg.mode == GameMode::FiniteHorizon
            ? std::max(1L, static_cast<long>(std::ceil(cfg.T / delta - 1e-12)))
            : 0L;

    if (trace && cfg.trace_paths > 0) *trace << "path,round,expert,outcome,payoff_state\n";

    Vec payoffs(static_cast<std::size_t>(cfg.paths));
    Vec rounds(static_cast<std::size_t>(cfg.paths));
    Vec alpha_buf;
    Vec action_prob;
    RegretPoint x;
    for (long p = 0; p < cfg.paths; ++p) {
        SplitMix64 rng(derive_stream(cfg.seed, static_cast<std::uint64_t>(p)));
        x.x = x0.x;
        long round = 0;
        for (;;) {
            if (cfg.mode == GameMode::Geometric) {
                if (rng.uniform() < delta) break;
            } else if (round >= horizon_rounds) {
                break;
            }
            const std::vector<MarketAction> actions = market(x);
            action_prob.resize(actions.size());
            for (std::size_t i = 0; i < actions.size(); ++i) action_prob[i] = actions[i].prob;
            const int ai = detail::sample_index(action_prob.data(),
                                                static_cast<int>(actions.size()), rng.uniform());
            const OutcomeVector v = actions[static_cast<std::size_t>(ai)].v;

            const PlayerMix mix = player(x);
            alpha_buf = mix.alpha;
            const int k =
                detail::sample_index(alpha_buf.data(), static_cast<int>(alpha_buf.size()),
                                     rng.uniform());

            const double vk = v.wins(k) ? 1.0 : 0.0;
            for (int i = 0; i < n; ++i)
                x.x[static_cast<std::size_t>(i)] += cfg.eps * ((v.wins(i) ? 1.0 : 0.0) - vk);
            ++round;
            if (trace && p < cfg.trace_paths) {
                *trace << p << "," << round << "," << k << "," << v.bits() << ","
                       << format_sig17(phi(x.x)) << "\n";
            }
        }
        payoffs[static_cast<std::size_t>(p)] = phi(x.x);
        rounds[static_cast<std::size_t>(p)] = static_cast<double>(round);
    }

    const double np = static_cast<double>(cfg.paths);
    const double mean = detail::pairwise_sum(payoffs.data(), payoffs.size()) / np;
    Vec sq(payoffs.size());
    for (std::size_t i = 0; i < payoffs.size(); ++i) {
        const double d = payoffs[i] - mean;
        sq[i] = d * d;
    }
    SimulationReport rep;
    rep.mode = cfg.mode == GameMode::Geometric ? "geometric" : "finite-horizon";
    rep.paths = cfg.paths;
    rep.mean_payoff = mean;
    if (cfg.paths > 1) {
        const double var = detail::pairwise_sum(sq.data(), sq.size()) / (np - 1.0);
        rep.ci95_halfwidth = 1.96 * std::sqrt(var / np);
    }
    rep.mean_rounds = detail::pairwise_sum(rounds.data(), rounds.size()) / np;
    rep.seed = cfg.seed;
    rep.eps = cfg.eps;
    return rep;
}

inline std::string simulation_report_json(const SimulationReport& rep) {
    JsonWriter w;
    w.field("mode", rep.mode)
        .field("paths", rep.paths)
        .field("mean_payoff", rep.mean_payoff)
        .field("ci95_halfwidth", rep.ci95_halfwidth)
        .field("mean_rounds", rep.mean_rounds)
        .field("seed", static_cast<unsigned long long>(rep.seed))
        .field("eps", rep.eps);
    return w.str();
}

// ---------------------------------------------------------------------------
// Canned policies

/// Optimal player for three experts via the exact gradient (allocation-lean:
/// the gradient is already a simplex point up to rounding dust).
inline PlayerPolicy player_policy_exact_u3() {
    return [](const RegretPoint& x) {
        Vec g(3);
        regret::detail::U3Kernel(x.x.data()).grad(g.data());
        double s = 0.0;
        for (double& a : g) s += (a = std::max(a, 0.0));
        for (double& a : g) a /= s;
        return PlayerMix{std::move(g)};
    };
}

/// Optimal market for three experts: the lexicographically smallest outcome
/// whose exact Hessian form ties the maximum, paired with its complement,
/// half/half.
inline MarketPolicy market_policy_exact_u3() {
    return [](const RegretPoint& x) {
        const regret::detail::U3Kernel ker(x.x.data());
        double q[7];
        double qmax = -1e300;
        for (std::uint32_t v = 1; v <= 6; ++v) qmax = std::max(qmax, q[v] = ker.form(v));
        std::uint32_t pick = 0;
        for (std::uint32_t v : regret::detail::kLexMasks3) {
            if (q[v] >= qmax - 1e-7) {
                pick = v;
                break;
            }
        }
        const OutcomeVector v0(3, pick);
        return std::vector<MarketAction>{{v0, 0.5}, {v0.complement(), 0.5}};
    };
}

/// Uniform baselines (for contrast experiments).
inline PlayerPolicy player_policy_uniform(int n) {
    return [n](const RegretPoint&) {
        return PlayerMix{Vec(static_cast<std::size_t>(n), 1.0 / n)};
    };
}

inline MarketPolicy market_policy_uniform(int n) {
    return [n](const RegretPoint&) {
        std::vector<MarketAction> acts;
        const int C = 1 << n;
        acts.reserve(static_cast<std::size_t>(C));
        for (int v = 0; v < C; ++v)
            acts.push_back({OutcomeVector(n, static_cast<std::uint32_t>(v)), 1.0 / C});
        return acts;
    };
}

/// Policies read off a solved grid; states outside the box use the nearest
/// box cell (the playout can wander past any finite truncation).
inline PlayerPolicy player_policy_from_grid(const ValueGrid& grid, const Payoff& phi) {
    return [grid, phi](const RegretPoint& x) {
        const GapLattice& lat = grid.lattice;
        std::vector<int> m(static_cast<std::size_t>(lat.dim()));
        for (int i = 0; i < lat.dim(); ++i) {
            const double gi = (x.x[static_cast<std::size_t>(i)] - x.x[static_cast<std::size_t>(lat.n() - 1)]) / lat.eps();
            m[static_cast<std::size_t>(i)] =
                std::clamp(static_cast<int>(std::lround(gi)), -lat.radius(), lat.radius());
        }
        return extract_player(grid, phi, GapState{m}, lat.eps()).alpha;
    };
}

inline MarketPolicy market_policy_from_grid(const ValueGrid& grid, const Payoff& phi) {
    return [grid, phi](const RegretPoint& x) {
        const GapLattice& lat = grid.lattice;
        std::vector<int> m(static_cast<std::size_t>(lat.dim()));
        for (int i = 0; i < lat.dim(); ++i) {
            const double gi = (x.x[static_cast<std::size_t>(i)] - x.x[static_cast<std::size_t>(lat.n() - 1)]) / lat.eps();
            m[static_cast<std::size_t>(i)] =
                std::clamp(static_cast<int>(std::lround(gi)), -lat.radius(), lat.radius());
        }
        const StrategyProfile prof = extract_market(grid, phi, GapState{m}, lat.eps());
        return std::vector<MarketAction>{{prof.canonical, 0.5},
                                         {prof.canonical.complement(), 0.5}};
    };
}

} // namespace regret
