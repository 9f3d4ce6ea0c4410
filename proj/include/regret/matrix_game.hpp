#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "regret/io.hpp"
#include "regret/lattice.hpp"
#include "regret/simplex.hpp"
#include "regret/types.hpp"

namespace regret {

/**
 * One-round matrix game at a lattice cell: the player (row, minimizer) picks
 * an expert k, the market (column, maximizer) picks an outcome v, and the
 * payoff is the one-step continuation value
 *
 *     a[k][v] = eps * (v_n - v_k) + U(g + eps * delta(v)).
 *
 * Rows are experts 0..n-1; columns are outcome masks 0..2^n-1.
 */
struct StageGame {
    int n = 0;
    double eps = 0.0;
    Vec a; // row-major, a[k * 2^n + v]

    int cols() const { return 1 << n; }
    double at(int k, std::uint32_t v) const {
        return a[static_cast<std::size_t>(k) * static_cast<std::size_t>(cols()) + v];
    }
};

inline StageGame build_stage_game(const ValueGrid& grid, const Payoff& phi,
                                  const GapState& g, double eps) {
    const GapLattice& lat = grid.lattice;
    if (eps != lat.eps())
        throw std::invalid_argument("build_stage_game: eps must match the lattice step");
    if (!lat.in_box(g.m)) throw std::invalid_argument("build_stage_game: cell outside box");
    const int n = lat.n();
    const int C = 1 << n;
    StageGame game;
    game.n = n;
    game.eps = eps;
    game.a.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(C), 0.0);
    std::vector<int> mv(static_cast<std::size_t>(n - 1));
    for (int v = 0; v < C; ++v) {
        const OutcomeVector out(n, static_cast<std::uint32_t>(v));
        const std::vector<int> d = gap_displacement(out);
        for (int i = 0; i + 1 < n; ++i)
            mv[static_cast<std::size_t>(i)] = g.m[static_cast<std::size_t>(i)] + d[static_cast<std::size_t>(i)];
        const double cont = grid.read(mv, phi);
        if (!std::isfinite(cont))
            throw std::runtime_error("build_stage_game: non-finite continuation value");
        const int vn = out.wins(n - 1) ? 1 : 0;
        for (int k = 0; k < n; ++k) {
            const int vk = out.wins(k) ? 1 : 0;
            game.a[static_cast<std::size_t>(k) * static_cast<std::size_t>(C) +
                   static_cast<std::size_t>(v)] = eps * (vn - vk) + cont;
        }
    }
    return game;
}

/// Saddle value and optimal mixed strategies of a stage game.
struct MinimaxSolution {
    double value = 0.0;
    PlayerMix alpha;
    MarketMix market;
    double dual_gap = 0.0; // max_v (alpha'A)_v - min_k (A p)_k, >= 0, ~0 at optimum
    int lp_iterations = 0;
};

/// Reusable buffers for the per-cell minimax solve (hot path: no allocation).
struct MinimaxWorkspace {
    DenseSimplex lp;
    Vec lpA, b, c, y, z, alpha, p;
    int n = 0, C = 0;

    void resize(int n_, int C_) {
        if (n == n_ && C == C_) return;
        n = n_;
        C = C_;
        lpA.resize(static_cast<std::size_t>(C) * static_cast<std::size_t>(n));
        b.assign(static_cast<std::size_t>(C), 1.0);
        c.assign(static_cast<std::size_t>(n), 1.0);
        y.resize(static_cast<std::size_t>(n));
        z.resize(static_cast<std::size_t>(C));
        alpha.resize(static_cast<std::size_t>(n));
        p.resize(static_cast<std::size_t>(C));
    }
};

namespace detail {

/**
 * Core minimax solve on a column-major matrix acm[v*n + k] = a[k][v].
 * Classical reduction: shift entries positive, then
 *
 *     max 1'y  s.t.  A''y <= 1, y >= 0     (A'' = shifted matrix, rows = v)
 *
 * has optimum 1/V'; the player's mix is y/1'y and the market's mix comes
 * from the dual prices.  Writes alpha/p into the workspace; returns value,
 * duality gap (checked by the caller), and pivot count.
 */
struct MinimaxCore {
    double value = 0.0;
    double dual_gap = 0.0;
    int iterations = 0;
};

inline MinimaxCore solve_minimax_core(int n, int C, const double* acm, MinimaxWorkspace& ws) {
    ws.resize(n, C);
    const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(C);
    double lo = acm[0], hi = acm[0];
    bool finite = true; // NaN slips through min/max, so track it explicitly
    for (std::size_t i = 0; i < total; ++i) {
        const double v = acm[i];
        finite = finite && std::isfinite(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!finite) throw std::invalid_argument("solve_minimax: non-finite matrix entry");

    MinimaxCore out;
    if (lo == hi) {
        // Constant game: both sides are indifferent; return the uniform pair.
        std::fill(ws.alpha.begin(), ws.alpha.end(), 1.0 / n);
        std::fill(ws.p.begin(), ws.p.end(), 1.0 / C);
        out.value = lo;
        return out;
    }

    const double shift = 1.0 - lo;
    for (std::size_t i = 0; i < total; ++i) ws.lpA[i] = acm[i] + shift;
    const double obj =
        ws.lp.solve(C, n, ws.lpA.data(), ws.b.data(), ws.c.data(), ws.y.data(), ws.z.data());
    out.iterations = ws.lp.last_iterations();
    if (!(obj > 0.0) || !std::isfinite(obj))
        throw LpError("solve_minimax: degenerate objective", out.iterations);

    double ys = 0.0, zs = 0.0;
    for (int k = 0; k < n; ++k) ys += (ws.y[k] = std::max(ws.y[k], 0.0));
    for (int v = 0; v < C; ++v) zs += (ws.z[v] = std::max(ws.z[v], 0.0));
    if (!(ys > 0.0) || !(zs > 0.0))
        throw LpError("solve_minimax: empty support after clipping", out.iterations);
    for (int k = 0; k < n; ++k) ws.alpha[k] = ws.y[k] / ys;
    for (int v = 0; v < C; ++v) ws.p[v] = ws.z[v] / zs;

    // Evaluate both strategies on the original matrix; their spread is the
    // duality gap and bounds the distance from the exact saddle value.
    double upper = -1e300;
    for (int v = 0; v < C; ++v) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += ws.alpha[k] * acm[static_cast<std::size_t>(v) * n + k];
        upper = std::max(upper, s);
    }
    double lower = 1e300;
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int v = 0; v < C; ++v) s += ws.p[v] * acm[static_cast<std::size_t>(v) * n + k];
        lower = std::min(lower, s);
    }
    out.value = upper;
    out.dual_gap = upper - lower;
    return out;
}

} // namespace detail

inline MinimaxSolution solve_minimax(const StageGame& game, MinimaxWorkspace& ws,
                                     double gap_tol = 1e-8) {
    const int n = game.n;
    const int C = game.cols();
    // Transpose into the column-major layout the core expects.
    static thread_local Vec acm;
    acm.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(C));
    for (int v = 0; v < C; ++v)
        for (int k = 0; k < n; ++k)
            acm[static_cast<std::size_t>(v) * n + k] =
                game.a[static_cast<std::size_t>(k) * C + v];
    const detail::MinimaxCore core = detail::solve_minimax_core(n, C, acm.data(), ws);
    if (!(core.dual_gap <= gap_tol))
        throw LpError("solve_minimax: duality gap " + format_sig17(core.dual_gap) +
                          " exceeds tolerance",
                      core.iterations);
    MinimaxSolution sol;
    sol.value = core.value;
    sol.alpha = PlayerMix{ws.alpha};
    sol.market = MarketMix{n, ws.p};
    sol.dual_gap = core.dual_gap;
    sol.lp_iterations = core.iterations;
    return sol;
}

inline MinimaxSolution solve_minimax(const StageGame& game) {
    MinimaxWorkspace ws;
    return solve_minimax(game, ws);
}

namespace detail {
/// Masks ordered lexicographically by outcome tuple (v_1, ..., v_n).
inline std::vector<std::uint32_t> lex_mask_order(int n) {
    std::vector<std::uint32_t> order(static_cast<std::size_t>(1) << n);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [n](std::uint32_t a, std::uint32_t b) {
        return lex_less(OutcomeVector(n, a), OutcomeVector(n, b));
    });
    return order;
}
} // namespace detail

/**
 * Rebalance an optimal market mix so every expert wins with equal
 * probability, without changing the game value.  Mass is moved from
 * outcomes where a lagging expert loses to the same outcome with that
 * expert flipped to a win; flipping one bit raises only that expert's win
 * probability, and the minimizer's payoff row can only go up, so the value
 * is preserved.  Donors are visited in lexicographic outcome order, which
 * makes the result deterministic.
 */
inline MarketMix balance_market(const StageGame& game, const MinimaxSolution& sol) {
    const int n = game.n;
    MarketMix mix = sol.market;
    Vec win(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) win[static_cast<std::size_t>(k)] = mix.expected_win(k);
    int lead = 0;
    for (int k = 1; k < n; ++k)
        if (win[static_cast<std::size_t>(k)] > win[static_cast<std::size_t>(lead)]) lead = k;
    const double target = win[static_cast<std::size_t>(lead)];
    const std::vector<std::uint32_t> order = detail::lex_mask_order(n);

    for (int k = 0; k < n; ++k) {
        double deficit = target - win[static_cast<std::size_t>(k)];
        if (deficit <= 1e-15) continue;
        for (std::uint32_t v : order) {
            if ((v >> k) & 1u) continue;
            const double avail = mix.prob[v];
            if (avail <= 0.0) continue;
            const double moved = std::min(avail, deficit);
            mix.prob[v] -= moved;
            mix.prob[v | (1u << k)] += moved;
            deficit -= moved;
            if (deficit <= 1e-15) break;
        }
        if (deficit > 1e-12)
            throw std::runtime_error("balance_market: could not equalize win probabilities");
        win[static_cast<std::size_t>(k)] = mix.expected_win(k);
    }
    return mix;
}

/// Strategy artifact: value, player mix, market support in lexicographic order.
inline std::string strategy_json(const MinimaxSolution& sol, bool balanced) {
    const int n = sol.alpha.n();
    std::string market = "[\n";
    bool first = true;
    for (std::uint32_t v : detail::lex_mask_order(n)) {
        const double p = sol.market.prob[v];
        if (p <= 0.0) continue;
        if (!first) market += ",\n";
        first = false;
        market += "    {\"v\": \"" + OutcomeVector(n, v).bits() +
                  "\", \"prob\": " + format_sig17(p) + "}";
    }
    market += "\n  ]";
    JsonWriter w;
    w.field("value", sol.value)
        .field("alpha", sol.alpha.alpha)
        .raw("market", market)
        .field("balanced", balanced)
        .field("dual_gap", sol.dual_gap);
    return w.str();
}

} // namespace regret
