#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regret/io.hpp"
#include "regret/lattice.hpp"
#include "regret/matrix_game.hpp"
#include "regret/parallel.hpp"
#include "regret/payoff.hpp"

namespace regret {

/**
 * Parameters of the geometric-stopping solve.  Each round the game stops
 * with probability delta = eps^2; the scaled fixed-point equation is
 *
 *     U = T(U),   T(U) = eps^2 * phi + (1 - eps^2) * minimax step.
 *
 * T is a (1 - eps^2)-contraction in the sup norm, so plain fixed-point
 * ("value-iteration") converges geometrically.  The explicit Euler map
 * S_rho(U) = U - rho * F(U) on the residual F(U) = (U - T(U)) / eps^2 is the
 * same family with a tunable step; F has sup-norm Lipschitz constant
 * K = 1 + (1 - eps^2) / eps^2 and S_rho contracts whenever 0 < rho <= 1/K.
 * The default rho = 0.49/K keeps a comfortable stability margin.
 */
struct GeometricConfig {
    enum class Method { ValueIteration, EulerMap };

    double eps = 0.1;
    double tol = 1e-10;
    int max_iter = 200000;
    double rho = 0.0; // <= 0 selects the default 0.49 / K
    Method method = Method::ValueIteration;

    double delta() const { return eps * eps; }
    double scheme_lipschitz() const { return 1.0 + (1.0 - eps * eps) / (eps * eps); }

    double rho_effective() const {
        if (method == Method::ValueIteration) return eps * eps; // S_{1/K} == T
        return rho > 0.0 ? rho : 0.49 / scheme_lipschitz();
    }

    void validate() const {
        if (!(eps > 0.0) || !(eps < 1.0))
            throw std::invalid_argument("GeometricConfig: eps must lie in (0, 1)");
        if (!(tol > 0.0)) throw std::invalid_argument("GeometricConfig: tol must be positive");
        if (max_iter < 1) throw std::invalid_argument("GeometricConfig: max_iter must be >= 1");
        if (method == Method::EulerMap && rho > 0.0 && rho > 1.0 / scheme_lipschitz())
            throw std::invalid_argument("GeometricConfig: rho exceeds stability bound 1/K");
    }

    static std::string method_name(Method m) {
        return m == Method::ValueIteration ? "value-iteration" : "euler-map";
    }
};

struct ConvergenceReport {
    int iterations = 0;
    double final_change = 0.0;   // sup-norm change of the last sweep
    double scheme_residual = 0.0; // sup-norm of F at the returned grid, recomputed directly
    std::string method;
    double rho = 0.0; // effective step (eps^2 for value-iteration)
    double K = 0.0;
    double elapsed_ms = 0.0;
    bool converged = false;
    Vec change_history; // successive sup-norm changes, one per sweep
};

inline std::string convergence_report_json(const ConvergenceReport& rep) {
    JsonWriter w;
    w.field("iterations", rep.iterations)
        .field("final_change", rep.final_change)
        .field("scheme_residual", rep.scheme_residual)
        .field("method", rep.method)
        .field("rho", rep.rho)
        .field("K", rep.K)
        .field("elapsed_ms", rep.elapsed_ms)
        .field("converged", rep.converged);
    return w.str();
}

namespace detail {

/// Per-lattice tables shared by every sweep: payoff at each cell, linear
/// index offset of each outcome's displacement, regret increments, interior mask.
struct SweepContext {
    GapLattice lat;
    int n, C;
    double eps;
    Vec phi_cell;
    std::vector<long long> off;
    Vec tcm; // tcm[v*n + k] = eps * (v_n - v_k)
    std::vector<std::uint8_t> interior;

    SweepContext(const GapLattice& lattice, const Payoff& phi)
        : lat(lattice), n(lattice.n()), C(1 << lattice.n()), eps(lattice.eps()) {
        if (phi.n() != n) throw std::invalid_argument("SweepContext: payoff dimension mismatch");
        const std::size_t cells = lat.cell_count();
        phi_cell.resize(cells);
        interior.resize(cells);
        for (std::size_t i = 0; i < cells; ++i) {
            const std::vector<int> m = lat.m_of(i);
            phi_cell[i] = phi(lat.lift(m));
            if (!std::isfinite(phi_cell[i]))
                throw std::runtime_error("SweepContext: non-finite payoff value");
            interior[i] = lat.is_interior(m) ? 1 : 0;
        }
        off.resize(static_cast<std::size_t>(C));
        tcm.resize(static_cast<std::size_t>(C) * static_cast<std::size_t>(n));
        for (int v = 0; v < C; ++v) {
            const OutcomeVector out(n, static_cast<std::uint32_t>(v));
            off[static_cast<std::size_t>(v)] = lat.index_offset(gap_displacement(out));
            const int vn = out.wins(n - 1) ? 1 : 0;
            for (int k = 0; k < n; ++k)
                tcm[static_cast<std::size_t>(v) * n + k] =
                    eps * (vn - (out.wins(k) ? 1 : 0));
        }
    }
};

/// out = cu * U + cphi * phi + cm * (stage saddle value) at interior cells.
struct StepCoeffs {
    double cu, cphi, cm;
};

/**
 * One synchronous (Jacobi) sweep: every interior cell is updated from the
 * same input grid; ring cells are copied through.  Returns sup |out - in|.
 * Cells are independent, so any static partition over workers yields
 * bitwise-identical output; the sup is an exact max-reduction.
 */
inline double dpp_sweep(const SweepContext& ctx, const Vec& in, Vec& out, StepCoeffs sc,
                        int threads) {
    const std::size_t cells = in.size();
    if (out.size() != cells || cells != ctx.lat.cell_count())
        throw std::invalid_argument("dpp_sweep: grid size mismatch");
    const int n = ctx.n, C = ctx.C;
    std::vector<double> chunk_change(static_cast<std::size_t>(std::max(threads, 1)), 0.0);

    parallel_chunks(cells, threads, [&](int chunk, std::size_t begin, std::size_t end) {
        MinimaxWorkspace ws;
        Vec acm(static_cast<std::size_t>(C) * static_cast<std::size_t>(n));
        double worst = 0.0;
        for (std::size_t idx = begin; idx < end; ++idx) {
            if (!ctx.interior[idx]) {
                out[idx] = in[idx];
                continue;
            }
            for (int v = 0; v < C; ++v) {
                const double u = in[static_cast<std::size_t>(
                    static_cast<long long>(idx) + ctx.off[static_cast<std::size_t>(v)])];
                const double* trow = &ctx.tcm[static_cast<std::size_t>(v) * n];
                double* arow = &acm[static_cast<std::size_t>(v) * n];
                for (int k = 0; k < n; ++k) arow[k] = trow[k] + u;
            }
            const MinimaxCore core = solve_minimax_core(n, C, acm.data(), ws);
            if (!(core.dual_gap <= 1e-8))
                throw LpError("dpp_sweep: duality gap above tolerance", core.iterations);
            out[idx] = sc.cu * in[idx] + sc.cphi * ctx.phi_cell[idx] + sc.cm * core.value;
            worst = std::max(worst, std::fabs(out[idx] - in[idx]));
        }
        chunk_change[static_cast<std::size_t>(chunk)] = worst;
    });

    double change = 0.0;
    for (double c : chunk_change) change = std::max(change, c);
    return change;
}

inline StepCoeffs coeffs_for(const GeometricConfig& cfg) {
    const double e2 = cfg.eps * cfg.eps;
    if (cfg.method == GeometricConfig::Method::ValueIteration)
        return {0.0, e2, 1.0 - e2};
    const double rho = cfg.rho_effective();
    const double K = cfg.scheme_lipschitz();
    return {1.0 - rho * K, rho, rho * (K - 1.0)};
}

} // namespace detail

/// One synchronous sweep of the iteration map selected by cfg.method.
inline ValueGrid dpp_update(const ValueGrid& grid, const Payoff& phi,
                            const GeometricConfig& cfg) {
    cfg.validate();
    if (grid.lattice.eps() != cfg.eps)
        throw std::invalid_argument("dpp_update: config eps must match the lattice step");
    detail::SweepContext ctx(grid.lattice, phi);
    Vec out(grid.values.size());
    detail::dpp_sweep(ctx, grid.values, out, detail::coeffs_for(cfg), default_thread_count());
    return ValueGrid(grid.lattice, std::move(out));
}

/**
 * Sup-norm of the discrete scheme residual F(U) = (U - T(U)) / eps^2 over
 * interior cells; zero exactly at the fixed point of the scaled equation.
 */
inline double scheme_residual(const ValueGrid& grid, const Payoff& phi,
                              const GeometricConfig& cfg) {
    cfg.validate();
    if (grid.lattice.eps() != cfg.eps)
        throw std::invalid_argument("scheme_residual: config eps must match the lattice step");
    detail::SweepContext ctx(grid.lattice, phi);
    Vec out(grid.values.size());
    const double e2 = cfg.eps * cfg.eps;
    const double change =
        detail::dpp_sweep(ctx, grid.values, out, {0.0, e2, 1.0 - e2}, default_thread_count());
    return change / e2;
}

/**
 * Iterate from U_0 = phi until the sweep change drops to tol * step, where
 * step is eps^2 for value-iteration and rho for the Euler map.  Both maps
 * contract the sup norm by (1 - step), so the geometric tail bound
 *
 *     ||U_k - U*|| <= change * (1 - step) / step <= tol * (1 - step) < tol
 *
 * makes the returned grid lie within tol of the exact fixed point, and the
 * scheme residual at the returned grid is of order tol as well.
 * Non-convergence within max_iter returns the last iterate with
 * converged = false; the caller decides whether that is fatal.
 */
inline std::pair<ValueGrid, ConvergenceReport> solve_geometric(const GapLattice& lat,
                                                               const Payoff& phi,
                                                               const GeometricConfig& cfg) {
    cfg.validate();
    if (lat.eps() != cfg.eps)
        throw std::invalid_argument("solve_geometric: config eps must match the lattice step");
    const auto t0 = std::chrono::steady_clock::now();
    detail::SweepContext ctx(lat, phi);
    const detail::StepCoeffs sc = detail::coeffs_for(cfg);
    const double step = cfg.rho_effective();
    const int threads = default_thread_count();

    Vec u = ctx.phi_cell; // U_0 = phi
    Vec next(u.size());
    ConvergenceReport rep;
    rep.method = GeometricConfig::method_name(cfg.method);
    rep.rho = step;
    rep.K = cfg.scheme_lipschitz();
    rep.change_history.reserve(256);

    for (int it = 0; it < cfg.max_iter; ++it) {
        const double change = detail::dpp_sweep(ctx, u, next, sc, threads);
        u.swap(next);
        rep.iterations = it + 1;
        rep.final_change = change;
        rep.change_history.push_back(change);
        if (change <= cfg.tol * step) {
            rep.converged = true;
            break;
        }
    }

    ValueGrid grid(lat, std::move(u));
    // Recompute the residual directly at the grid we return.
    const double e2 = cfg.eps * cfg.eps;
    Vec tmp(grid.values.size());
    const double tchange = detail::dpp_sweep(ctx, grid.values, tmp, {0.0, e2, 1.0 - e2}, threads);
    rep.scheme_residual = tchange / e2;
    rep.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(grid), std::move(rep)};
}

/**
 * Finite-horizon values by backward induction.  slices[j] holds w at time
 * t = T_actual - j * eps^2; slices[0] is the terminal payoff and the last
 * slice is the value at the start of the game.  T is rounded up to a whole
 * number of eps^2 rounds (T_actual >= T).
 */
struct TimeValueGrid {
    GapLattice lattice;
    double T_requested = 0.0;
    double T_actual = 0.0;
    int steps = 0;
    std::vector<Vec> slices;

    double time_of_slice(int j) const { return T_actual - j * lattice.eps() * lattice.eps(); }

    ValueGrid slice_grid(int j) const {
        return ValueGrid(lattice, slices[static_cast<std::size_t>(j)]);
    }
};

inline TimeValueGrid solve_finite_horizon(const GapLattice& lat, const Payoff& phi, double eps,
                                          double T) {
    if (eps != lat.eps())
        throw std::invalid_argument("solve_finite_horizon: eps must match the lattice step");
    if (!(T > 0.0)) throw std::invalid_argument("solve_finite_horizon: T must be positive");
    const double e2 = eps * eps;
    const int steps = std::max(1, static_cast<int>(std::ceil(T / e2 - 1e-12)));
    detail::SweepContext ctx(lat, phi);
    const int threads = default_thread_count();

    TimeValueGrid out{lat, T, steps * e2, steps, {}};
    out.slices.reserve(static_cast<std::size_t>(steps) + 1);
    out.slices.push_back(ctx.phi_cell); // t = T_actual
    Vec next(ctx.phi_cell.size());
    for (int j = 0; j < steps; ++j) {
        detail::dpp_sweep(ctx, out.slices.back(), next, {0.0, 0.0, 1.0}, threads);
        out.slices.push_back(next);
    }
    return out;
}

} // namespace regret
