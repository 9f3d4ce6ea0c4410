#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "regret/io.hpp"
#include "regret/lattice.hpp"
#include "regret/payoff.hpp"
#include "regret/types.hpp"

namespace regret {

/// Coordinates sorted into the descending sector s_1 >= ... >= s_n, with the
/// permutation between original and sorted positions (stable on ties).
struct SortedSectorPoint {
    Vec sorted;
    std::vector<int> perm; // perm[t] = original index occupying sorted slot t
    std::vector<int> rank; // rank[i] = sorted slot of original coordinate i
};

inline SortedSectorPoint sort_descending(const RegretPoint& p) {
    const int n = p.n();
    SortedSectorPoint sp;
    sp.perm.resize(static_cast<std::size_t>(n));
    std::iota(sp.perm.begin(), sp.perm.end(), 0);
    std::stable_sort(sp.perm.begin(), sp.perm.end(), [&p](int a, int b) {
        return p.x[static_cast<std::size_t>(a)] > p.x[static_cast<std::size_t>(b)];
    });
    sp.sorted.resize(static_cast<std::size_t>(n));
    sp.rank.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        sp.sorted[static_cast<std::size_t>(t)] = p.x[static_cast<std::size_t>(sp.perm[static_cast<std::size_t>(t)])];
        sp.rank[static_cast<std::size_t>(sp.perm[static_cast<std::size_t>(t)])] = t;
    }
    return sp;
}

namespace detail {

constexpr double kSqrt2 = 1.4142135623730951;

/// Exponential factors of the three-expert value function in the sorted
/// sector: E1 = exp(sqrt2 (s2 - s1)), E2 = exp(sqrt2 (2 s3 - s1 - s2)); for
/// n = 4 additionally E3 = exp(sqrt2 (3 s4 - s1 - s2 - s3)).  All exponents
/// are <= 0 in the sector, so the factors lie in (0, 1].
inline void exp_factors(const Vec& s, double* e, int count) {
    double acc = 0.0;
    for (int j = 0; j < count; ++j) {
        // exponent_j = sqrt2 * ((j+1) * s_{j+2} - s_1 - ... - s_{j+1}), 1-based
        acc -= s[static_cast<std::size_t>(j)];
        e[j] = std::exp(kSqrt2 * ((j + 1) * s[static_cast<std::size_t>(j) + 1] + acc));
    }
}

/// Allocation-free three-expert kernel for hot loops (policies, playouts).
struct U3Kernel {
    int perm[3]; // perm[t] = original index in sorted slot t (stable)
    double s[3]; // sorted descending
    double e1, e2;

    explicit U3Kernel(const double* x) {
        perm[0] = 0;
        perm[1] = 1;
        perm[2] = 2;
        if (x[perm[1]] > x[perm[0]]) std::swap(perm[0], perm[1]);
        if (x[perm[2]] > x[perm[1]]) std::swap(perm[1], perm[2]);
        if (x[perm[1]] > x[perm[0]]) std::swap(perm[0], perm[1]);
        s[0] = x[perm[0]];
        s[1] = x[perm[1]];
        s[2] = x[perm[2]];
        e1 = std::exp(kSqrt2 * (s[1] - s[0]));
        e2 = std::exp(kSqrt2 * (2.0 * s[2] - s[0] - s[1]));
    }

    double value() const { return s[0] + e1 / (2.0 * kSqrt2) + e2 / (6.0 * kSqrt2); }

    /// grad[i] written into a caller buffer of size 3.
    void grad(double* g) const {
        g[perm[0]] = 1.0 - 0.5 * e1 - e2 / 6.0;
        g[perm[1]] = 0.5 * e1 - e2 / 6.0;
        g[perm[2]] = e2 / 3.0;
    }

    /// <D^2 u3 v, v> for the outcome bitmask (bit k = expert k wins).
    double form(std::uint32_t mask) const {
        const double b1 = (mask >> perm[0]) & 1u;
        const double b2 = (mask >> perm[1]) & 1u;
        const double b3 = (mask >> perm[2]) & 1u;
        const double w1 = b2 - b1;
        const double w2 = 2.0 * b3 - b1 - b2;
        return (w1 * w1) * e1 / kSqrt2 + (w2 * w2) * e2 / (3.0 * kSqrt2);
    }
};

/// Nontrivial n=3 outcome masks in lexicographic tuple order:
/// (0,0,1), (0,1,0), (0,1,1), (1,0,0), (1,0,1), (1,1,0).
constexpr std::uint32_t kLexMasks3[6] = {4u, 2u, 6u, 1u, 5u, 3u};

} // namespace detail

/**
 * Exact value function of the geometric-stopping game with three experts and
 * the max payoff:
 *
 *   u(x) = x_(1) + (1/(2 sqrt2)) E1 + (1/(6 sqrt2)) E2
 *
 * in the sorted sector, extended symmetrically.  It is C^2, solves
 * u = max(x) + (1/2) max_v <D^2 u v, v>, and u(0) = sqrt2 / 3.
 */
inline double exact_u3(const RegretPoint& p) {
    if (p.n() != 3) throw std::invalid_argument("exact_u3: requires n = 3");
    return detail::U3Kernel(p.x.data()).value();
}

/// Gradient of exact_u3; entries are nonnegative and sum to 1 exactly
/// (up to rounding), so it is itself a valid player mix.
inline Vec exact_grad_u3(const RegretPoint& p) {
    if (p.n() != 3) throw std::invalid_argument("exact_grad_u3: requires n = 3");
    Vec g(3);
    detail::U3Kernel(p.x.data()).grad(g.data());
    return g;
}

/**
 * Quadratic form <D^2 u3(x) v, v> for an outcome v, in closed form.  The
 * Hessian is a sum of rank-one terms c_j a_j a_j' E_j with
 * a_1 = sqrt2 (-1, 1, 0) and a_2 = sqrt2 (-1, -1, 2) in sorted coordinates,
 * c_1 = 1/(2 sqrt2), c_2 = 1/(6 sqrt2).
 */
inline double u3_pair_form(const RegretPoint& p, const OutcomeVector& v) {
    if (p.n() != 3 || v.n() != 3) throw std::invalid_argument("u3_pair_form: requires n = 3");
    return detail::U3Kernel(p.x.data()).form(v.mask());
}

/**
 * The natural four-expert extension of exact_u3 (one more exponential layer,
 * coefficient 1/(12 sqrt2)).  It is NOT the value function for n = 4: see
 * n4_gap.
 */
inline double u4_candidate(const RegretPoint& p) {
    if (p.n() != 4) throw std::invalid_argument("u4_candidate: requires n = 4");
    const SortedSectorPoint sp = sort_descending(p);
    double e[3];
    detail::exp_factors(sp.sorted, e, 3);
    const double s2 = detail::kSqrt2;
    return sp.sorted[0] + e[0] / (2.0 * s2) + e[1] / (6.0 * s2) + e[2] / (12.0 * s2);
}

/**
 * Witness that u4_candidate fails the four-expert equation: at the diagonal,
 * the leading single-expert direction gives d11 = <D^2 u e_1, e_1> =
 * 3/(2 sqrt2), strictly less than the two-expert direction
 * d12sq = <D^2 u (e_1+e_2), e_1+e_2> = sqrt2.  A market restricted to the
 * leading expert's pair therefore undershoots the best attainable variance.
 */
struct N4Gap {
    Vec point;
    double d11 = 0.0;   // second difference along the leading expert
    double d12sq = 0.0; // quadratic form along the top-two direction
    double gap = 0.0;   // d12sq - d11 > 0 exposes the failure
};

inline N4Gap n4_gap(const RegretPoint& p) {
    if (p.n() != 4) throw std::invalid_argument("n4_gap: requires n = 4");
    const SortedSectorPoint sp = sort_descending(p);
    double e[3];
    detail::exp_factors(sp.sorted, e, 3);
    const double s2 = detail::kSqrt2;
    N4Gap out;
    out.point = p.x;
    out.d11 = e[0] / s2 + e[1] / (3.0 * s2) + e[2] / (6.0 * s2);
    out.d12sq = 4.0 * e[1] / (3.0 * s2) + 2.0 * e[2] / (3.0 * s2);
    out.gap = out.d12sq - out.d11;
    return out;
}

inline std::string n4_gap_json(const N4Gap& g) {
    JsonWriter w;
    w.field("point", g.point)
        .field("d11", g.d11)
        .field("d12sq", g.d12sq)
        .field("gap", g.gap)
        .field("conclusion",
               g.gap > 0.0
                   ? "top-two direction beats the leading-expert pair: the three-expert "
                     "construction does not extend to four experts"
                   : "no gap detected at this point");
    return w.str();
}

/**
 * Discrete elliptic residual of a smooth candidate u at x with step h:
 *
 *   r = u(x) - phi(x) - (1/2) max_v [u(x+hv) - 2u(x) + u(x-hv)] / h^2,
 *
 * max over v in {0,1}^n.  O(h^2) for a C^4 solution of the limiting equation.
 */
inline double pde_residual(const std::function<double(const Vec&)>& u, const Payoff& phi,
                           const Vec& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("pde_residual: h must be positive");
    const int n = static_cast<int>(x.size());
    const double ux = u(x);
    double best = 0.0; // v = 0 contributes a zero form
    Vec xp(x.size()), xm(x.size());
    for (int v = 1; v < (1 << n); ++v) {
        for (int i = 0; i < n; ++i) {
            const double b = ((v >> i) & 1) ? h : 0.0;
            xp[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + b;
            xm[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - b;
        }
        best = std::max(best, (u(xp) - 2.0 * ux + u(xm)) / (h * h));
    }
    return ux - phi(x) - 0.5 * best;
}

/**
 * Same residual evaluated on a solved gap grid at cell m with an h_cells-step
 * stencil.  Works entirely in gap coordinates: for x = lift(m) the offsets
 * x_n +- h v_n cancel in the second difference, leaving pure U reads.
 * Throws if the stencil leaves the box.
 */
inline double pde_residual_grid(const ValueGrid& grid, const Payoff& phi,
                                std::span<const int> m, int h_cells = 1) {
    const GapLattice& lat = grid.lattice;
    if (h_cells < 1) throw std::invalid_argument("pde_residual_grid: h_cells must be >= 1");
    const int n = lat.n();
    const double h = h_cells * lat.eps();
    const double um = grid.values[lat.index_of(m)];
    double best = 0.0;
    std::vector<int> mp(m.size()), mm(m.size());
    for (int v = 1; v + 1 < (1 << n); ++v) { // v=0 and v=all displace by zero
        const std::vector<int> d = gap_displacement(OutcomeVector(n, static_cast<std::uint32_t>(v)));
        for (std::size_t i = 0; i < m.size(); ++i) {
            mp[i] = m[i] + h_cells * d[i];
            mm[i] = m[i] - h_cells * d[i];
        }
        if (!lat.in_box(mp) || !lat.in_box(mm))
            throw std::out_of_range("pde_residual_grid: stencil exits the box");
        best = std::max(best,
                        (grid.values[lat.index_of(mp)] - 2.0 * um + grid.values[lat.index_of(mm)]) /
                            (h * h));
    }
    return um - phi(lat.lift(m)) - 0.5 * best;
}

/**
 * Discrete parabolic residual between consecutive backward-induction slices.
 * With w_next one round closer to the horizon than w_cur (their times differ
 * by eps^2),
 *
 *   r = [w_next - w_cur] / eps^2 + (1/2) max_v D^2_eps w_next(v),
 *
 * which is the discrete form of w_t + (1/2) max_v <D^2 w v, v> = 0.
 */
inline double pde_residual_parabolic(const ValueGrid& w_cur, const ValueGrid& w_next,
                                     std::span<const int> m) {
    const GapLattice& lat = w_cur.lattice;
    if (!(w_next.lattice == lat))
        throw std::invalid_argument("pde_residual_parabolic: slices on different lattices");
    const int n = lat.n();
    const double e2 = lat.eps() * lat.eps();
    const std::size_t idx = lat.index_of(m);
    const double um = w_next.values[idx];
    double best = 0.0;
    std::vector<int> mp(m.size()), mm(m.size());
    for (int v = 1; v + 1 < (1 << n); ++v) {
        const std::vector<int> d = gap_displacement(OutcomeVector(n, static_cast<std::uint32_t>(v)));
        for (std::size_t i = 0; i < m.size(); ++i) {
            mp[i] = m[i] + d[i];
            mm[i] = m[i] - d[i];
        }
        if (!lat.in_box(mp) || !lat.in_box(mm))
            throw std::out_of_range("pde_residual_parabolic: stencil exits the box");
        best = std::max(best,
                        (w_next.values[lat.index_of(mp)] - 2.0 * um +
                         w_next.values[lat.index_of(mm)]) /
                            e2);
    }
    return (w_next.values[idx] - w_cur.values[idx]) / e2 + 0.5 * best;
}

} // namespace regret
