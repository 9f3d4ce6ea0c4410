#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "regret/io.hpp"
#include "regret/payoff.hpp"
#include "regret/types.hpp"

namespace regret {

/**
 * Because the payoff is translation-covariant, the value function satisfies
 * u(x) = x_n + U(g) with gap coordinates g_i = x_i - x_n (i < n).  One round
 * moves g by eps * delta(v) with integer delta, so U lives on an eps-spaced
 * integer lattice in dimension n-1 and never leaves it.
 */
struct GapState {
    std::vector<int> m; // lattice units: g_i = m_i * eps
};

/// delta(v)_i = v_i - v_n for i < n; each entry is -1, 0, or +1.
inline std::vector<int> gap_displacement(const OutcomeVector& v) {
    const int n = v.n();
    std::vector<int> d(static_cast<std::size_t>(n - 1));
    const int vn = v.wins(n - 1) ? 1 : 0;
    for (int i = 0; i + 1 < n; ++i) d[static_cast<std::size_t>(i)] = (v.wins(i) ? 1 : 0) - vn;
    return d;
}

/**
 * Box {m : |m_i| <= M} of gap-lattice cells, row-major.  Cells with all
 * |m_i| <= M-1 are interior: every one-step displacement from them stays in
 * the box.  Reads outside the box are closed with the payoff (see
 * ValueGrid::read), so a single boundary ring suffices.
 */
class GapLattice {
public:
    GapLattice(int n, double eps, int radius_cells) : n_(n), eps_(eps), radius_(radius_cells) {
        if (n < 2 || n > 10) throw std::invalid_argument("GapLattice: n must be in [2, 10]");
        if (!(eps > 0.0)) throw std::invalid_argument("GapLattice: eps must be positive");
        if (radius_cells < 1) throw std::invalid_argument("GapLattice: radius must be >= 1");
        const int dim = n - 1;
        const std::size_t side = static_cast<std::size_t>(2 * radius_cells + 1);
        strides_.assign(static_cast<std::size_t>(dim), 1);
        std::size_t total = 1;
        for (int d = dim - 1; d >= 0; --d) {
            strides_[static_cast<std::size_t>(d)] = total;
            if (total > (std::size_t{1} << 40) / side)
                throw std::invalid_argument("GapLattice: cell count too large");
            total *= side;
        }
        cells_ = total;
    }

    int n() const { return n_; }
    int dim() const { return n_ - 1; }
    double eps() const { return eps_; }
    int radius() const { return radius_; }
    double physical_radius() const { return radius_ * eps_; }
    std::size_t cell_count() const { return cells_; }
    std::size_t side() const { return static_cast<std::size_t>(2 * radius_ + 1); }

    bool in_box(std::span<const int> m) const {
        require_dim(m);
        for (int c : m)
            if (c < -radius_ || c > radius_) return false;
        return true;
    }

    bool is_interior(std::span<const int> m) const {
        require_dim(m);
        for (int c : m)
            if (c <= -radius_ || c >= radius_) return false;
        return true;
    }

    std::size_t index_of(std::span<const int> m) const {
        if (!in_box(m)) throw std::out_of_range("GapLattice: cell outside box");
        std::size_t idx = 0;
        for (int d = 0; d < dim(); ++d)
            idx += static_cast<std::size_t>(m[static_cast<std::size_t>(d)] + radius_) *
                   strides_[static_cast<std::size_t>(d)];
        return idx;
    }

    std::vector<int> m_of(std::size_t idx) const {
        if (idx >= cells_) throw std::out_of_range("GapLattice: index outside grid");
        std::vector<int> m(static_cast<std::size_t>(dim()));
        for (int d = 0; d < dim(); ++d) {
            const std::size_t q = idx / strides_[static_cast<std::size_t>(d)];
            m[static_cast<std::size_t>(d)] = static_cast<int>(q % side()) - radius_;
        }
        return m;
    }

    /// Signed linear-index offset of a one-step displacement (valid at interior cells).
    long long index_offset(std::span<const int> delta) const {
        require_dim(delta);
        long long off = 0;
        for (int d = 0; d < dim(); ++d)
            off += static_cast<long long>(delta[static_cast<std::size_t>(d)]) *
                   static_cast<long long>(strides_[static_cast<std::size_t>(d)]);
        return off;
    }

    /// Embed gap cell m as the point (m_1*eps, ..., m_{n-1}*eps, 0) in R^n.
    Vec lift(std::span<const int> m) const {
        require_dim(m);
        Vec x(static_cast<std::size_t>(n_), 0.0);
        for (int d = 0; d < dim(); ++d)
            x[static_cast<std::size_t>(d)] = m[static_cast<std::size_t>(d)] * eps_;
        return x;
    }

    friend bool operator==(const GapLattice& a, const GapLattice& b) {
        return a.n_ == b.n_ && a.eps_ == b.eps_ && a.radius_ == b.radius_;
    }

private:
    void require_dim(std::span<const int> m) const {
        if (static_cast<int>(m.size()) != dim())
            throw std::invalid_argument("GapLattice: wrong coordinate dimension");
    }

    int n_;
    double eps_;
    int radius_;
    std::size_t cells_ = 0;
    std::vector<std::size_t> strides_;
};

/// Gap-value table over a GapLattice; U(g) approximates u(g, 0).
struct ValueGrid {
    GapLattice lattice;
    Vec values;

    ValueGrid(GapLattice lat, Vec vals) : lattice(lat), values(std::move(vals)) {
        if (values.size() != lattice.cell_count())
            throw std::invalid_argument("ValueGrid: value count does not match lattice");
    }

    /// Fill from a callback m -> U(m) evaluated at every cell.
    template <class F>
    static ValueGrid tabulate(const GapLattice& lat, F&& f) {
        Vec vals(lat.cell_count());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = f(lat.m_of(i));
        return ValueGrid(lat, std::move(vals));
    }

    /**
     * Value at cell m with payoff closure: inside the box reads the table,
     * outside returns phi at the lifted point.  This is the only mechanism by
     * which information enters through the truncation boundary.
     */
    double read(std::span<const int> m, const Payoff& phi) const {
        if (lattice.in_box(m)) return values[lattice.index_of(m)];
        return phi(lattice.lift(m));
    }
};

inline double read_value(const ValueGrid& grid, std::span<const int> m, const Payoff& phi) {
    return grid.read(m, phi);
}

/// CSV with header m_1..m_{n-1}, g_1..g_{n-1}, U; one row per cell in index order.
inline void write_grid_csv(std::ostream& os, const ValueGrid& grid) {
    const GapLattice& lat = grid.lattice;
    for (int d = 0; d < lat.dim(); ++d) os << "m_" << (d + 1) << ",";
    for (int d = 0; d < lat.dim(); ++d) os << "g_" << (d + 1) << ",";
    os << "U\n";
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const std::vector<int> m = lat.m_of(i);
        for (int c : m) os << c << ",";
        for (int c : m) os << format_sig17(c * lat.eps()) << ",";
        os << format_sig17(grid.values[i]) << "\n";
    }
}

} // namespace regret
