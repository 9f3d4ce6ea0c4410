#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace regret {

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/**
 * A market outcome: the set of experts that are correct this round,
 * encoded as a bitmask.  Bit k of the mask is v_{k+1}, i.e. expert k
 * (0-based) wins iff bit k is set.  Dimension is fixed at construction.
 */
class OutcomeVector {
public:
    OutcomeVector(int n, std::uint32_t mask) : n_(n), mask_(mask) {
        if (n < 1 || n > 20) throw std::invalid_argument("OutcomeVector: n out of range");
        if (mask >> n) throw std::invalid_argument("OutcomeVector: mask has bits beyond n");
    }

    int n() const { return n_; }
    std::uint32_t mask() const { return mask_; }

    /// v_k for 0-based expert index k.
    bool wins(int k) const { return (mask_ >> k) & 1u; }

    OutcomeVector complement() const {
        return OutcomeVector(n_, ~mask_ & ((1u << n_) - 1u));
    }

    /// "v_1 v_2 ... v_n" without separators, e.g. n=3 mask=0b001 -> "100".
    std::string bits() const {
        std::string s(static_cast<std::size_t>(n_), '0');
        for (int k = 0; k < n_; ++k)
            if (wins(k)) s[static_cast<std::size_t>(k)] = '1';
        return s;
    }

    friend bool operator==(const OutcomeVector& a, const OutcomeVector& b) {
        return a.n_ == b.n_ && a.mask_ == b.mask_;
    }

    /// Lexicographic order on the tuple (v_1, ..., v_n).
    friend bool lex_less(const OutcomeVector& a, const OutcomeVector& b) {
        for (int k = 0; k < a.n_; ++k) {
            if (a.wins(k) != b.wins(k)) return b.wins(k);
        }
        return false;
    }

private:
    int n_;
    std::uint32_t mask_;
};

/// Cumulative regret state x in R^n: x_k is expert k's lead over the player.
struct RegretPoint {
    Vec x;

    int n() const { return static_cast<int>(x.size()); }
};

/// Mixed strategy of the player over experts.
struct PlayerMix {
    Vec alpha;

    int n() const { return static_cast<int>(alpha.size()); }

    /// Nonnegative entries summing to 1 within tol.
    bool valid(double tol = 1e-12) const {
        double s = 0.0;
        for (double a : alpha) {
            if (!(a >= -tol)) return false;
            s += a;
        }
        return std::fabs(s - 1.0) <= tol * static_cast<double>(alpha.size() + 1);
    }
};

/// Mixed strategy of the market over outcomes, dense over all 2^n masks.
struct MarketMix {
    int n = 0;
    Vec prob; // indexed by outcome mask, size 2^n

    double operator()(const OutcomeVector& v) const { return prob[v.mask()]; }

    /// E_p[v_k]: probability that expert k wins under this mix.
    double expected_win(int k) const {
        double s = 0.0;
        for (std::size_t m = 0; m < prob.size(); ++m)
            if ((m >> k) & 1u) s += prob[m];
        return s;
    }

    bool valid(double tol = 1e-12) const {
        double s = 0.0;
        for (double p : prob) {
            if (!(p >= -tol)) return false;
            s += p;
        }
        return std::fabs(s - 1.0) <= tol * static_cast<double>(prob.size() + 1);
    }
};

} // namespace regret
