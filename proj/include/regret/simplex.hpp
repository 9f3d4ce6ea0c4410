#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regret {

/// Simplex failure (iteration cap, unbounded ray, numeric breakdown).
struct LpError : std::runtime_error {
    int iterations;
    LpError(const std::string& msg, int iters)
        : std::runtime_error(msg + " after " + std::to_string(iters) + " iterations"),
          iterations(iters) {}
};

/**
 * Dense tableau simplex for
 *
 *     max c'y   subject to  A y <= b,  y >= 0,   with b >= 0,
 *
 * so the slack basis is feasible and no phase-1 is needed.  Bland's
 * smallest-index rule picks both the entering and the leaving variable,
 * which makes every pivot sequence deterministic and cycling impossible.
 * The compact dictionary D is (m+1) x (n+1): rows are basic variables plus
 * the objective, columns are nonbasic variables plus the right-hand side.
 * Workspace is owned by the instance, so repeated solves do not allocate.
 */
class DenseSimplex {
public:
    explicit DenseSimplex(double pivot_tol = 1e-11, int max_pivots = 20000)
        : tol_(pivot_tol), max_pivots_(max_pivots) {}

    int last_iterations() const { return iterations_; }

    /**
     * Solve; A is row-major m x n.  Writes the primal solution to y (size n)
     * and the dual prices to dual (size m, one per constraint); either may be
     * nullptr.  Returns the optimal objective value.  Throws LpError on an
     * unbounded ray or when the pivot cap is hit.
     */
    double solve(int m, int n, const double* A, const double* b, const double* c,
                 double* y, double* dual) {
        const int W = n + 1; // columns incl. rhs
        D_.resize(static_cast<std::size_t>(m + 1) * W);
        N_.resize(static_cast<std::size_t>(n));
        B_.resize(static_cast<std::size_t>(m));
        double* D = D_.data();
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) D[i * W + j] = A[i * n + j];
            D[i * W + n] = b[i];
            B_[static_cast<std::size_t>(i)] = n + i;
        }
        // Objective row stores z = D[m][n] - sum_j D[m][j] * x_N[j].
        for (int j = 0; j < n; ++j) {
            D[m * W + j] = -c[j];
            N_[static_cast<std::size_t>(j)] = j;
        }
        D[m * W + n] = 0.0;

        iterations_ = 0;
        for (;;) {
            // Entering: improving column with the smallest variable id.
            int s = -1;
            for (int j = 0; j < n; ++j)
                if (D[m * W + j] < -tol_ && (s == -1 || N_[static_cast<std::size_t>(j)] <
                                                            N_[static_cast<std::size_t>(s)]))
                    s = j;
            if (s == -1) break; // optimal

            // Leaving: tightest ratio, ties by smallest basic id.
            int r = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                const double a = D[i * W + s];
                if (a > tol_) {
                    const double ratio = D[i * W + n] / a;
                    if (r == -1 || ratio < best ||
                        (ratio == best &&
                         B_[static_cast<std::size_t>(i)] < B_[static_cast<std::size_t>(r)])) {
                        r = i;
                        best = ratio;
                    }
                }
            }
            if (r == -1) throw LpError("simplex: unbounded ray", iterations_);
            if (++iterations_ > max_pivots_)
                throw LpError("simplex: pivot cap exceeded (entering var " +
                                  std::to_string(N_[static_cast<std::size_t>(s)]) +
                                  ", leaving var " + std::to_string(B_[static_cast<std::size_t>(r)]) +
                                  ")",
                              iterations_);
            pivot(m, n, r, s);
        }

        if (y) {
            for (int j = 0; j < n; ++j) y[j] = 0.0;
            for (int i = 0; i < m; ++i)
                if (B_[static_cast<std::size_t>(i)] < n) y[B_[static_cast<std::size_t>(i)]] = D[i * W + n];
        }
        if (dual) {
            for (int i = 0; i < m; ++i) dual[i] = 0.0;
            for (int j = 0; j < n; ++j)
                if (N_[static_cast<std::size_t>(j)] >= n)
                    dual[N_[static_cast<std::size_t>(j)] - n] = D[m * W + j];
        }
        return D[m * W + n];
    }

private:
    void pivot(int m, int n, int r, int s) {
        const int W = n + 1;
        double* D = D_.data();
        const double inv = 1.0 / D[r * W + s];
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            const double f = D[i * W + s] * inv;
            if (f != 0.0) {
                for (int j = 0; j <= n; ++j)
                    if (j != s) D[i * W + j] -= f * D[r * W + j];
            }
            D[i * W + s] = -f;
        }
        for (int j = 0; j <= n; ++j)
            if (j != s) D[r * W + j] *= inv;
        D[r * W + s] = inv;
        std::swap(B_[static_cast<std::size_t>(r)], N_[static_cast<std::size_t>(s)]);
    }

    double tol_;
    int max_pivots_;
    int iterations_ = 0;
    std::vector<double> D_;
    std::vector<int> N_, B_;
};

} // namespace regret
