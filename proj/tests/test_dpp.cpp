#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "oracles.hpp"
#include "regret/regret.hpp"

using namespace regret;

namespace {

constexpr double kRoot2Over3 = 0.47140452079103168; // sqrt(2)/3

GeometricConfig vi_config(double eps, double tol = 1e-10, int max_iter = 200000) {
    GeometricConfig cfg;
    cfg.eps = eps;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.method = GeometricConfig::Method::ValueIteration;
    return cfg;
}

GeometricConfig euler_config(double eps, double tol = 1e-10, double rho = 0.0,
                             int max_iter = 200000) {
    GeometricConfig cfg;
    cfg.eps = eps;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.rho = rho;
    cfg.method = GeometricConfig::Method::EulerMap;
    return cfg;
}

ValueGrid tabulate_payoff(const GapLattice& lat, const Payoff& phi) {
    return ValueGrid::tabulate(lat, [&](const std::vector<int>& m) { return phi(lat.lift(m)); });
}

double sup_diff(const Vec& a, const Vec& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

} // namespace

TEST_CASE("the mean payoff is an exact fixed point of one update") {
    const GapLattice lat(3, 0.2, 3);
    const Payoff phi = Payoff::mean(3);
    const ValueGrid u0 = tabulate_payoff(lat, phi);
    const ValueGrid u1 = dpp_update(u0, phi, vi_config(0.2));
    CHECK(sup_diff(u0.values, u1.values) <= 1e-12);
}

TEST_CASE("one update maps a constant shift to a (1 - step)-damped shift") {
    const GapLattice lat(2, 0.5, 3);
    const Payoff phi = Payoff::max(2);
    const ValueGrid base = ValueGrid::tabulate(
        lat, [](const std::vector<int>& m) { return std::max(0.5 * m[0], 0.0); });
    const double c = 0.3;
    Vec shifted_vals = base.values;
    for (double& v : shifted_vals) v += c;
    const ValueGrid shifted(lat, shifted_vals);

    SUBCASE("value iteration damps by 1 - eps^2") {
        const GeometricConfig cfg = vi_config(0.5);
        const ValueGrid a = dpp_update(base, phi, cfg);
        const ValueGrid b = dpp_update(shifted, phi, cfg);
        const double damp = 1.0 - 0.25;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            if (!lat.is_interior(lat.m_of(i))) continue;
            CHECK(std::fabs(b.values[i] - a.values[i] - damp * c) <= 1e-12);
        }
    }

    SUBCASE("the relaxed map damps by 1 - rho") {
        const GeometricConfig cfg = euler_config(0.5, 1e-10, 0.2);
        const ValueGrid a = dpp_update(base, phi, cfg);
        const ValueGrid b = dpp_update(shifted, phi, cfg);
        const double damp = 1.0 - 0.2;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            if (!lat.is_interior(lat.m_of(i))) continue;
            CHECK(std::fabs(b.values[i] - a.values[i] - damp * c) <= 1e-12);
        }
    }
}

TEST_CASE("one update from the payoff reproduces the hand-computed origin value") {
    // n = 2, eps = 1/2: the origin stage game on U = phi has value 1/4, so
    // T(phi)(0) = eps^2 * 0 + (1 - eps^2) * 1/4 = 3/16.
    const GapLattice lat(2, 0.5, 2);
    const Payoff phi = Payoff::max(2);
    const ValueGrid u1 = dpp_update(tabulate_payoff(lat, phi), phi, vi_config(0.5));
    const std::vector<int> origin{0};
    CHECK(std::fabs(u1.values[lat.index_of(origin)] - 0.1875) <= 1e-15);
}

TEST_CASE("solving with the mean payoff converges in a single sweep") {
    const GapLattice lat(3, 0.2, 2);
    const Payoff phi = Payoff::mean(3);
    const auto [grid, rep] = solve_geometric(lat, phi, vi_config(0.2, 1e-10));
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    CHECK(rep.scheme_residual <= 1e-12);
    CHECK(sup_diff(grid.values, tabulate_payoff(lat, phi).values) <= 1e-12);
}

TEST_CASE("geometric solve approaches the known three-expert origin value") {
    const GapLattice lat(3, 0.2, 15);
    const Payoff phi = Payoff::max(3);
    const GeometricConfig cfg = vi_config(0.2, 1e-6);
    const auto [grid, rep] = solve_geometric(lat, phi, cfg);
    REQUIRE(rep.converged);
    CHECK(rep.iterations < cfg.max_iter);
    CHECK(rep.final_change <= cfg.tol * cfg.rho_effective() * (1.0 + 1e-12));
    CHECK(rep.scheme_residual <= 2.0 * cfg.tol);
    const std::vector<int> origin{0, 0};
    const double u0 = grid.values[lat.index_of(origin)];
    CHECK(std::fabs(u0 - kRoot2Over3) <= 0.02);

    // Successive changes contract at rate 1 - eps^2 or better until the
    // change drops into roundoff territory.
    for (std::size_t k = 0; k + 1 < rep.change_history.size(); ++k) {
        const double prev = rep.change_history[k];
        if (prev < 1e-5) break;
        CHECK(rep.change_history[k + 1] <= (1.0 - 0.04) * prev + 1e-12);
    }

    // The residual scales like the distance to the fixed point: perturbing
    // one interior cell by eta pushes the residual up to eta or more (the
    // all-tie columns feed the cell's own value back into its stage game).
    Vec vals = grid.values;
    const double eta = 1e-3;
    vals[lat.index_of(origin)] += eta;
    const double res = scheme_residual(ValueGrid(lat, vals), phi, cfg);
    CHECK(res >= 0.9 * eta);
}

TEST_CASE("value iteration and the relaxed map agree at their fixed points") {
    const GapLattice lat(2, 0.3, 8);
    const Payoff phi = Payoff::max(2);
    const double tol = 1e-9;
    const auto [gvi, rvi] = solve_geometric(lat, phi, vi_config(0.3, tol));
    const auto [geu, reu] = solve_geometric(lat, phi, euler_config(0.3, tol));
    REQUIRE(rvi.converged);
    REQUIRE(reu.converged);
    CHECK(reu.rho == doctest::Approx(0.49 / rvi.K).epsilon(1e-12));
    CHECK(sup_diff(gvi.values, geu.values) <= 2.0 * tol);
    CHECK(rvi.scheme_residual <= 2.0 * tol);
    CHECK(reu.scheme_residual <= 2.0 * tol);
}

TEST_CASE("steps beyond the stability bound are rejected") {
    // K = 1/eps^2 = 25 at eps = 0.2, so rho must stay at or below 0.04.
    const GapLattice lat(2, 0.2, 2);
    const Payoff phi = Payoff::max(2);
    CHECK_THROWS_AS(solve_geometric(lat, phi, euler_config(0.2, 1e-8, 0.05)),
                    std::invalid_argument);
    CHECK_NOTHROW(solve_geometric(lat, phi, euler_config(0.2, 1e-8, 0.04)));
}

TEST_CASE("configuration and grid mismatches are rejected") {
    const GapLattice lat(2, 0.5, 2);
    const Payoff phi = Payoff::max(2);
    const ValueGrid grid = tabulate_payoff(lat, phi);
    CHECK_THROWS_AS(dpp_update(grid, phi, vi_config(0.3)), std::invalid_argument);
    CHECK_THROWS_AS(scheme_residual(grid, phi, vi_config(0.3)), std::invalid_argument);
    GeometricConfig bad = vi_config(0.5);
    bad.tol = 0.0;
    CHECK_THROWS_AS(solve_geometric(lat, phi, bad), std::invalid_argument);
    CHECK_THROWS_AS(dpp_update(grid, Payoff::max(3), vi_config(0.5)), std::invalid_argument);
}

TEST_CASE("finite-horizon backward induction") {
    SUBCASE("the first slice is the terminal payoff, bit for bit") {
        const GapLattice lat(3, 0.2, 3);
        const Payoff phi = Payoff::max(3);
        const TimeValueGrid tv = solve_finite_horizon(lat, phi, 0.2, 0.2);
        const ValueGrid phigrid = tabulate_payoff(lat, phi);
        REQUIRE(tv.slices.size() == static_cast<std::size_t>(tv.steps) + 1);
        CHECK(std::equal(tv.slices[0].begin(), tv.slices[0].end(), phigrid.values.begin()));
    }

    SUBCASE("the mean payoff is a fixed point of every backward step") {
        const GapLattice lat(3, 0.3, 3);
        const Payoff phi = Payoff::mean(3);
        const TimeValueGrid tv = solve_finite_horizon(lat, phi, 0.3, 0.5);
        const ValueGrid phigrid = tabulate_payoff(lat, phi);
        for (int j = 0; j <= tv.steps; ++j)
            CHECK(sup_diff(tv.slices[static_cast<std::size_t>(j)], phigrid.values) <= 1e-12);
    }

    SUBCASE("the horizon is rounded up to whole rounds") {
        const GapLattice lat(2, 0.3, 2);
        const Payoff phi = Payoff::max(2);
        const TimeValueGrid tv = solve_finite_horizon(lat, phi, 0.3, 0.5);
        CHECK(tv.steps == 6); // ceil(0.5 / 0.09)
        CHECK(std::fabs(tv.T_actual - 0.54) <= 1e-12);
        CHECK(std::fabs(tv.time_of_slice(0) - tv.T_actual) <= 1e-15);
        CHECK(std::fabs(tv.time_of_slice(tv.steps)) <= 1e-12);

        const TimeValueGrid exact = solve_finite_horizon(lat, phi, 0.3, 0.45);
        CHECK(exact.steps == 5); // already a whole number of rounds
        CHECK(std::fabs(exact.T_actual - 0.45) <= 1e-12);
    }

    SUBCASE("values grow with the horizon at the origin") {
        const GapLattice lat(2, 0.3, 4);
        const Payoff phi = Payoff::max(2);
        const TimeValueGrid tv = solve_finite_horizon(lat, phi, 0.3, 0.45);
        const std::vector<int> origin{0};
        const std::size_t idx = lat.index_of(origin);
        for (int j = 0; j < tv.steps; ++j)
            CHECK(tv.slices[static_cast<std::size_t>(j + 1)][idx] >=
                  tv.slices[static_cast<std::size_t>(j)][idx] - 1e-12);
    }

    SUBCASE("bad arguments are rejected") {
        const GapLattice lat(2, 0.3, 2);
        const Payoff phi = Payoff::max(2);
        CHECK_THROWS_AS(solve_finite_horizon(lat, phi, 0.2, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(solve_finite_horizon(lat, phi, 0.3, 0.0), std::invalid_argument);
    }
}

TEST_CASE("worker count does not change the bits of the result") {
    const GapLattice lat(2, 0.3, 4);
    const Payoff phi = Payoff::max(2);
    const GeometricConfig cfg = vi_config(0.3, 1e-8);

    unsetenv("REGRET_THREADS");
    const auto [g1, r1] = solve_geometric(lat, phi, cfg);
    setenv("REGRET_THREADS", "3", 1);
    const auto [g3, r3] = solve_geometric(lat, phi, cfg);
    unsetenv("REGRET_THREADS");

    REQUIRE(r1.converged);
    REQUIRE(r3.converged);
    CHECK(r1.iterations == r3.iterations);
    CHECK(std::equal(g1.values.begin(), g1.values.end(), g3.values.begin()));
}
