#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "regret/payoff.hpp"
#include "regret/types.hpp"

using namespace regret;

TEST_CASE("max payoff: values and translation") {
    const Payoff phi = Payoff::max(3);
    CHECK(phi(Vec{1.0, 2.0, 3.0}) == 3.0);
    for (double c : {-5.0, 0.25, 1e6})
        CHECK(phi(Vec{1.0 + c, 2.0 + c, 3.0 + c}) == doctest::Approx(3.0 + c).epsilon(1e-15));
}

TEST_CASE("log-sum-exp payoff: values, stability, translation") {
    const Payoff lse1 = Payoff::log_sum_exp(3, 1.0);
    CHECK(lse1(Vec{0.0, 0.0, 0.0}) == doctest::Approx(std::log(3.0)).epsilon(1e-15));

    const Payoff lse = Payoff::log_sum_exp(2, 0.5);
    CHECK(lse(Vec{0.0, 0.0}) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));

    // Stabilized evaluation: huge arguments must not overflow.
    const double big = lse(Vec{1e8, -1e8});
    CHECK(std::isfinite(big));
    CHECK(big >= 1e8);
    CHECK(big <= 1e8 + 1.0);

    CHECK(lse(Vec{1.0 + 7.0, -2.0 + 7.0}) ==
          doctest::Approx(lse(Vec{1.0, -2.0}) + 7.0).epsilon(1e-14));
}

TEST_CASE("mean payoff") {
    const Payoff phi = Payoff::mean(3);
    CHECK(phi(Vec{1.0, 2.0, 3.0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("payoff dimension mismatch throws") {
    const Payoff phi = Payoff::max(3);
    CHECK_THROWS_AS(phi(Vec{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(eval_payoff(phi, RegretPoint{Vec{1.0, 2.0, 3.0, 4.0}}), std::invalid_argument);
}

TEST_CASE("payoff axioms: random translation / symmetry / monotonicity probes") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> shift(-3.0, 3.0);
    std::uniform_real_distribution<double> bump(0.0, 2.0);

    for (const Payoff& phi : {Payoff::max(3), Payoff::log_sum_exp(3, 0.5), Payoff::mean(3)}) {
        for (int trial = 0; trial < 1000; ++trial) {
            Vec x{coord(rng), coord(rng), coord(rng)};
            const double fx = phi(x);
            const double c = shift(rng);
            CHECK(std::fabs(phi(Vec{x[0] + c, x[1] + c, x[2] + c}) - fx - c) <= 1e-10);

            Vec sx(x);
            std::shuffle(sx.begin(), sx.end(), rng);
            CHECK(std::fabs(phi(sx) - fx) <= 1e-12);

            const int i = static_cast<int>(rng() % 3);
            Vec mx(x);
            mx[static_cast<std::size_t>(i)] += bump(rng);
            CHECK(phi(mx) >= fx - 1e-12);
        }
    }
}

TEST_CASE("validate_payoff: builtins pass, Lipschitz estimate near 1") {
    const ValidationReport max_rep = validate_payoff(Payoff::max(3), 3000, 2.0, 42);
    CHECK(max_rep.all_pass);
    CHECK(max_rep.lipschitz_estimate <= 1.0 + 1e-6);

    const ValidationReport lse_rep = validate_payoff(Payoff::log_sum_exp(3, 0.5), 3000, 2.0, 42);
    CHECK(lse_rep.all_pass);
    CHECK(lse_rep.lipschitz_estimate <= 1.0 + 1e-6);
}

TEST_CASE("validate_payoff: asymmetric payoff fails the symmetry axiom") {
    const Payoff first = Payoff::custom(2, "first", [](std::span<const double> x) { return x[0]; });
    const ValidationReport rep = validate_payoff(first, 2000, 2.0, 7);
    CHECK(!rep.all_pass);
    bool symmetry_failed = false;
    bool monotone_passed = false;
    bool translation_passed = false;
    for (const AxiomCheck& ax : rep.axioms) {
        if (ax.axiom == "symmetric") symmetry_failed = !ax.pass;
        if (ax.axiom == "monotone") monotone_passed = ax.pass;
        if (ax.axiom == "translation") translation_passed = ax.pass;
    }
    CHECK(symmetry_failed);
    CHECK(monotone_passed);
    CHECK(translation_passed);
}

TEST_CASE("validate_payoff: non-translation payoff fails the translation axiom") {
    const Payoff sq =
        Payoff::custom(2, "square", [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; });
    const ValidationReport rep = validate_payoff(sq, 2000, 2.0, 7);
    CHECK(!rep.all_pass);
    bool translation_failed = false;
    for (const AxiomCheck& ax : rep.axioms)
        if (ax.axiom == "translation") translation_failed = !ax.pass;
    CHECK(translation_failed);
}

TEST_CASE("validate_payoff: argument validation") {
    CHECK_THROWS_AS(validate_payoff(Payoff::max(2), 0, 2.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(validate_payoff(Payoff::max(2), 10, 0.0, 1), std::invalid_argument);
}

TEST_CASE("OutcomeVector: wins, bits, lexicographic order") {
    const OutcomeVector v(3, 0b001); // v = (1,0,0)
    CHECK(v.wins(0));
    CHECK(!v.wins(1));
    CHECK(!v.wins(2));
    CHECK(v.bits() == "100");
    CHECK(v.complement().bits() == "011");

    // (0,1,0) precedes (1,0,0) in tuple order.
    CHECK(lex_less(OutcomeVector(3, 0b010), OutcomeVector(3, 0b001)));
    CHECK(!lex_less(OutcomeVector(3, 0b001), OutcomeVector(3, 0b010)));
}

TEST_CASE("OutcomeVector: complement is an involution, exhaustively for n <= 10") {
    for (int n = 1; n <= 10; ++n) {
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            const OutcomeVector v(n, mask);
            CHECK(v.complement().complement() == v);
        }
    }
}

TEST_CASE("OutcomeVector: bad construction throws") {
    CHECK_THROWS_AS(OutcomeVector(0, 0), std::invalid_argument);
    CHECK_THROWS_AS(OutcomeVector(2, 0b100), std::invalid_argument);
}

TEST_CASE("PlayerMix / MarketMix validity") {
    CHECK(PlayerMix{Vec{0.25, 0.75}}.valid());
    CHECK(!PlayerMix{Vec{0.5, 0.6}}.valid());
    CHECK(!PlayerMix{Vec{-0.1, 1.1}}.valid());

    MarketMix mix;
    mix.n = 2;
    mix.prob = {0.25, 0.25, 0.25, 0.25};
    CHECK(mix.valid());
    CHECK(mix.expected_win(0) == doctest::Approx(0.5).epsilon(1e-15));
    mix.prob = {0.5, 0.5, 0.5, -0.5};
    CHECK(!mix.valid());
}
