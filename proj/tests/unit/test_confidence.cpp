#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "crowdcertain/confidence.hpp"
#include "helpers.hpp"

namespace conf = crowdcertain::confidence;
using crowdcertain::Error;
using crowdcertain::Label;
using crowdcertain::LabelMatrix;
using crowdcertain::LabelTensor;
using crowdcertain::Matrix;
using crowdcertain::Rng;
using doctest::Approx;

TEST_SUITE("confidence") {

TEST_CASE("frequency confidence examples") {
    const std::vector<double> w{0.75, 0.25};
    CHECK(conf::freq_confidence(std::vector<Label>{1, 0}, w, 1) == Approx(0.75));
    CHECK(conf::freq_confidence(std::vector<Label>{1, 1}, w, 1) == Approx(1.0));
    CHECK(conf::freq_confidence(std::vector<Label>{1, 0}, w, 0) == Approx(0.25));
    CHECK_THROWS_AS(conf::freq_confidence(std::vector<Label>{1}, w, 1), Error);
}

TEST_CASE("frequency confidence complements when nu flips") {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + rng.below(9);
        std::vector<double> w(m);
        double total = 0.0;
        for (auto& x : w) total += (x = rng.uniform());
        for (auto& x : w) x /= total;
        std::vector<Label> eta(m);
        for (auto& e : eta) e = static_cast<Label>(rng.below(2));
        const double one = conf::freq_confidence(eta, w, 1), zero = conf::freq_confidence(eta, w, 0);
        CHECK(one + zero == Approx(1.0).epsilon(1e-12));
        CHECK(one >= 0.0);
        CHECK(one <= 1.0);
    }
}

TEST_CASE("Beta shape examples") {
    const std::vector<double> w{0.75, 0.25};
    auto s = conf::beta_shape(std::vector<Label>{1, 0}, w, 1);
    CHECK(s.l == Approx(1.75));
    CHECK(s.u == Approx(1.25));
    s = conf::beta_shape(std::vector<Label>{0, 0}, w, 0);
    CHECK(s.l == Approx(2.0));
    CHECK(s.u == Approx(1.0));
}

TEST_CASE("Beta confidence examples") {
    CHECK(conf::beta_confidence(3, 1) == Approx(0.125));
    CHECK(conf::beta_confidence(2, 1) == Approx(0.25));
    CHECK(conf::beta_confidence(1.75, 1.25) == Approx(0.25));
    CHECK(conf::beta_confidence(2, 1) == Approx(oracles::incomplete_beta(0.5, 2, 1)).epsilon(1e-12));
    CHECK_THROWS_AS(conf::beta_confidence(0.5, 2), Error);
    CHECK_THROWS_AS(conf::beta_confidence(2, 0.9), Error);
}

TEST_CASE("rounding is half away from zero") {
    CHECK(conf::round_half_away(2.5) == 3);
    CHECK(conf::round_half_away(1.5) == 2);
    CHECK(conf::round_half_away(1.49) == 1);
    CHECK(conf::round_half_away(-2.5) == -3);
    // l = 1.5 rounds to 2 and T = round(3.0) = 3: one term, C(2, 2) / 4.
    CHECK(conf::beta_confidence(1.5, 1.5) == Approx(0.25));
}

TEST_CASE("valid shapes always leave a non-empty tail") {
    // With u >= 1, round(l + u) >= round(l) + 1, so the lower limit never passes T - 1.
    for (double l = 1.0; l <= 6.0; l += 0.05)
        for (double u = 1.0; u <= 6.0; u += 0.05) {
            const double f = conf::beta_confidence(l, u);
            CHECK(f > 0.0);
            CHECK(f < 1.0);
        }
}

TEST_CASE("Beta confidence matches the quadrature oracle for integer shapes") {
    for (int l = 1; l <= 20; ++l)
        for (int u = 1; u <= 20; ++u)
            CHECK(std::abs(conf::beta_confidence(l, u) - oracles::incomplete_beta(0.5, l, u)) <= 1e-9);
}

TEST_CASE("Beta confidence tail symmetry") {
    for (int t = 2; t <= 20; ++t)
        for (int l = 1; l < t; ++l) {
            const int u = t - l;
            CHECK(conf::beta_confidence(l, u) + conf::beta_confidence(u, l) == Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("large shapes stay finite") {
    const double v = conf::beta_confidence(1500, 1500);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(v == Approx(0.5).epsilon(0.05));
}

TEST_CASE("strict weighted majority has at least half the weight") {
    for (std::size_t m = 1; m <= 5; ++m) {
        Rng rng(m);
        std::vector<double> w(m);
        double total = 0.0;
        for (auto& x : w) total += (x = 0.05 + rng.uniform());
        for (auto& x : w) x /= total;
        for (unsigned pattern = 0; pattern < (1u << m); ++pattern) {
            std::vector<Label> eta(m);
            double score = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                eta[a] = (pattern >> a) & 1u;
                score += w[a] * eta[a];
            }
            const Label nu = score > 0.5 ? 1 : 0;
            if (score == 0.5) continue;
            CHECK(conf::freq_confidence(eta, w, nu) >= 0.5);
        }
    }
}

TEST_CASE("matrix form shapes and invariants") {
    const std::size_t n = 30, m = 4;
    const auto y = testing_support::balanced_truth(n, 3);
    const auto eta = testing_support::noisy_panel(y, {0.9, 0.8, 0.6, 0.7}, 4);
    Matrix<double> omega({m, 1});
    const std::vector<double> w{0.4, 0.3, 0.1, 0.2};
    for (std::size_t a = 0; a < m; ++a) omega(a, 0) = w[a];
    LabelMatrix nu({n, 1});
    for (std::size_t i = 0; i < n; ++i) nu(i, 0) = static_cast<Label>(i % 2);
    const auto scores = conf::compute(eta, omega, nu);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(scores.shape_l(i, 0) >= 1.0);
        CHECK(scores.shape_u(i, 0) >= 1.0);
        CHECK(scores.shape_l(i, 0) + scores.shape_u(i, 0) == Approx(3.0));
        CHECK(scores.f_freq(i, 0) == Approx(scores.shape_l(i, 0) - 1.0));
        CHECK(scores.f_beta(i, 0) == conf::beta_confidence(scores.shape_l(i, 0), scores.shape_u(i, 0)));
    }
    CHECK(conf::freq_confidence(eta, omega, nu) == scores.f_freq);
    CHECK_THROWS_AS(conf::compute(eta, Matrix<double>({3, 1}), nu), Error);
    CHECK_THROWS_AS(conf::compute(eta, omega, LabelMatrix({n + 1, 1})), Error);
}

TEST_CASE("normalized weights never push the frequency score past one") {
    // Seven weights of 1/7 sum to slightly more than 1 in floating point.
    const std::vector<double> w(7, 1.0 / 7.0);
    const std::vector<Label> eta(7, 1);
    const double f = conf::freq_confidence(eta, w, 1);
    CHECK(f <= 1.0);
    CHECK(f == Approx(1.0));
}

}  // TEST_SUITE
