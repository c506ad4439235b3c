#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdcertain/baselines.hpp"
#include "crowdcertain/crowd_certain.hpp"
#include "crowdcertain/dataset_io.hpp"
#include "crowdcertain/metrics.hpp"
#include "helpers.hpp"

namespace bl = crowdcertain::baselines;
namespace data = crowdcertain::data;
using crowdcertain::Error;
using crowdcertain::Label;
using crowdcertain::LabelMatrix;
using crowdcertain::LabelTensor;
using crowdcertain::Matrix;
using crowdcertain::Rng;
using doctest::Approx;
using testing_support::balanced_truth;
using testing_support::noisy_panel;
using testing_support::slice_class;
using testing_support::tensor_from_rows;

namespace {

Matrix<double> column_of(const std::vector<double>& v) {
    Matrix<double> m({v.size(), 1});
    for (std::size_t a = 0; a < v.size(); ++a) m(a, 0) = v[a];
    return m;
}

LabelTensor permute_workers(const LabelTensor& z, const std::vector<std::size_t>& perm) {
    LabelTensor out(z.shape());
    for (std::size_t i = 0; i < z.extent(0); ++i)
        for (std::size_t a = 0; a < z.extent(1); ++a)
            for (std::size_t c = 0; c < z.extent(2); ++c) out(i, a, c) = z(i, perm[a], c);
    return out;
}

double accuracy(const LabelMatrix& nu, const LabelMatrix& y) { return crowdcertain::metrics::accuracy(nu, y); }

void check_non_decreasing(const std::vector<double>& trace) {
    for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] >= trace[t - 1] - 1e-9);
}

std::vector<bl::Method> all_methods() {
    auto m = bl::standard_methods();
    m.push_back(bl::Method::gold_mv);
    return m;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("majority vote examples") {
    const auto z = tensor_from_rows({{1, 1, 0}, {0, 0, 1}, {1, 1, 1}, {0, 0, 0}});
    const auto nu = bl::majority_vote(z);
    CHECK(nu(0, 0) == 1);
    CHECK(nu(1, 0) == 0);
    CHECK(nu(2, 0) == 1);
    CHECK(nu(3, 0) == 0);
    CHECK(bl::majority_vote(tensor_from_rows({{1, 1, 0, 0}}))(0, 0) == 0);
}

TEST_CASE("baseline aggregation examples") {
    auto v = bl::baseline_aggregate(tensor_from_rows({{0, 1}}), column_of({0.75, 0.25}));
    CHECK(v.score(0, 0) == Approx(0.25));
    CHECK(v.nu(0, 0) == 0);
    v = bl::baseline_aggregate(tensor_from_rows({{1, 0}, {1, 1}}), column_of({1.0, 0.0}));
    CHECK(v.nu(0, 0) == 1);
    CHECK(v.nu(1, 0) == 1);
    CHECK_THROWS_AS(bl::baseline_aggregate(tensor_from_rows({{1, 0}}), column_of({1.0})), Error);
}

TEST_CASE("uniform weights reduce the baseline rule to majority vote") {
    for (std::size_t m = 1; m <= 5; ++m) {
        const Matrix<double> w({m, 1}, 1.0 / double(m));
        for (unsigned pattern = 0; pattern < (1u << m); ++pattern) {
            LabelTensor z({1, m, 1});
            for (std::size_t a = 0; a < m; ++a) z(0, a, 0) = (pattern >> a) & 1u;
            CHECK(bl::baseline_aggregate(z, w).nu == bl::majority_vote(z));
        }
    }
}

TEST_CASE("Sheng confidence from whole vote counts") {
    auto r = bl::sheng(tensor_from_rows({{1, 1, 0}}));
    REQUIRE(r.confidence.has_value());
    CHECK(r.nu(0, 0) == 1);
    CHECK(r.confidence->shape_l(0, 0) == 3.0);
    CHECK(r.confidence->shape_u(0, 0) == 2.0);
    CHECK(r.confidence->f_beta(0, 0) == Approx(0.3125));
    CHECK(r.confidence->f_freq(0, 0) == Approx(2.0 / 3.0));

    r = bl::sheng(tensor_from_rows({{0, 0, 0}}));
    CHECK(r.confidence->f_beta(0, 0) == Approx(0.0625));
    r = bl::sheng(tensor_from_rows({{1}}));
    CHECK(r.confidence->f_beta(0, 0) == Approx(0.25));
}

TEST_CASE("Tao weight formula") {
    CHECK(bl::tao_gamma(0.8, 0.5) == Approx(1.0));
    CHECK(bl::tao_gamma(0.7, 0.0) == Approx(0.7));
    CHECK(bl::tao_gamma(0.6, 1.0) == Approx(1.2));
}

TEST_CASE("Tao with identical workers weights them equally") {
    const auto ds = data::make_two_gaussians(120, 1);
    const auto base = noisy_panel(ds.truth, {0.8}, 3);
    LabelTensor z({120, 3, 1});
    for (std::size_t i = 0; i < 120; ++i)
        for (std::size_t a = 0; a < 3; ++a) z(i, a, 0) = base(i, 0, 0);
    const auto r = bl::tao(z, ds.features, bl::Hyperparameters{});
    for (std::size_t a = 0; a < 3; ++a) CHECK(r.worker_scores(a, 0) == Approx(1.0 / 3.0));
    for (std::size_t i = 0; i < 120; ++i) CHECK(r.nu(i, 0) == base(i, 0, 0));
}

TEST_CASE("Tao preconditions") {
    const auto ds = data::make_two_gaussians(40, 0);
    CHECK_THROWS_AS(bl::tao(noisy_panel(ds.truth, {0.9}, 0), ds.features, bl::Hyperparameters{}), Error);
    const auto z = noisy_panel(ds.truth, {0.9, 0.8}, 0);
    CHECK_THROWS_AS(bl::tao(z, ds.features, data::make_folds(30, 3, 0)), Error);
    CHECK_THROWS_AS(bl::tao(z, Matrix<double>({10, 2}), bl::Hyperparameters{}), Error);
}

TEST_CASE("Wawa skills") {
    // Worker 2 opposes the majority everywhere.
    const auto z = tensor_from_rows({{1, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 0, 1}});
    const auto r = bl::wawa(z);
    CHECK(r.worker_scores(0, 0) == 1.0);
    CHECK(r.worker_scores(1, 0) == 1.0);
    CHECK(r.worker_scores(2, 0) == 0.0);
    CHECK(r.nu == bl::majority_vote(z));
}

TEST_CASE("Wawa is at least as accurate as majority vote with two perfect workers") {
    const auto y = balanced_truth(1000, 5);
    const auto z = noisy_panel(y, {1.0, 1.0, 0.5}, 6);
    CHECK(accuracy(bl::wawa(z).nu, y) >= accuracy(bl::mv(z).nu, y));
}

TEST_CASE("zero-based skill iteration") {
    const auto unanimous = tensor_from_rows({{1, 1, 1}, {0, 0, 0}});
    const auto one = bl::zero_based_skill(unanimous, 100);
    CHECK(one.iterations_run == 1);
    CHECK(one.nu == bl::majority_vote(unanimous));

    const auto y = balanced_truth(500, 2);
    auto z = noisy_panel(y, {0.9, 0.85, 0.8, 0.0}, 3);
    const auto r = bl::zero_based_skill(z, 100);
    CHECK(r.iterations_run < 100);
    CHECK(r.worker_scores(3, 0) < 0.5);
    CHECK(r.worker_scores(0, 0) > 0.5);
    CHECK_THROWS_AS(bl::zero_based_skill(z, 0), Error);

    const auto capped = bl::zero_based_skill(z, 1);
    CHECK(capped.iterations_run == 1);
}

TEST_CASE("KOS examples") {
    const auto all_pos = tensor_from_rows({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    const auto r = bl::kos(all_pos, 10, 0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(r.nu(i, 0) == 1);

    for (int vote : {0, 1}) {
        const auto single = tensor_from_rows({{vote}});
        CHECK(bl::kos(single, 10, 4).nu(0, 0) == vote);
    }
}

TEST_CASE("KOS keeps up with majority vote on independent workers") {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        const auto y = balanced_truth(500, 100 + seed);
        const auto z = noisy_panel(y, std::vector<double>(5, 0.9), seed);
        CHECK(accuracy(bl::kos(z, 10, seed).nu, y) >= accuracy(bl::mv(z).nu, y) - 0.02);
    }
}

TEST_CASE("MACE recovers perfect workers and flags a constant worker") {
    const auto y = balanced_truth(200, 1);
    const auto perfect = noisy_panel(y, {1.0, 1.0, 1.0}, 0);
    const auto r = bl::mace(perfect, 50, 0);
    CHECK(r.nu == y);
    for (std::size_t a = 0; a < 3; ++a) CHECK(r.worker_scores(a, 0) > 0.95);

    auto z = noisy_panel(y, {0.85, 0.85, 0.85, 0.85, 0.5}, 2);
    for (std::size_t i = 0; i < 200; ++i) z(i, 4, 0) = 1;
    const auto fit = bl::fit_mace(slice_class(z, 0), 100, 0);
    CHECK(fit.competence[4] < 0.5);
    for (std::size_t a = 0; a < 4; ++a) CHECK(fit.competence[4] < fit.competence[a]);
    CHECK(fit.spam_dist[4][1] > 0.9);

    CHECK_THROWS_AS(bl::mace(z, 0, 0), Error);
}

TEST_CASE("MMSR matches the closed-form rank-one fit for three workers") {
    const auto y = balanced_truth(2000, 7);
    const auto z = noisy_panel(y, {0.9, 0.9, 0.9}, 8);
    const auto votes = slice_class(z, 0);
    const auto t = bl::agreement_target(votes);
    const auto fit = bl::fit_mmsr(votes, 100);
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t b = (a + 1) % 3, c = (a + 2) % 3;
        const double closed = std::sqrt(t(a, b) * t(a, c) / t(b, c));
        CHECK(fit.rank_one[a] == Approx(closed).epsilon(1e-8));
        CHECK(std::abs(fit.skills[a] - 0.9) <= 0.1);
    }
}

TEST_CASE("MMSR matches a least-squares rank-one oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto y = balanced_truth(800, seed);
        const auto z = noisy_panel(y, {0.95, 0.85, 0.75, 0.65, 0.9, 0.7}, seed + 10);
        const auto votes = slice_class(z, 0);
        const auto t = bl::agreement_target(votes);
        const std::size_t m = 6;
        // Coordinate minimization of sum_{a != b} (t_ab - v_a v_b)^2.
        std::vector<double> v(m, 0.5);
        for (int sweep = 0; sweep < 20000; ++sweep) {
            double change = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                double num = 0.0, den = 0.0;
                for (std::size_t b = 0; b < m; ++b)
                    if (b != a) {
                        num += t(a, b) * v[b];
                        den += v[b] * v[b];
                    }
                const double next = num / den;
                change = std::max(change, std::abs(next - v[a]));
                v[a] = next;
            }
            if (change < 1e-15) break;
        }
        const auto fit = bl::fit_mmsr(votes, 500);
        for (std::size_t a = 0; a < m; ++a) CHECK(fit.rank_one[a] == Approx(v[a]).epsilon(1e-6));
    }
}

TEST_CASE("MMSR symmetry, clipping and preconditions") {
    const auto y = balanced_truth(300, 4);
    auto z = noisy_panel(y, {0.8, 0.8, 0.7, 0.9}, 5);
    for (std::size_t i = 0; i < 300; ++i) z(i, 1, 0) = z(i, 0, 0);
    const auto r = bl::mmsr(z, 100);
    CHECK(r.worker_scores(0, 0) == Approx(r.worker_scores(1, 0)).epsilon(1e-9));

    const auto perfect = noisy_panel(y, {1.0, 1.0, 1.0}, 0);
    const auto p = bl::mmsr(perfect, 100);
    for (std::size_t a = 0; a < 3; ++a) {
        CHECK(p.worker_scores(a, 0) <= 1.0 - 1e-4);
        CHECK(std::isfinite(std::log(p.worker_scores(a, 0) / (1.0 - p.worker_scores(a, 0)))));
    }
    for (std::size_t i = 0; i < 300; ++i) CHECK(std::isfinite(p.score(i, 0)));
    CHECK(p.nu == y);

    CHECK_THROWS_AS(bl::mmsr(noisy_panel(y, {0.9, 0.9}, 0), 100), Error);
    CHECK_THROWS_AS(bl::mmsr(z, 0), Error);
}

TEST_CASE("GLAD recovers perfect workers") {
    const auto y = balanced_truth(200, 9);
    const auto z = noisy_panel(y, {1.0, 1.0, 1.0, 1.0}, 0);
    const auto r = bl::glad(z, 30, 0.01);
    CHECK(r.nu == y);
    CHECK_THROWS_AS(bl::glad(z, 30, 0.0), Error);
    CHECK_THROWS_AS(bl::glad(z, 30, -1.0), Error);
    CHECK_THROWS_AS(bl::glad(z, 0, 0.01), Error);
}

TEST_CASE("a zero-ability GLAD worker carries no information") {
    const auto y = balanced_truth(40, 3);
    const auto z = noisy_panel(y, {0.9, 0.7, 0.6}, 1);
    const auto votes = slice_class(z, 0);
    bl::GladParams with{{1.3, 0.7, 0.0}, std::vector<double>(40, 0.2), 0.4};
    LabelMatrix two({40, 2});
    for (std::size_t i = 0; i < 40; ++i) {
        two(i, 0) = votes(i, 0);
        two(i, 1) = votes(i, 1);
    }
    bl::GladParams without{{1.3, 0.7}, std::vector<double>(40, 0.2), 0.4};
    const auto a = bl::glad_detail::e_step(votes, with);
    const auto b = bl::glad_detail::e_step(two, without);
    for (std::size_t i = 0; i < 40; ++i) CHECK(a[i] == Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("GLAD gradient matches central finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 6 + rng.below(6), m = 3 + rng.below(3);
        LabelMatrix votes({n, m});
        for (auto& v : votes.flat()) v = static_cast<Label>(rng.below(2));
        bl::GladParams p;
        for (std::size_t a = 0; a < m; ++a) p.ability.push_back(rng.uniform(-2.0, 2.0));
        for (std::size_t i = 0; i < n; ++i) p.log_difficulty.push_back(rng.uniform(-1.0, 1.0));
        p.prior1 = rng.uniform(0.2, 0.8);
        std::vector<double> post(n);
        for (auto& q : post) q = rng.uniform();

        std::vector<double> ga, gb;
        bl::glad_detail::q_gradient(votes, post, p, ga, gb);
        const double h = 1e-6;
        auto check = [&](double analytic, double& param) {
            const double keep = param;
            param = keep + h;
            const double up = bl::glad_detail::q_value(votes, post, p);
            param = keep - h;
            const double down = bl::glad_detail::q_value(votes, post, p);
            param = keep;
            const double numeric = (up - down) / (2 * h);
            CHECK(std::abs(analytic - numeric) <= 1e-5 * std::max(1.0, std::abs(numeric)));
        };
        for (std::size_t a = 0; a < m; ++a) check(ga[a], p.ability[a]);
        for (std::size_t i = 0; i < n; ++i) check(gb[i], p.log_difficulty[i]);
    }
}

// Known to fail: with a lone worker the likelihood is flat along a ridge and the
// +1 pseudo-counts pull the confusion matrix toward 0.5 a little on every EM
// iteration (about 0.55 after 100 iterations at N = 200). Labels still equal z.
TEST_CASE("Dawid-Skene with one perfect worker") {
    const auto y = balanced_truth(200, 2);
    const auto z = noisy_panel(y, {1.0}, 0);
    const auto fit = bl::fit_dawid_skene(slice_class(z, 0), 100, 1e-6);
    CHECK(fit.confusion[0][0] > 0.95);
    CHECK(fit.confusion[0][3] > 0.95);
    CHECK(bl::dawid_skene(z, 100, 1e-6).nu == y);
}

TEST_CASE("Dawid-Skene finds the flipped worker") {
    // Two honest workers anchor the labels; worker 2 always answers the opposite.
    const auto y = balanced_truth(300, 6);
    auto z = noisy_panel(y, {0.9, 0.85, 1.0}, 7);
    for (std::size_t i = 0; i < 300; ++i) z(i, 2, 0) = 1 - y(i, 0);
    const auto fit = bl::fit_dawid_skene(slice_class(z, 0), 100, 1e-6);
    const auto& e = fit.confusion[2];
    CHECK(e[2 * 1 + 0] > e[2 * 0 + 0]);  // P(z=1 | y=0) > P(z=0 | y=0)
    CHECK(e[2 * 0 + 1] > e[2 * 1 + 1]);  // P(z=0 | y=1) > P(z=1 | y=1)
}

TEST_CASE("Dawid-Skene budget semantics") {
    const auto y = balanced_truth(100, 1);
    const auto z = noisy_panel(y, {0.8, 0.7, 0.9}, 2);
    const auto inf = bl::dawid_skene(z, 100, std::numeric_limits<double>::infinity());
    CHECK(inf.iterations_run == 1);
    const auto r = bl::dawid_skene(z, 3, 0.0);
    CHECK(r.iterations_run == 3);
    CHECK_THROWS_AS(bl::dawid_skene(z, 0, 1e-6), Error);
    CHECK_THROWS_AS(bl::dawid_skene(z, 10, -1.0), Error);
    CHECK_THROWS_AS(bl::dawid_skene(z, 10, std::nan("")), Error);
}

TEST_CASE("EM objectives never decrease") {
    for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
        const auto y = balanced_truth(150, seed);
        const auto z = noisy_panel(y, {0.9, 0.6, 0.75, 0.55, 0.3}, seed + 50);
        const auto votes = slice_class(z, 0);
        const auto ds = bl::fit_dawid_skene(votes, 100, 0.0);
        CHECK(ds.objective.size() == 100);
        check_non_decreasing(ds.objective);
        const auto glad = bl::fit_glad(votes, 60, 0.01);
        CHECK(glad.loglik.size() == 60);
        check_non_decreasing(glad.loglik);
        const auto mace = bl::fit_mace(votes, 100, seed);
        CHECK(mace.loglik.size() == 100);
        check_non_decreasing(mace.loglik);
    }
}

TEST_CASE("gold majority vote weights by accuracy on the gold split") {
    const auto y = balanced_truth(200, 3);
    auto z = noisy_panel(y, {1.0, 0.0, 0.6}, 1);
    const auto r = bl::gold_majority_vote(z, y, 0.1, 0);
    CHECK(r.worker_scores(0, 0) == 1.0);
    CHECK(r.worker_scores(1, 0) == 0.0);
    CHECK(r.nu == y);
    CHECK_THROWS_AS(bl::gold_majority_vote(z, y, 0.0, 0), Error);
    CHECK_THROWS_AS(bl::gold_majority_vote(z, LabelMatrix({10, 1}), 0.1, 0), Error);
}

TEST_CASE("perfect workers give the truth for every method") {
    const auto ds = data::make_two_gaussians(150, 4);
    bl::Hyperparameters hp;
    for (std::size_t m : {3u, 4u, 5u}) {
        LabelTensor z({150, m, 1});
        for (std::size_t i = 0; i < 150; ++i)
            for (std::size_t a = 0; a < m; ++a) z(i, a, 0) = ds.truth(i, 0);
        for (auto method : all_methods()) {
            CAPTURE(bl::to_string(method));
            const auto r = bl::run(method, z, ds.features, ds.truth, hp);
            CHECK(r.nu == ds.truth);
        }
    }
}

TEST_CASE("permuting workers permutes scores and keeps labels") {
    const auto ds = data::make_xor_grid(160, 3);
    const auto z = noisy_panel(ds.truth, {0.9, 0.55, 0.8, 0.7, 0.65}, 11);
    const std::vector<std::size_t> perm{3, 0, 4, 2, 1};
    const auto zp = permute_workers(z, perm);
    bl::Hyperparameters hp;
    for (auto method : all_methods()) {
        CAPTURE(bl::to_string(method));
        const auto a = bl::run(method, z, ds.features, ds.truth, hp);
        const auto b = bl::run(method, zp, ds.features, ds.truth, hp);
        CHECK(a.nu == b.nu);
        for (std::size_t w = 0; w < 5; ++w)
            CHECK(b.worker_scores(w, 0) == Approx(a.worker_scores(perm[w], 0)).epsilon(1e-6));
    }
}

TEST_CASE("results are binary, finite and within budget") {
    const auto ds = data::make_two_gaussians(120, 8);
    const auto z = noisy_panel(ds.truth, {0.9, 0.4, 0.7, 0.6}, 2);
    bl::Hyperparameters hp;
    hp.em_iters = 20;
    hp.mmsr_iters = 20;
    for (auto method : all_methods()) {
        CAPTURE(bl::to_string(method));
        const auto r = bl::run(method, z, ds.features, ds.truth, hp);
        CHECK(r.method == method);
        for (auto v : r.nu.flat()) CHECK(v <= 1);
        for (double s : r.worker_scores.flat()) CHECK(std::isfinite(s));
        for (double s : r.score.flat()) CHECK(std::isfinite(s));
        CHECK(r.iterations_run <= 20);
    }
}

TEST_CASE("non-binary labels are rejected") {
    auto z = tensor_from_rows({{1, 0, 1}, {0, 1, 1}});
    z(0, 1, 0) = 3;
    CHECK_THROWS_AS(bl::mv(z), Error);
    CHECK_THROWS_AS(bl::dawid_skene(z, 10, 1e-6), Error);
}

TEST_CASE("method names round trip") {
    for (auto m : all_methods()) CHECK(bl::parse_method(bl::to_string(m)) == m);
    CHECK(bl::standard_methods().size() == 10);
    CHECK_THROWS_AS(bl::parse_method("best"), Error);
}

}  // TEST_SUITE
