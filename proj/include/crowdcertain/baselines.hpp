#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcertain/classifier_ensemble.hpp"
#include "crowdcertain/confidence.hpp"
#include "crowdcertain/dataset_io.hpp"
#include "crowdcertain/ndarray.hpp"

namespace crowdcertain::baselines {

// Comparison aggregators. All of them read the raw crowd labels z (N x M x K)
// and treat each class as an independent binary problem. Every tie resolves
// to label 0.
enum class Method { mv, sheng, tao, wawa, zbs, kos, mace, mmsr, glad, dawid_skene, gold_mv };

std::string to_string(Method m);
Method parse_method(std::string_view name);
// The ten benchmark baselines (gold_mv is available but not part of this list).
std::vector<Method> standard_methods();

struct BaselineResult {
    Method method = Method::mv;
    LabelMatrix nu;               // N x K
    Matrix<double> score;         // N x K, monotone in the evidence for label 1 (used for AUC)
    Matrix<double> worker_scores; // M x K, method-specific skill / reliability
    std::optional<confidence::ConfidenceScores> confidence;
    std::size_t iterations_run = 0;
    // Objective after each iteration, one trace per class (iterative methods only).
    std::vector<std::vector<double>> objective_trace;
};

struct Hyperparameters {
    std::size_t em_iters = 100;
    double tol = 1e-6;
    std::size_t kos_iters = 10;
    double glad_step = 0.01;
    std::size_t mmsr_iters = 100;
    double gold_fraction = 0.1;
    std::size_t tao_folds = 10;
    ensemble::ForestConfig tao_forest{1, 4, 4, 1};
    std::uint64_t seed = 0;
};

// Plain majority vote: 1 iff strictly more than half of the workers say 1.
LabelMatrix majority_vote(const LabelTensor& z);

// nu = 1 iff sum_a weights(a, k) z(i, a, k) > 0.5. Returns the weighted score
// alongside the labels.
struct WeightedVote {
    LabelMatrix nu;
    Matrix<double> score;
};
WeightedVote baseline_aggregate(const LabelTensor& z, const Matrix<double>& weights);

BaselineResult mv(const LabelTensor& z);

// Majority vote with Beta confidence from whole-vote counts (equal worker weights).
BaselineResult sheng(const LabelTensor& z);

// Per-instance weights gamma = tau (1 + s^2): tau is the 10-fold cross-validated
// accuracy of forests trained on the worker's own labels, s the fraction of
// other workers giving the same label on the instance.
// gamma = tau (1 + s^2) before the per-instance normalization.
double tao_gamma(double tau, double agreement);
BaselineResult tao(const LabelTensor& z, const Matrix<double>& features, const data::FoldPlan& folds,
                   const ensemble::ForestConfig& forest = {1, 4, 4, 1}, std::uint64_t seed = 0);
BaselineResult tao(const LabelTensor& z, const Matrix<double>& features, const Hyperparameters& hp = {});

BaselineResult wawa(const LabelTensor& z);
BaselineResult zero_based_skill(const LabelTensor& z, std::size_t max_iters);
BaselineResult kos(const LabelTensor& z, std::size_t iters, std::uint64_t seed);
BaselineResult mace(const LabelTensor& z, std::size_t em_iters, std::uint64_t seed);
BaselineResult mmsr(const LabelTensor& z, std::size_t iters);
BaselineResult glad(const LabelTensor& z, std::size_t em_iters, double step);
BaselineResult dawid_skene(const LabelTensor& z, std::size_t em_iters, double tol);

// Weighted vote with weights = each worker's accuracy on a random gold subset
// (fraction of instances) where the truth is revealed.
BaselineResult gold_majority_vote(const LabelTensor& z, const LabelMatrix& truth, double gold_fraction,
                                  std::uint64_t seed);

BaselineResult run(Method method, const LabelTensor& z, const Matrix<double>& features, const LabelMatrix& truth,
                   const Hyperparameters& hp);

// Single-class model fits. `votes` is N x M for one class.

struct DawidSkeneFit {
    std::vector<std::array<double, 4>> confusion;  // per worker, e[j][c] at index 2*j + c = P(z=j | y=c)
    std::array<double, 2> prior{0.5, 0.5};
    std::vector<double> posterior;                 // P(y_i = 1)
    std::vector<double> objective;                 // log-likelihood + log Dirichlet(2) prior
    std::size_t iterations = 0;
};
DawidSkeneFit fit_dawid_skene(const LabelMatrix& votes, std::size_t em_iters, double tol);

struct MaceFit {
    std::vector<double> competence;              // theta: probability of not spamming
    std::vector<std::array<double, 2>> spam_dist; // xi
    std::vector<double> posterior;
    std::vector<double> loglik;
    std::size_t iterations = 0;
};
MaceFit fit_mace(const LabelMatrix& votes, std::size_t em_iters, std::uint64_t seed);

struct GladParams {
    std::vector<double> ability;         // per worker, real line
    std::vector<double> log_difficulty;  // per instance, log of the inverse difficulty beta
    double prior1 = 0.5;
};
struct GladFit {
    GladParams params;
    std::vector<double> posterior;
    std::vector<double> loglik;
    std::size_t iterations = 0;
};
GladFit fit_glad(const LabelMatrix& votes, std::size_t em_iters, double step);

// Building blocks exposed for verification.
namespace glad_detail {
// Posterior P(y_i = 1) under the given parameters; writes the observed log-likelihood.
std::vector<double> e_step(const LabelMatrix& votes, const GladParams& params, double* loglik = nullptr);
// Expected complete-data log-likelihood (ability / difficulty terms).
double q_value(const LabelMatrix& votes, std::span<const double> posterior, const GladParams& params);
void q_gradient(const LabelMatrix& votes, std::span<const double> posterior, const GladParams& params,
                std::vector<double>& d_ability, std::vector<double>& d_log_difficulty);
}  // namespace glad_detail

struct MmsrFit {
    std::vector<double> rank_one;  // v with E[2 C - 1] = v v^T off the diagonal
    std::vector<double> skills;    // (v + 1) / 2 clipped to [eps, 1 - eps]
    std::size_t iterations = 0;
};
// Masked rank-one fit of the agreement target 2 C - 1 by truncated power iteration.
MmsrFit fit_mmsr(const LabelMatrix& votes, std::size_t iters);
Matrix<double> agreement_target(const LabelMatrix& votes);

}  // namespace crowdcertain::baselines
