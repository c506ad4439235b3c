#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcertain/classifier_ensemble.hpp"
#include "crowdcertain/ndarray.hpp"
#include "crowdcertain/uncertainty.hpp"

namespace crowdcertain::core {

enum class ConsistencyMode { no_penalty, penalized };

// What the penalized mode compares each worker's predicted label against:
// the across-worker majority of predicted labels (eta) or of crowd labels (z).
enum class PenaltyReference { eta, z };

ConsistencyMode parse_strategy(std::string_view name);  // "no-penalty" | "penalized"
std::string to_string(ConsistencyMode mode);
PenaltyReference parse_penalty_reference(std::string_view name);  // "eta" | "z"
std::string to_string(PenaltyReference ref);

struct ConsistencyScores {
    Tensor3<double> c;  // N x M x K in [0, 1]
    ConsistencyMode mode = ConsistencyMode::no_penalty;
};

struct Reliability {
    Matrix<double> psi;               // M x K
    std::vector<double> psi_overall;  // M, mean over classes
};

struct WorkerWeights {
    Matrix<double> psi;
    std::vector<double> psi_overall;
    Matrix<double> omega;  // M x K, each column sums to 1
};

struct AggregationResult {
    LabelMatrix nu;                 // N x K
    Matrix<double> weighted_score;  // N x K, sum_a omega(a,k) * eta(i,a,k)
    WorkerWeights weights;
};

// 1 iff strictly more than half of the votes are 1 (a tie gives 0).
Label worker_majority(std::span<const Label> votes);

// Per (instance, class) worker_majority over the worker axis of an N x M x K tensor.
LabelMatrix worker_majority(const LabelTensor& votes);

// no_penalty: c = 1 - delta. penalized: additionally c = 0 wherever the
// worker's eta differs from the across-worker majority of `reference`
// (eta itself when no reference is given).
ConsistencyScores consistency(const Tensor3<double>& delta, const LabelTensor& eta, ConsistencyMode mode,
                              const LabelTensor* reference = nullptr);

Reliability reliability(const ConsistencyScores& scores);

// Column-normalizes psi; a class whose reliabilities sum to zero gets uniform weights.
Matrix<double> weights(const Matrix<double>& psi);

// Weighted soft vote of eta; nu = 1 iff the weighted score is > 0.5.
AggregationResult aggregate(const LabelTensor& eta, const Matrix<double>& omega);

struct Options {
    uncertainty::Measure measure = uncertainty::Measure::std_dev;
    uncertainty::Params params;
    ConsistencyMode mode = ConsistencyMode::penalized;
    PenaltyReference reference = PenaltyReference::eta;
};

// Delta -> c -> psi -> omega on the training rows. `train_crowd_labels` is
// required only for PenaltyReference::z.
WorkerWeights estimate_weights(const ensemble::EnsemblePredictions& train, const Options& options,
                               const LabelTensor* train_crowd_labels = nullptr);

}  // namespace crowdcertain::core
