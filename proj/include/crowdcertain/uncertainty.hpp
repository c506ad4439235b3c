#pragma once

#include <span>
#include <string>
#include <string_view>

#include "crowdcertain/classifier_ensemble.hpp"
#include "crowdcertain/ndarray.hpp"

namespace crowdcertain::uncertainty {

enum class Measure { std_dev, entropy, committee_variance, predictive_interval, conformal };

Measure parse_measure(std::string_view name);  // "std-dev", "entropy", "committee-var", "pred-interval", "conformal"
std::string to_string(Measure m);

struct Params {
    double interval_gamma = 0.95;
    double conformal_threshold = 0.5;
};

// Sample standard deviation (divisor G-1) of binary votes. G >= 2.
double std_dev(std::span<const Label> votes);

// -sum p ln p over the classifiers, with 0 ln 0 = 0.
double entropy(std::span<const double> probs);

// Sample variance (divisor G-1) of the probabilities. G >= 2.
double committee_variance(std::span<const double> probs);

// Width Q_U - Q_L of the sorted probabilities at 1-based indices
// L = ceil(G(1-gamma)/2) and U = floor(G(1+gamma)/2), both clamped to [1, G].
double predictive_interval(std::span<const double> probs, double gamma);

// Fraction of classifiers whose nonconformity |p - reference| is >= threshold.
double conformal_pvalue(std::span<const double> probs, Label reference, double threshold);

// Largest value the raw measure can take for G classifiers; dividing by it
// maps the measure into [0, 1].
double normalization_bound(Measure m, std::size_t g);

struct UncertaintyScores {
    Tensor3<double> delta;  // N x M x K, normalized to [0, 1]
    Measure measure = Measure::std_dev;
};

// Normalized uncertainty of every (instance, worker, class). std_dev reads the
// binarized votes; the other measures read the probabilities, and conformal
// uses the worker's classifier-majority label as the reference.
UncertaintyScores compute(const ensemble::EnsemblePredictions& preds, Measure measure, const Params& params = {});

}  // namespace crowdcertain::uncertainty
