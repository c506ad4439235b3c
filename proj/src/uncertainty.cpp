#include "crowdcertain/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace crowdcertain::uncertainty {

Measure parse_measure(std::string_view name) {
    if (name == "std-dev") return Measure::std_dev;
    if (name == "entropy") return Measure::entropy;
    if (name == "committee-var") return Measure::committee_variance;
    if (name == "pred-interval") return Measure::predictive_interval;
    if (name == "conformal") return Measure::conformal;
    throw Error("unknown uncertainty measure: " + std::string(name));
}

std::string to_string(Measure m) {
    switch (m) {
        case Measure::std_dev: return "std-dev";
        case Measure::entropy: return "entropy";
        case Measure::committee_variance: return "committee-var";
        case Measure::predictive_interval: return "pred-interval";
        case Measure::conformal: return "conformal";
    }
    return "?";
}

namespace {

template <typename T>
double sample_variance(std::span<const T> xs) {
    const double g = static_cast<double>(xs.size());
    double mean = 0.0;
    for (auto x : xs) mean += static_cast<double>(x);
    mean /= g;
    // Corrected two-pass sum: the compensation term cancels the rounding of the
    // mean, so identical values give exactly zero.
    double ss = 0.0, comp = 0.0;
    for (auto x : xs) {
        const double d = static_cast<double>(x) - mean;
        ss += d * d;
        comp += d;
    }
    return std::max(0.0, ss - comp * comp / g) / (g - 1.0);
}

}  // namespace

double std_dev(std::span<const Label> votes) {
    if (votes.size() < 2) throw Error("std_dev: need at least two classifiers");
    return std::sqrt(sample_variance(votes));
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("entropy: probability outside [0, 1]");
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double committee_variance(std::span<const double> probs) {
    if (probs.size() < 2) throw Error("committee_variance: need at least two classifiers");
    return sample_variance(probs);
}

double predictive_interval(std::span<const double> probs, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error("predictive_interval: gamma must be in (0, 1)");
    if (probs.size() < 2) throw Error("predictive_interval: need at least two classifiers");
    std::vector<double> sorted(probs.begin(), probs.end());
    std::sort(sorted.begin(), sorted.end());
    const double g = static_cast<double>(sorted.size());
    // The tolerance keeps e.g. 5 * 0.2 from rounding up to index 2.
    constexpr double eps = 1e-9;
    auto clamp = [&](double idx) { return static_cast<std::size_t>(std::clamp(idx, 1.0, g)); };
    const std::size_t lo = clamp(std::ceil(g / 2.0 * (1.0 - gamma) - eps));
    const std::size_t hi = clamp(std::floor(g / 2.0 * (1.0 + gamma) + eps));
    return std::max(0.0, sorted[hi - 1] - sorted[lo - 1]);
}

double conformal_pvalue(std::span<const double> probs, Label reference, double threshold) {
    if (threshold < 0.0) throw Error("conformal_pvalue: threshold must be >= 0");
    if (probs.empty()) return 0.0;
    std::size_t count = 0;
    for (double p : probs)
        if (std::abs(p - static_cast<double>(reference)) >= threshold) ++count;
    return static_cast<double>(count) / static_cast<double>(probs.size());
}

double normalization_bound(Measure m, std::size_t g) {
    const double gd = static_cast<double>(g);
    switch (m) {
        case Measure::std_dev: return 0.5 * std::sqrt(gd / (gd - 1.0));
        // -p ln p peaks at p = 1/e with value 1/e.
        case Measure::entropy: return gd / std::numbers::e;
        case Measure::committee_variance: return gd / (4.0 * (gd - 1.0));
        case Measure::predictive_interval:
        case Measure::conformal: return 1.0;
    }
    return 1.0;
}

UncertaintyScores compute(const ensemble::EnsemblePredictions& preds, Measure measure, const Params& params) {
    const std::size_t n = preds.n(), m = preds.workers(), k = preds.classes(), g = preds.g();
    if (g < 2 && measure != Measure::conformal && measure != Measure::entropy)
        throw Error("uncertainty: measure needs at least two classifiers per worker");
    UncertaintyScores out{Tensor3<double>({n, m, k}), measure};
    const double bound = normalization_bound(measure, g);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < k; ++c) {
                double raw = 0.0;
                switch (measure) {
                    case Measure::std_dev: raw = std_dev(preds.labels.row(i, a, c)); break;
                    case Measure::entropy: raw = entropy(preds.probs.row(i, a, c)); break;
                    case Measure::committee_variance: raw = committee_variance(preds.probs.row(i, a, c)); break;
                    case Measure::predictive_interval:
                        raw = predictive_interval(preds.probs.row(i, a, c), params.interval_gamma);
                        break;
                    case Measure::conformal:
                        raw = conformal_pvalue(preds.probs.row(i, a, c), preds.eta(i, a, c),
                                               params.conformal_threshold);
                        break;
                }
                out.delta(i, a, c) = std::clamp(raw / bound, 0.0, 1.0);
            }
    return out;
}

}  // namespace crowdcertain::uncertainty
