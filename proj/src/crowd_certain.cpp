#include "crowdcertain/crowd_certain.hpp"

namespace crowdcertain::core {

ConsistencyMode parse_strategy(std::string_view name) {
    if (name == "no-penalty") return ConsistencyMode::no_penalty;
    if (name == "penalized") return ConsistencyMode::penalized;
    throw Error("unknown strategy: " + std::string(name));
}

std::string to_string(ConsistencyMode mode) {
    return mode == ConsistencyMode::penalized ? "penalized" : "no-penalty";
}

PenaltyReference parse_penalty_reference(std::string_view name) {
    if (name == "eta") return PenaltyReference::eta;
    if (name == "z") return PenaltyReference::z;
    throw Error("unknown penalty reference: " + std::string(name));
}

std::string to_string(PenaltyReference ref) { return ref == PenaltyReference::eta ? "eta" : "z"; }

Label worker_majority(std::span<const Label> votes) {
    std::size_t ones = 0;
    for (auto v : votes) ones += v;
    return 2 * ones > votes.size() ? 1 : 0;
}

LabelMatrix worker_majority(const LabelTensor& votes) {
    const std::size_t n = votes.extent(0), m = votes.extent(1), k = votes.extent(2);
    LabelMatrix out({n, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t ones = 0;
            for (std::size_t a = 0; a < m; ++a) ones += votes(i, a, c);
            out(i, c) = 2 * ones > m ? 1 : 0;
        }
    return out;
}

ConsistencyScores consistency(const Tensor3<double>& delta, const LabelTensor& eta, ConsistencyMode mode,
                              const LabelTensor* reference) {
    if (delta.shape() != eta.shape()) throw Error("consistency: delta and eta shapes differ");
    if (reference && reference->shape() != eta.shape()) throw Error("consistency: reference shape differs");
    for (double d : delta.flat())
        if (!(d >= 0.0 && d <= 1.0)) throw Error("consistency: uncertainty must be normalized to [0, 1]");

    const std::size_t n = eta.extent(0), m = eta.extent(1), k = eta.extent(2);
    ConsistencyScores out{Tensor3<double>({n, m, k}), mode};
    LabelMatrix majority;
    if (mode == ConsistencyMode::penalized) majority = worker_majority(reference ? *reference : eta);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < k; ++c) {
                const bool agrees = mode == ConsistencyMode::no_penalty || eta(i, a, c) == majority(i, c);
                out.c(i, a, c) = agrees ? 1.0 - delta(i, a, c) : 0.0;
            }
    return out;
}

Reliability reliability(const ConsistencyScores& scores) {
    const auto& c = scores.c;
    const std::size_t n = c.extent(0), m = c.extent(1), k = c.extent(2);
    if (n == 0) throw Error("reliability: no instances");
    Reliability r{Matrix<double>({m, k}), std::vector<double>(m, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t cl = 0; cl < k; ++cl) r.psi(a, cl) += c(i, a, cl);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t cl = 0; cl < k; ++cl) {
            r.psi(a, cl) /= static_cast<double>(n);
            r.psi_overall[a] += r.psi(a, cl);
        }
        r.psi_overall[a] /= static_cast<double>(k);
    }
    return r;
}

Matrix<double> weights(const Matrix<double>& psi) {
    const std::size_t m = psi.extent(0), k = psi.extent(1);
    Matrix<double> omega({m, k});
    for (std::size_t c = 0; c < k; ++c) {
        double total = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            if (psi(a, c) < 0.0) throw Error("weights: negative reliability");
            total += psi(a, c);
        }
        for (std::size_t a = 0; a < m; ++a)
            omega(a, c) = total > 0.0 ? psi(a, c) / total : 1.0 / static_cast<double>(m);
    }
    return omega;
}

AggregationResult aggregate(const LabelTensor& eta, const Matrix<double>& omega) {
    const std::size_t n = eta.extent(0), m = eta.extent(1), k = eta.extent(2);
    if (omega.extent(0) != m || omega.extent(1) != k) throw Error("aggregate: weight matrix shape mismatch");
    AggregationResult out;
    out.nu = LabelMatrix({n, k});
    out.weighted_score = Matrix<double>({n, k});
    out.weights.omega = omega;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) s += omega(a, c) * eta(i, a, c);
            out.weighted_score(i, c) = s;
            out.nu(i, c) = s > 0.5 ? 1 : 0;
        }
    return out;
}

WorkerWeights estimate_weights(const ensemble::EnsemblePredictions& train, const Options& options,
                               const LabelTensor* train_crowd_labels) {
    const auto delta = uncertainty::compute(train, options.measure, options.params);
    const LabelTensor* reference = nullptr;
    if (options.mode == ConsistencyMode::penalized && options.reference == PenaltyReference::z) {
        if (!train_crowd_labels) throw Error("estimate_weights: crowd labels required for the z penalty reference");
        reference = train_crowd_labels;
    }
    const auto c = consistency(delta.delta, train.eta, options.mode, reference);
    auto r = reliability(c);
    WorkerWeights w;
    w.omega = weights(r.psi);
    w.psi = std::move(r.psi);
    w.psi_overall = std::move(r.psi_overall);
    return w;
}

}  // namespace crowdcertain::core
