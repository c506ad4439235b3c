#include "crowdcertain/confidence.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace crowdcertain::confidence {

long round_half_away(double x) { return static_cast<long>(std::round(x)); }

double freq_confidence(std::span<const Label> votes, std::span<const double> weights, Label nu) {
    if (votes.size() != weights.size()) throw Error("freq_confidence: votes and weights differ in length");
    double s = 0.0;
    for (std::size_t a = 0; a < votes.size(); ++a)
        if (votes[a] == nu) s += weights[a];
    // Normalized weights can sum past 1 by a rounding error.
    if (s > 1.0 && s < 1.0 + 1e-12) s = 1.0;
    return s;
}

BetaShape beta_shape(std::span<const Label> votes, std::span<const double> weights, Label nu) {
    if (votes.size() != weights.size()) throw Error("beta_shape: votes and weights differ in length");
    BetaShape b;
    for (std::size_t a = 0; a < votes.size(); ++a) (votes[a] == nu ? b.l : b.u) += weights[a];
    return b;
}

double beta_confidence(double l, double u) {
    if (!(l >= 1.0) || !(u >= 1.0)) throw Error("beta_confidence: shape parameters must be >= 1");
    const long total = round_half_away(l + u);
    const long lower = round_half_away(l);
    const long n = total - 1;
    if (lower > n) return 0.0;
    if (n <= 1000) {
        double pmf = std::ldexp(1.0, static_cast<int>(-n));  // C(n, 0) 0.5^n
        double sum = 0.0;
        for (long t = 0; t <= n; ++t) {
            if (t >= lower) sum += pmf;
            pmf = pmf * static_cast<double>(n - t) / static_cast<double>(t + 1);
        }
        return sum;
    }
    double sum = 0.0;
    for (long t = lower; t <= n; ++t)
        sum += std::exp(std::lgamma(double(n) + 1) - std::lgamma(double(t) + 1) - std::lgamma(double(n - t) + 1) -
                        double(n) * std::numbers::ln2);
    return sum;
}

Matrix<double> freq_confidence(const LabelTensor& votes, const Matrix<double>& omega, const LabelMatrix& nu) {
    return compute(votes, omega, nu).f_freq;
}

namespace {

void check_shapes(const LabelTensor& votes, const LabelMatrix& nu) {
    if (nu.extent(0) != votes.extent(0) || nu.extent(1) != votes.extent(2))
        throw Error("confidence: nu shape does not match votes");
}

}  // namespace

ConfidenceScores compute(const LabelTensor& votes, const Tensor3<double>& freq_weights,
                         const Tensor3<double>& beta_weights, const LabelMatrix& nu) {
    check_shapes(votes, nu);
    if (freq_weights.shape() != votes.shape() || beta_weights.shape() != votes.shape())
        throw Error("confidence: weight tensor shape mismatch");
    const std::size_t n = votes.extent(0), m = votes.extent(1), k = votes.extent(2);
    ConfidenceScores out{Matrix<double>({n, k}), Matrix<double>({n, k}), Matrix<double>({n, k}),
                         Matrix<double>({n, k})};
    std::vector<Label> v(m);
    std::vector<double> wf(m), wb(m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t a = 0; a < m; ++a) {
                v[a] = votes(i, a, c);
                wf[a] = freq_weights(i, a, c);
                wb[a] = beta_weights(i, a, c);
            }
            out.f_freq(i, c) = freq_confidence(v, wf, nu(i, c));
            const auto shape = beta_shape(v, wb, nu(i, c));
            out.shape_l(i, c) = shape.l;
            out.shape_u(i, c) = shape.u;
            out.f_beta(i, c) = beta_confidence(shape.l, shape.u);
        }
    return out;
}

ConfidenceScores compute(const LabelTensor& votes, const Tensor3<double>& weights, const LabelMatrix& nu) {
    return compute(votes, weights, weights, nu);
}

ConfidenceScores compute(const LabelTensor& votes, const Matrix<double>& omega, const LabelMatrix& nu) {
    const std::size_t n = votes.extent(0), m = votes.extent(1), k = votes.extent(2);
    if (omega.extent(0) != m || omega.extent(1) != k) throw Error("confidence: omega shape mismatch");
    Tensor3<double> w({n, m, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < k; ++c) w(i, a, c) = omega(a, c);
    return compute(votes, w, w, nu);
}

}  // namespace crowdcertain::confidence
