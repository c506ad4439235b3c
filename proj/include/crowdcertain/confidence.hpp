#pragma once

#include <span>

#include "crowdcertain/ndarray.hpp"

namespace crowdcertain::confidence {

struct BetaShape {
    double l = 1.0;
    double u = 1.0;
};

struct ConfidenceScores {
    Matrix<double> f_freq;   // N x K, weight of the votes agreeing with nu
    Matrix<double> f_beta;   // N x K, I_0.5(l, u)
    Matrix<double> shape_l;  // N x K
    Matrix<double> shape_u;  // N x K
};

// Round half away from zero.
long round_half_away(double x);

// Sum of the weights whose vote equals nu.
double freq_confidence(std::span<const Label> votes, std::span<const double> weights, Label nu);

// l = 1 + weight agreeing with nu, u = 1 + weight disagreeing.
BetaShape beta_shape(std::span<const Label> votes, std::span<const double> weights, Label nu);

// Binomial tail sum_{t=[l]}^{T-1} C(T-1, t) 0.5^(T-1) with T = [l + u];
// equals the regularized incomplete beta I_0.5(l, u) for integer shapes.
// An empty sum ([l] > T - 1) gives 0.
double beta_confidence(double l, double u);

// Per-class worker weights omega (M x K) applied to the votes (N x M x K).
Matrix<double> freq_confidence(const LabelTensor& votes, const Matrix<double>& omega, const LabelMatrix& nu);
ConfidenceScores compute(const LabelTensor& votes, const Matrix<double>& omega, const LabelMatrix& nu);

// Per-instance weights (N x M x K), e.g. Tao's normalized gamma.
ConfidenceScores compute(const LabelTensor& votes, const Tensor3<double>& weights, const LabelMatrix& nu);

// Separate weights for the two scores; used where the frequency score is a
// normalized vote share while the Beta shapes count whole votes.
ConfidenceScores compute(const LabelTensor& votes, const Tensor3<double>& freq_weights,
                         const Tensor3<double>& beta_weights, const LabelMatrix& nu);

}  // namespace crowdcertain::confidence
