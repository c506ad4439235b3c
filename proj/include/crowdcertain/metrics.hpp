#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crowdcertain/ndarray.hpp"

namespace crowdcertain::metrics {

// Mean agreement of nu with y over every (i, k).
double accuracy(const LabelMatrix& nu, const LabelMatrix& y);

// 2PR / (P + R) over all (i, k); 0 when there are no true positives.
double f1(const LabelMatrix& nu, const LabelMatrix& y);

// Mann-Whitney AUC with ties counted as one half. Empty when y has a single class.
std::optional<double> auc_roc(std::span<const double> scores, std::span<const Label> y);
std::optional<double> auc_roc(const Matrix<double>& scores, const LabelMatrix& y);

// Mean of (F - y)^2. Lower is better.
double brier(const Matrix<double>& f, const LabelMatrix& y);

// Equal-width bins on [0, 1], each (lo, hi] with 0 falling in the first bin.
// Bin accuracy is the agreement of nu with y, bin confidence the mean F.
double ece(const Matrix<double>& f, const LabelMatrix& y, const LabelMatrix& nu, std::size_t bins);

struct CalibrationBin {
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    double accuracy = 0.0;
    double confidence = 0.0;
};
std::vector<CalibrationBin> calibration_bins(const Matrix<double>& f, const LabelMatrix& y, const LabelMatrix& nu,
                                             std::size_t bins);

// Spearman rank correlation with average ranks for ties. Empty when either
// side is constant.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

struct MetricRow {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;
    std::optional<double> brier_freq, brier_beta, ece_freq, ece_beta;
    std::size_t n_instances = 0;
    std::size_t bins = 10;
};

// Scores feed the AUC; the confidence pair is optional (methods without one).
MetricRow evaluate(const LabelMatrix& nu, const Matrix<double>& score, const LabelMatrix& y,
                   const Matrix<double>* f_freq, const Matrix<double>* f_beta, std::size_t bins);

}  // namespace crowdcertain::metrics
