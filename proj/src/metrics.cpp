#include "crowdcertain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace crowdcertain::metrics {

namespace {

void check_pair(const LabelMatrix& a, const LabelMatrix& b, const char* what) {
    if (a.shape() != b.shape()) throw Error(std::string(what) + ": shape mismatch");
}

void check_confidence(const Matrix<double>& f, const LabelMatrix& y, const char* what) {
    if (f.extent(0) != y.extent(0) || f.extent(1) != y.extent(1))
        throw Error(std::string(what) + ": shape mismatch");
    for (double v : f.flat())
        if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(what) + ": confidence outside [0, 1]");
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double accuracy(const LabelMatrix& nu, const LabelMatrix& y) {
    check_pair(nu, y, "accuracy");
    if (nu.empty()) throw Error("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t e = 0; e < nu.size(); ++e) hits += nu.flat()[e] == y.flat()[e];
    return static_cast<double>(hits) / static_cast<double>(nu.size());
}

double f1(const LabelMatrix& nu, const LabelMatrix& y) {
    check_pair(nu, y, "f1");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t e = 0; e < nu.size(); ++e) {
        const bool p = nu.flat()[e] == 1, t = y.flat()[e] == 1;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    if (tp == 0) return 0.0;
    const double precision = tp / (tp + fp), recall = tp / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

std::optional<double> auc_roc(std::span<const double> scores, std::span<const Label> y) {
    if (scores.size() != y.size()) throw Error("auc_roc: length mismatch");
    // Rank-sum form of the pair count, with average ranks giving ties one half.
    const auto rank = average_ranks(scores);
    double pos = 0, rank_sum = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i]) {
            pos += 1;
            rank_sum += rank[i];
        }
    const double neg = static_cast<double>(y.size()) - pos;
    if (pos == 0 || neg == 0) return std::nullopt;
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

std::optional<double> auc_roc(const Matrix<double>& scores, const LabelMatrix& y) {
    if (scores.extent(0) != y.extent(0) || scores.extent(1) != y.extent(1)) throw Error("auc_roc: shape mismatch");
    return auc_roc(scores.flat(), y.flat());
}

double brier(const Matrix<double>& f, const LabelMatrix& y) {
    check_confidence(f, y, "brier");
    if (f.empty()) throw Error("brier: empty input");
    double s = 0.0;
    for (std::size_t e = 0; e < f.size(); ++e) {
        const double d = f.flat()[e] - y.flat()[e];
        s += d * d;
    }
    return s / static_cast<double>(f.size());
}

std::vector<CalibrationBin> calibration_bins(const Matrix<double>& f, const LabelMatrix& y, const LabelMatrix& nu,
                                             std::size_t bins) {
    if (bins == 0) throw Error("ece: at least one bin is required");
    check_confidence(f, y, "ece");
    check_pair(nu, y, "ece");
    std::vector<CalibrationBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lo = static_cast<double>(b) / static_cast<double>(bins);
        out[b].hi = static_cast<double>(b + 1) / static_cast<double>(bins);
    }
    for (std::size_t e = 0; e < f.size(); ++e) {
        const double v = f.flat()[e];
        // Index of the (lo, hi] bin holding v; 0 joins the first bin.
        auto b = static_cast<std::size_t>(std::ceil(v * static_cast<double>(bins)));
        b = b == 0 ? 0 : std::min(b - 1, bins - 1);
        while (b > 0 && v <= out[b].lo) --b;
        while (b + 1 < bins && v > out[b].hi) ++b;
        out[b].count += 1;
        out[b].accuracy += nu.flat()[e] == y.flat()[e] ? 1.0 : 0.0;
        out[b].confidence += v;
    }
    for (auto& bin : out)
        if (bin.count) {
            bin.accuracy /= static_cast<double>(bin.count);
            bin.confidence /= static_cast<double>(bin.count);
        }
    return out;
}

double ece(const Matrix<double>& f, const LabelMatrix& y, const LabelMatrix& nu, std::size_t bins) {
    const auto table = calibration_bins(f, y, nu, bins);
    if (f.empty()) return 0.0;
    double total = 0.0;
    for (const auto& bin : table)
        total += static_cast<double>(bin.count) * std::abs(bin.accuracy - bin.confidence);
    return total / static_cast<double>(f.size());
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("spearman: length mismatch");
    if (a.size() < 2) return std::nullopt;
    const auto ra = average_ranks(a), rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0 || sbb == 0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

MetricRow evaluate(const LabelMatrix& nu, const Matrix<double>& score, const LabelMatrix& y,
                   const Matrix<double>* f_freq, const Matrix<double>* f_beta, std::size_t bins) {
    MetricRow row;
    row.accuracy = accuracy(nu, y);
    row.f1 = f1(nu, y);
    row.auc = auc_roc(score, y);
    row.n_instances = y.extent(0);
    row.bins = bins;
    if (f_freq) {
        row.brier_freq = brier(*f_freq, y);
        row.ece_freq = ece(*f_freq, y, nu, bins);
    }
    if (f_beta) {
        row.brier_beta = brier(*f_beta, y);
        row.ece_beta = ece(*f_beta, y, nu, bins);
    }
    return row;
}

}  // namespace crowdcertain::metrics
