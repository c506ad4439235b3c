#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "crowdcertain/ndarray.hpp"

namespace crowdcertain::sim {

enum class RhoMode {
    shared,      // one rho per instance, shared by every worker and class
    per_worker,  // independent rho per (instance, worker); decorrelates worker errors
};

// Synthesized crowd. labels(i, a, k) is worker a's answer for instance i, class k.
struct WorkerPanel {
    std::size_t workers = 0;
    Matrix<double> thresholds;  // M x K, per-worker per-class accuracy targets
    std::vector<double> rho;    // N (shared mode) or N*M (per-worker mode, row-major)
    LabelTensor labels;         // N x M x K
    std::uint64_t seed = 0;
    RhoMode rho_mode = RhoMode::shared;
};

// i.i.d. U(lo, hi) draws, M x K.
Matrix<double> draw_thresholds(std::size_t m, std::size_t k, double lo, double hi, std::uint64_t seed);

// Worker a keeps the true label of (i, k) when rho(i) <= threshold(a, k) and
// flips it otherwise.
WorkerPanel synthesize_labels(const LabelMatrix& truth, const Matrix<double>& thresholds, std::uint64_t seed,
                              RhoMode mode = RhoMode::shared);

// Rows (instance_id, worker_id, class_id, label).
void write_panel_csv(const WorkerPanel& panel, const std::filesystem::path& path);

}  // namespace crowdcertain::sim
