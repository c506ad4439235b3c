#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcertain/baselines.hpp"
#include "crowdcertain/classifier_ensemble.hpp"
#include "crowdcertain/crowd_certain.hpp"
#include "crowdcertain/dataset_io.hpp"
#include "crowdcertain/metrics.hpp"
#include "crowdcertain/simulation.hpp"
#include "crowdcertain/uncertainty.hpp"

namespace crowdcertain::bench {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr std::string_view kCrowdCertain = "crowd-certain";

struct RunConfig {
    std::vector<std::string> datasets{"gaussian", "xor", "iris", "breast-cancer"};
    std::vector<std::string> methods;  // empty: crowd-certain plus the ten baselines
    std::vector<std::size_t> worker_counts{3, 4, 5, 6, 7};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    double threshold_lo = 0.4;
    double threshold_hi = 1.0;
    uncertainty::Measure measure = uncertainty::Measure::std_dev;
    uncertainty::Params uncertainty_params;
    core::ConsistencyMode strategy = core::ConsistencyMode::penalized;
    core::PenaltyReference penalty_reference = core::PenaltyReference::eta;
    std::size_t folds = 5;
    ensemble::ForestConfig ensemble;
    ensemble::ThresholdMode threshold_mode = ensemble::ThresholdMode::roc_youden;
    std::size_t ece_bins = 10;
    sim::RhoMode rho_mode = sim::RhoMode::shared;
    baselines::Hyperparameters hyper;  // its seed is replaced by the cell seed
    data::ColumnSpec columns;          // used for CSV paths only
    std::size_t jobs = 1;
    bool write_labels = false;
    bool write_predictions = false;
    std::filesystem::path out_dir = "results";

    // Canonical method names after expanding the default list and "all".
    std::vector<std::string> resolved_methods() const;
    void validate() const;
};

// Every method name accepted by --methods.
std::vector<std::string> known_methods();

struct ResultRow {
    std::string dataset;
    std::string method;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    std::optional<metrics::MetricRow> metrics;  // empty on error
    double runtime_ms = 0.0;
    std::string error;
};

// Per-cell worker weights next to the worker's simulated accuracy target.
struct WeightRow {
    std::string dataset;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    std::string method;
    std::size_t worker = 0;
    std::size_t cls = 0;
    double pi = 0.0;
    std::optional<double> psi;  // reliability before normalization (Crowd-Certain only)
    double omega = 0.0;
};

// Per held-out instance output of one method (written with write_predictions).
struct PredictionRow {
    std::string dataset;
    std::string method;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    std::size_t instance = 0;
    std::size_t cls = 0;
    Label truth = 0;
    Label nu = 0;
    double score = 0.0;
    std::optional<double> f_freq, f_beta;
};

struct SummaryRow {
    std::string dataset;
    std::string method;
    std::size_t workers = 0;
    std::size_t n_rows = 0;
    // accuracy, f1, auc, brier_mse_freq, brier_mse_beta, ece_freq, ece_beta, runtime_ms
    std::array<std::optional<double>, 8> means;
};

struct BenchmarkReport {
    RunConfig config;
    std::vector<ResultRow> rows;
    std::vector<WeightRow> weights;
    std::vector<PredictionRow> predictions;  // filled only with write_predictions
    std::vector<sim::WorkerPanel> panels;  // filled only with write_labels
    std::vector<std::string> panel_keys;   // "dataset,workers,seed" per panel

    bool any_error() const;
    std::vector<SummaryRow> summary() const;
};

using ProgressFn = std::function<void(const std::string&)>;

BenchmarkReport run_benchmark(const RunConfig& cfg, const ProgressFn& progress = {});

// One cell: every configured method on a (dataset, workers, seed) panel.
struct Cell {
    std::size_t dataset = 0;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
};
struct CellOutput {
    std::vector<ResultRow> rows;
    std::vector<WeightRow> weights;
    std::vector<PredictionRow> predictions;
    sim::WorkerPanel panel;
};
CellOutput run_cell(const RunConfig& cfg, const data::Dataset& dataset, const Cell& cell);

// results.csv, summary.csv, weights.csv, metadata.json, config.ini, plus
// labels.csv and predictions.csv when requested.
void write_report(const BenchmarkReport& report, const std::filesystem::path& dir);
// Reads results.csv and weights.csv back (metadata is not needed for plot data).
BenchmarkReport load_report(const std::filesystem::path& dir);

std::string metadata_json(const RunConfig& cfg);
std::string config_ini(const RunConfig& cfg);
std::vector<std::string> result_columns();

enum class PlotKind { weights_vs_threshold, metric_boxplot, calibration_heatmap };
PlotKind parse_plot_kind(std::string_view name);
std::string to_string(PlotKind kind);
void emit_plot_data(const BenchmarkReport& report, PlotKind kind, const std::filesystem::path& path);

// "3:7" -> 3..7, "3,5,7" -> {3, 5, 7}.
std::vector<std::size_t> parse_index_list(std::string_view text);

}  // namespace crowdcertain::bench
