#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "crowdcertain/bench.hpp"
#include "crowdcertain/simulation.hpp"

namespace cc = crowdcertain;

namespace {

struct BenchArgs {
    cc::bench::RunConfig cfg;
    std::vector<std::string> workers{"3:7"};
    std::size_t seed_count = 3;
    std::vector<std::string> seed_list;
    std::string uncertainty = "std-dev";
    std::string strategy = "penalized";
    std::string penalty_reference = "eta";
    std::string threshold_mode = "youden";
    std::string rho_mode = "shared";
    std::string out = "results";
    bool quiet = false;
};

void add_bench_options(CLI::App& app, BenchArgs& a) {
    auto& cfg = a.cfg;
    app.add_option("--dataset,--datasets", cfg.datasets,
                   "Bundled names (gaussian, xor, iris, breast-cancer) or CSV paths")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--methods", cfg.methods, "Comma list of methods or 'all'")->delimiter(',');
    app.add_option("--workers", a.workers, "Worker counts, e.g. 3:7 or 3,5")->delimiter(',')->capture_default_str();
    app.add_option("--seeds", a.seed_count, "Number of seeds (0 .. N-1)")->capture_default_str();
    app.add_option("--seed-list", a.seed_list, "Explicit seeds, e.g. 0,1,2 (overrides --seeds)")->delimiter(',');
    app.add_option("--threshold-lo", cfg.threshold_lo, "Lower end of the worker accuracy range")
        ->capture_default_str();
    app.add_option("--threshold-hi", cfg.threshold_hi, "Upper end of the worker accuracy range")
        ->capture_default_str();
    app.add_option("--uncertainty", a.uncertainty, "std-dev | entropy | committee-var | pred-interval | conformal")
        ->capture_default_str();
    app.add_option("--interval-gamma", cfg.uncertainty_params.interval_gamma, "Coverage of the predictive interval")
        ->capture_default_str();
    app.add_option("--conformal-threshold", cfg.uncertainty_params.conformal_threshold,
                   "Nonconformity threshold of the conformal measure")
        ->capture_default_str();
    app.add_option("--strategy", a.strategy, "penalized | no-penalty")->capture_default_str();
    app.add_option("--penalty-reference", a.penalty_reference, "eta | z")->capture_default_str();
    app.add_option("--folds", cfg.folds, "Cross-validation folds")->capture_default_str();
    app.add_option("--classifiers", cfg.ensemble.g_ensembles, "Classifiers per worker")->capture_default_str();
    app.add_option("--trees", cfg.ensemble.trees_per_forest, "Trees per classifier")->capture_default_str();
    app.add_option("--max-depth", cfg.ensemble.max_depth, "Tree depth")->capture_default_str();
    app.add_option("--min-leaf", cfg.ensemble.min_leaf, "Minimum samples per leaf")->capture_default_str();
    app.add_option("--threshold-mode", a.threshold_mode, "youden | fixed")->capture_default_str();
    app.add_option("--ece-bins", cfg.ece_bins, "ECE bin count")->capture_default_str();
    app.add_option("--rho-mode", a.rho_mode, "shared | per-worker")->capture_default_str();
    app.add_option("--em-iters", cfg.hyper.em_iters, "EM / iteration budget")->capture_default_str();
    app.add_option("--tol", cfg.hyper.tol, "Dawid-Skene convergence tolerance")->capture_default_str();
    app.add_option("--kos-iters", cfg.hyper.kos_iters, "KOS message-passing rounds")->capture_default_str();
    app.add_option("--glad-step", cfg.hyper.glad_step, "GLAD gradient step")->capture_default_str();
    app.add_option("--mmsr-iters", cfg.hyper.mmsr_iters, "MMSR completion iterations")->capture_default_str();
    app.add_option("--gold-fraction", cfg.hyper.gold_fraction, "Gold split for gold-mv")->capture_default_str();
    app.add_option("--tao-folds", cfg.hyper.tao_folds, "Cross-validation folds for Tao")->capture_default_str();
    app.add_option("--label-column", cfg.columns.label_columns, "Label column(s) of CSV datasets")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--feature-columns", cfg.columns.feature_columns, "Feature columns of CSV datasets")
        ->delimiter(',');
    app.add_option("--positive-values", cfg.columns.positive_values, "Label values mapped to 1")->delimiter(',');
    app.add_option("--negative-values", cfg.columns.negative_values, "Label values mapped to 0 (others dropped)")
        ->delimiter(',');
    app.add_flag("--write-labels", cfg.write_labels, "Also write the synthesized crowd labels");
    app.add_flag("--write-predictions", cfg.write_predictions,
                 "Also write per-instance labels and confidences of every method");
    app.add_option("--jobs,-j", cfg.jobs, "Parallel cells")->capture_default_str();
    app.add_option("--out,-o", a.out, "Output directory")->capture_default_str();
    app.add_flag("--quiet,-q", a.quiet, "No progress lines");
}

std::string join_list(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
    return out;
}

void finalize(BenchArgs& a) {
    auto& cfg = a.cfg;
    cfg.worker_counts = cc::bench::parse_index_list(join_list(a.workers));
    cfg.seeds.clear();
    if (!a.seed_list.empty()) {
        for (auto s : cc::bench::parse_index_list(join_list(a.seed_list))) cfg.seeds.push_back(s);
    } else {
        for (std::size_t s = 0; s < a.seed_count; ++s) cfg.seeds.push_back(s);
    }
    cfg.measure = cc::uncertainty::parse_measure(a.uncertainty);
    cfg.strategy = cc::core::parse_strategy(a.strategy);
    cfg.penalty_reference = cc::core::parse_penalty_reference(a.penalty_reference);
    if (a.threshold_mode == "youden") {
        cfg.threshold_mode = cc::ensemble::ThresholdMode::roc_youden;
    } else if (a.threshold_mode == "fixed") {
        cfg.threshold_mode = cc::ensemble::ThresholdMode::fixed_half;
    } else {
        throw cc::Error("unknown threshold mode: " + a.threshold_mode);
    }
    if (a.rho_mode == "shared") {
        cfg.rho_mode = cc::sim::RhoMode::shared;
    } else if (a.rho_mode == "per-worker") {
        cfg.rho_mode = cc::sim::RhoMode::per_worker;
    } else {
        throw cc::Error("unknown rho mode: " + a.rho_mode);
    }
    cfg.out_dir = a.out;
}

int run_bench(BenchArgs& a) {
    finalize(a);
    auto progress = [&](const std::string& line) {
        if (!a.quiet) std::cerr << line << "\n";
    };
    const auto report = cc::bench::run_benchmark(a.cfg, progress);
    cc::bench::write_report(report, a.cfg.out_dir);
    if (!a.quiet) std::cerr << "wrote " << report.rows.size() << " rows to " << a.cfg.out_dir.string() << "\n";
    if (report.any_error()) {
        std::cerr << "some cells failed; see the error column of results.csv\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowd label aggregation benchmark"};
    app.require_subcommand(1);
    // Config files are only read by the top-level app; bench forwards --config to it.
    app.set_config("--config", "", "Read bench options from an INI file (the config.ini written by a previous run)");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Run the dataset x method x workers x seed sweep");
    add_bench_options(*bench_cmd, bench);
    bench_cmd->fallthrough();

    std::string plot_run, plot_kind, plot_out;
    auto* plot_cmd = app.add_subcommand("plot-data", "Emit tidy CSV for plotting from a finished run");
    plot_cmd->add_option("--run", plot_run, "Output directory of a bench run")->required();
    plot_cmd->add_option("--kind", plot_kind, "weights_vs_threshold | metric_boxplot | calibration_heatmap")
        ->required();
    plot_cmd->add_option("--out,-o", plot_out, "Destination CSV (default <run>/plot_<kind>.csv)");

    std::string sim_dataset = "gaussian", sim_out = "panel.csv", sim_rho = "shared";
    std::size_t sim_workers = 3;
    std::uint64_t sim_seed = 0;
    double sim_lo = 0.4, sim_hi = 1.0;
    cc::data::ColumnSpec sim_columns;
    auto* sim_cmd = app.add_subcommand("simulate", "Write a synthesized crowd-label panel for one dataset");
    sim_cmd->add_option("--dataset", sim_dataset, "Bundled name or CSV path")->capture_default_str();
    sim_cmd->add_option("--workers", sim_workers, "Number of workers")->capture_default_str();
    sim_cmd->add_option("--seed", sim_seed, "Seed")->capture_default_str();
    sim_cmd->add_option("--threshold-lo", sim_lo)->capture_default_str();
    sim_cmd->add_option("--threshold-hi", sim_hi)->capture_default_str();
    sim_cmd->add_option("--rho-mode", sim_rho, "shared | per-worker")->capture_default_str();
    sim_cmd->add_option("--label-column", sim_columns.label_columns)->delimiter(',');
    sim_cmd->add_option("--positive-values", sim_columns.positive_values)->delimiter(',');
    sim_cmd->add_option("--negative-values", sim_columns.negative_values)->delimiter(',');
    sim_cmd->add_option("--out,-o", sim_out, "Panel CSV path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bench_cmd) return run_bench(bench);
        if (*plot_cmd) {
            const auto kind = cc::bench::parse_plot_kind(plot_kind);
            const std::filesystem::path out =
                plot_out.empty() ? std::filesystem::path(plot_run) / ("plot_" + cc::bench::to_string(kind) + ".csv")
                                 : std::filesystem::path(plot_out);
            cc::bench::emit_plot_data(cc::bench::load_report(plot_run), kind, out);
            std::cerr << "wrote " << out.string() << "\n";
            return 0;
        }
        if (*sim_cmd) {
            const auto ds = cc::data::resolve_dataset(sim_dataset, sim_columns);
            const auto pi = cc::sim::draw_thresholds(sim_workers, ds.n_classes(), sim_lo, sim_hi, sim_seed);
            const auto mode = sim_rho == "per-worker" ? cc::sim::RhoMode::per_worker : cc::sim::RhoMode::shared;
            const auto panel = cc::sim::synthesize_labels(ds.truth, pi, sim_seed, mode);
            cc::sim::write_panel_csv(panel, sim_out);
            for (std::size_t a = 0; a < panel.workers; ++a)
                for (std::size_t c = 0; c < ds.n_classes(); ++c)
                    std::printf("worker %zu class %zu pi %.6f\n", a, c, pi(a, c));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
