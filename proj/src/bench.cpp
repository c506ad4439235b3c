#include "crowdcertain/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <span>
#include <thread>

#include "crowdcertain/confidence.hpp"

namespace crowdcertain::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_exact(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// CSV fields written here never need quoting; anything that could break a
// row is replaced.
std::string clean(std::string s) {
    for (auto& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ch == ',' ? ';' : ' ';
    return s;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

template <class T>
T parse_number(std::string_view text, const char* what) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw Error(std::string("cannot parse ") + what + ": '" + std::string(text) + "'");
    return value;
}

std::optional<double> parse_optional(std::string_view text) {
    if (text.empty()) return std::nullopt;
    if (text == "inf") return std::numeric_limits<double>::infinity();
    return parse_number<double>(text, "number");
}

std::array<std::optional<double>, 8> metric_values(const ResultRow& row) {
    std::array<std::optional<double>, 8> v{};
    if (row.metrics) {
        const auto& m = *row.metrics;
        v = {m.accuracy, m.f1, m.auc, m.brier_freq, m.brier_beta, m.ece_freq, m.ece_beta, row.runtime_ms};
    }
    return v;
}

constexpr std::array<const char*, 8> kMetricNames{"accuracy",       "f1",       "auc",      "brier_mse_freq",
                                                  "brier_mse_beta", "ece_freq", "ece_beta", "runtime_ms"};

std::string threshold_mode_name(ensemble::ThresholdMode m) {
    return m == ensemble::ThresholdMode::roc_youden ? "youden" : "fixed";
}

std::string rho_mode_name(sim::RhoMode m) { return m == sim::RhoMode::shared ? "shared" : "per-worker"; }

std::string seeds_text(const std::vector<std::uint64_t>& seeds) {
    std::vector<std::string> parts;
    for (auto s : seeds) parts.push_back(std::to_string(s));
    return join(parts, ",");
}

std::string sizes_text(const std::vector<std::size_t>& v) {
    std::vector<std::string> parts;
    for (auto s : v) parts.push_back(std::to_string(s));
    return join(parts, ",");
}

void error_rows(const std::string& dataset, const std::string& method, const Cell& cell, std::size_t folds,
                const std::string& message, std::vector<ResultRow>& rows) {
    for (std::size_t f = 0; f < folds; ++f) {
        ResultRow r;
        r.dataset = dataset;
        r.method = method;
        r.workers = cell.workers;
        r.seed = cell.seed;
        r.fold = f;
        r.error = clean(message);
        rows.push_back(std::move(r));
    }
}

void add_predictions(const data::Dataset& ds, const std::string& method, const Cell& cell, std::size_t fold,
                     std::span<const std::size_t> test, const LabelMatrix& nu, const Matrix<double>& score,
                     const Matrix<double>* f_freq, const Matrix<double>* f_beta, std::vector<PredictionRow>& out) {
    for (std::size_t t = 0; t < test.size(); ++t)
        for (std::size_t c = 0; c < ds.n_classes(); ++c) {
            PredictionRow p;
            p.dataset = ds.name;
            p.method = method;
            p.workers = cell.workers;
            p.seed = cell.seed;
            p.fold = fold;
            p.instance = test[t];
            p.cls = c;
            p.truth = ds.truth(test[t], c);
            p.nu = nu(t, c);
            p.score = score(t, c);
            if (f_freq) p.f_freq = (*f_freq)(t, c);
            if (f_beta) p.f_beta = (*f_beta)(t, c);
            out.push_back(std::move(p));
        }
}

void crowd_certain_rows(const RunConfig& cfg, const data::Dataset& ds, const sim::WorkerPanel& panel,
                        const data::FoldPlan& folds, const Cell& cell, CellOutput& out) {
    const std::size_t m = cell.workers, k = ds.n_classes();
    const std::array<core::ConsistencyMode, 2> modes{core::ConsistencyMode::penalized,
                                                     core::ConsistencyMode::no_penalty};
    std::array<Matrix<double>, 2> mean_omega{Matrix<double>({m, k}), Matrix<double>({m, k})};
    std::array<Matrix<double>, 2> mean_psi{Matrix<double>({m, k}), Matrix<double>({m, k})};
    std::vector<ResultRow> rows;
    std::vector<PredictionRow> predictions;
    const auto share = 1.0 / static_cast<double>(folds.k_folds);
    for (std::size_t f = 0; f < folds.k_folds; ++f) {
        const auto start = Clock::now();
        const auto train = folds.train_indices(f), test = folds.test_indices(f);
        const auto x_train = data::select_rows(ds.features, train);
        const auto x_test = data::select_rows(ds.features, test);
        const auto z_train = data::select_rows(panel.labels, train);
        const auto y_test = data::select_rows(ds.truth, test);

        const auto ensembles = ensemble::WorkerEnsembles::train(x_train, z_train, cfg.ensemble, cfg.threshold_mode);
        const auto train_pred = ensembles.predict(x_train);
        const auto test_pred = ensembles.predict(x_test);

        core::Options options{cfg.measure, cfg.uncertainty_params, cfg.strategy, cfg.penalty_reference};
        const auto w = core::estimate_weights(train_pred, options, &z_train);
        const auto agg = core::aggregate(test_pred.eta, w.omega);
        const auto conf = confidence::compute(test_pred.eta, w.omega, agg.nu);
        const auto row_metrics =
            metrics::evaluate(agg.nu, agg.weighted_score, y_test, &conf.f_freq, &conf.f_beta, cfg.ece_bins);
        const double runtime = elapsed_ms(start);

        for (std::size_t v = 0; v < modes.size(); ++v) {
            options.mode = modes[v];
            const auto wv = modes[v] == cfg.strategy ? w : core::estimate_weights(train_pred, options, &z_train);
            for (std::size_t e = 0; e < wv.omega.size(); ++e) {
                mean_omega[v].flat()[e] += wv.omega.flat()[e] * share;
                mean_psi[v].flat()[e] += wv.psi.flat()[e] * share;
            }
        }
        ResultRow r;
        r.dataset = ds.name;
        r.method = std::string(kCrowdCertain);
        r.workers = m;
        r.seed = cell.seed;
        r.fold = f;
        r.metrics = row_metrics;
        r.runtime_ms = runtime;
        rows.push_back(std::move(r));
        if (cfg.write_predictions)
            add_predictions(ds, std::string(kCrowdCertain), cell, f, test, agg.nu, agg.weighted_score, &conf.f_freq,
                            &conf.f_beta, predictions);
    }
    std::move(rows.begin(), rows.end(), std::back_inserter(out.rows));
    std::move(predictions.begin(), predictions.end(), std::back_inserter(out.predictions));
    for (std::size_t v = 0; v < modes.size(); ++v)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < k; ++c)
                out.weights.push_back({ds.name, m, cell.seed,
                                       std::string(kCrowdCertain) + "-" + core::to_string(modes[v]), a, c,
                                       panel.thresholds(a, c), mean_psi[v](a, c), mean_omega[v](a, c)});
}

void baseline_rows(const RunConfig& cfg, const data::Dataset& ds, const sim::WorkerPanel& panel,
                   const data::FoldPlan& folds, const Cell& cell, baselines::Method method, CellOutput& out) {
    auto hp = cfg.hyper;
    hp.seed = cell.seed;
    const auto start = Clock::now();
    const auto result = baselines::run(method, panel.labels, ds.features, ds.truth, hp);
    const double per_fold = elapsed_ms(start) / static_cast<double>(folds.k_folds);
    const auto name = baselines::to_string(method);
    std::vector<ResultRow> rows;
    std::vector<PredictionRow> predictions;
    for (std::size_t f = 0; f < folds.k_folds; ++f) {
        const auto test = folds.test_indices(f);
        const auto nu = data::select_rows(result.nu, test);
        const auto score = data::select_rows(result.score, test);
        const auto y = data::select_rows(ds.truth, test);
        ResultRow r;
        r.dataset = ds.name;
        r.method = name;
        r.workers = cell.workers;
        r.seed = cell.seed;
        r.fold = f;
        std::optional<Matrix<double>> ff, fb;
        if (result.confidence) {
            ff = data::select_rows(result.confidence->f_freq, test);
            fb = data::select_rows(result.confidence->f_beta, test);
        }
        const auto* pf = ff ? &*ff : nullptr;
        const auto* pb = fb ? &*fb : nullptr;
        r.metrics = metrics::evaluate(nu, score, y, pf, pb, cfg.ece_bins);
        r.runtime_ms = per_fold;
        rows.push_back(std::move(r));
        if (cfg.write_predictions) add_predictions(ds, name, cell, f, test, nu, score, pf, pb, predictions);
    }
    std::move(rows.begin(), rows.end(), std::back_inserter(out.rows));
    std::move(predictions.begin(), predictions.end(), std::back_inserter(out.predictions));
    if (method == baselines::Method::tao)
        for (std::size_t a = 0; a < cell.workers; ++a)
            for (std::size_t c = 0; c < ds.n_classes(); ++c)
                out.weights.push_back({ds.name, cell.workers, cell.seed, "tao", a, c, panel.thresholds(a, c),
                                       std::nullopt, result.worker_scores(a, c)});
}

}  // namespace

std::vector<std::string> known_methods() {
    std::vector<std::string> out{std::string(kCrowdCertain)};
    for (auto m : baselines::standard_methods()) out.push_back(baselines::to_string(m));
    out.push_back(baselines::to_string(baselines::Method::gold_mv));
    return out;
}

std::vector<std::string> RunConfig::resolved_methods() const {
    std::vector<std::string> out;
    auto add = [&](const std::string& name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    };
    auto add_default = [&] {
        add(std::string(kCrowdCertain));
        for (auto m : baselines::standard_methods()) add(baselines::to_string(m));
    };
    if (methods.empty()) add_default();
    for (const auto& name : methods) {
        if (name == "all") {
            add_default();
        } else if (name == kCrowdCertain) {
            add(name);
        } else {
            add(baselines::to_string(baselines::parse_method(name)));
        }
    }
    return out;
}

void RunConfig::validate() const {
    if (datasets.empty()) throw Error("config: no datasets");
    if (worker_counts.empty()) throw Error("config: no worker counts");
    if (seeds.empty()) throw Error("config: no seeds");
    for (auto m : worker_counts)
        if (m < 1) throw Error("config: worker counts must be at least 1");
    if (!(threshold_lo >= 0.0 && threshold_lo < threshold_hi && threshold_hi <= 1.0))
        throw Error("config: threshold range must satisfy 0 <= lo < hi <= 1");
    if (folds < 2) throw Error("config: at least two folds are required");
    if (ece_bins < 1) throw Error("config: at least one ECE bin is required");
    if (jobs < 1) throw Error("config: jobs must be at least 1");
    ensemble.validate();
    (void)resolved_methods();
}

bool BenchmarkReport::any_error() const {
    return std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.error.empty(); });
}

std::vector<SummaryRow> BenchmarkReport::summary() const {
    std::vector<SummaryRow> out;
    std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> index;
    std::vector<std::array<std::size_t, 8>> counts;
    for (const auto& row : rows) {
        const auto key = std::make_tuple(row.dataset, row.method, row.workers);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            SummaryRow s;
            s.dataset = row.dataset;
            s.method = row.method;
            s.workers = row.workers;
            out.push_back(s);
            counts.push_back({});
        }
        auto& s = out[it->second];
        if (!row.metrics) continue;
        s.n_rows += 1;
        const auto v = metric_values(row);
        for (std::size_t j = 0; j < v.size(); ++j)
            if (v[j]) {
                s.means[j] = s.means[j].value_or(0.0) + *v[j];
                counts[it->second][j] += 1;
            }
    }
    for (std::size_t r = 0; r < out.size(); ++r)
        for (std::size_t j = 0; j < 8; ++j)
            if (out[r].means[j]) *out[r].means[j] /= static_cast<double>(counts[r][j]);
    return out;
}

CellOutput run_cell(const RunConfig& cfg, const data::Dataset& ds, const Cell& cell) {
    const auto methods = cfg.resolved_methods();
    CellOutput out;
    data::FoldPlan folds;
    try {
        const auto pi = sim::draw_thresholds(cell.workers, ds.n_classes(), cfg.threshold_lo, cfg.threshold_hi,
                                             cell.seed);
        out.panel = sim::synthesize_labels(ds.truth, pi, cell.seed, cfg.rho_mode);
        folds = data::make_folds(ds.n(), cfg.folds, cell.seed);
    } catch (const std::exception& e) {
        for (const auto& m : methods) error_rows(ds.name, m, cell, cfg.folds, e.what(), out.rows);
        return out;
    }
    for (const auto& name : methods) {
        // Each method writes into its own scratch output so a failure leaves no partial rows.
        CellOutput scratch;
        try {
            if (name == kCrowdCertain) {
                crowd_certain_rows(cfg, ds, out.panel, folds, cell, scratch);
            } else {
                baseline_rows(cfg, ds, out.panel, folds, cell, baselines::parse_method(name), scratch);
            }
        } catch (const std::exception& e) {
            scratch = CellOutput{};
            error_rows(ds.name, name, cell, folds.k_folds, e.what(), scratch.rows);
        }
        std::move(scratch.rows.begin(), scratch.rows.end(), std::back_inserter(out.rows));
        std::move(scratch.weights.begin(), scratch.weights.end(), std::back_inserter(out.weights));
        std::move(scratch.predictions.begin(), scratch.predictions.end(), std::back_inserter(out.predictions));
    }
    return out;
}

BenchmarkReport run_benchmark(const RunConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    std::vector<data::Dataset> datasets;
    for (const auto& name : cfg.datasets) datasets.push_back(data::resolve_dataset(name, cfg.columns));

    std::vector<Cell> cells;
    for (std::size_t d = 0; d < datasets.size(); ++d)
        for (auto m : cfg.worker_counts)
            for (auto s : cfg.seeds) cells.push_back({d, m, s});

    std::vector<CellOutput> outputs(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            const auto start = Clock::now();
            const auto& cell = cells[c];
            auto& out = outputs[c];
            out = run_cell(cfg, datasets[cell.dataset], cell);
            if (progress) {
                const bool failed = std::any_of(out.rows.begin(), out.rows.end(),
                                                [](const ResultRow& r) { return !r.error.empty(); });
                std::ostringstream line;
                line << "cell " << (c + 1) << "/" << cells.size() << " dataset=" << datasets[cell.dataset].name
                     << " workers=" << cell.workers << " seed=" << cell.seed << (failed ? " with errors" : "")
                     << " (" << static_cast<long>(elapsed_ms(start)) << " ms)";
                std::lock_guard lock(log_mutex);
                progress(line.str());
            }
        }
    };
    const std::size_t n_threads = std::min(cfg.jobs, std::max<std::size_t>(cells.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    BenchmarkReport report;
    report.config = cfg;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& out = outputs[c];
        std::move(out.rows.begin(), out.rows.end(), std::back_inserter(report.rows));
        std::move(out.weights.begin(), out.weights.end(), std::back_inserter(report.weights));
        std::move(out.predictions.begin(), out.predictions.end(), std::back_inserter(report.predictions));
        if (cfg.write_labels) {
            report.panel_keys.push_back(datasets[cells[c].dataset].name + "," + std::to_string(cells[c].workers) +
                                        "," + std::to_string(cells[c].seed));
            report.panels.push_back(std::move(out.panel));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Persistence

std::vector<std::string> result_columns() {
    return {"dataset",        "method",         "workers",  "seed",     "fold",       "accuracy", "f1", "auc",
            "brier_mse_freq", "brier_mse_beta", "ece_freq", "ece_beta", "runtime_ms", "error"};
}

std::string metadata_json(const RunConfig& cfg) {
    using nlohmann::ordered_json;
    ordered_json meta;
    meta["artifact"] = "crowdcertain";
    meta["version"] = std::string(kVersion);
    ordered_json c;
    c["datasets"] = cfg.datasets;
    c["methods"] = cfg.resolved_methods();
    c["worker_counts"] = cfg.worker_counts;
    c["seeds"] = cfg.seeds;
    c["threshold_range"] = {cfg.threshold_lo, cfg.threshold_hi};
    c["uncertainty"] = uncertainty::to_string(cfg.measure);
    c["interval_gamma"] = cfg.uncertainty_params.interval_gamma;
    c["conformal_threshold"] = cfg.uncertainty_params.conformal_threshold;
    c["strategy"] = core::to_string(cfg.strategy);
    c["penalty_reference"] = core::to_string(cfg.penalty_reference);
    c["folds"] = cfg.folds;
    c["ensemble"] = {{"classifiers_per_worker", cfg.ensemble.g_ensembles},
                     {"trees_per_forest", cfg.ensemble.trees_per_forest},
                     {"max_depth", cfg.ensemble.max_depth},
                     {"min_leaf", cfg.ensemble.min_leaf},
                     {"threshold_mode", threshold_mode_name(cfg.threshold_mode)}};
    c["ece_bins"] = cfg.ece_bins;
    c["rho_mode"] = rho_mode_name(cfg.rho_mode);
    c["label_columns"] = cfg.columns.label_columns;
    c["feature_columns"] = cfg.columns.feature_columns;
    c["positive_values"] = cfg.columns.positive_values;
    c["negative_values"] = cfg.columns.negative_values;
    meta["config"] = c;
    const auto& hp = cfg.hyper;
    const std::string tol = std::isinf(hp.tol) ? "inf" : fmt_exact(hp.tol);
    ordered_json h;
    h["mace"] = {{"em_iters", hp.em_iters}, {"init_competence", 0.5}, {"init_jitter", 0.01}};
    h["glad"] = {{"em_iters", hp.em_iters}, {"step", hp.glad_step}, {"inner_steps", 10}};
    h["dawid-skene"] = {{"em_iters", hp.em_iters}, {"tol", tol}, {"smoothing", 1}};
    h["zbs"] = {{"max_iters", hp.em_iters}};
    h["kos"] = {{"iters", hp.kos_iters}, {"init", "normal(1, 1)"}};
    h["mmsr"] = {{"iters", hp.mmsr_iters}, {"skill_clip", 1e-4}};
    h["tao"] = {{"cv_folds", hp.tao_folds},
                {"trees_per_forest", hp.tao_forest.trees_per_forest},
                {"max_depth", hp.tao_forest.max_depth}};
    h["gold-mv"] = {{"gold_fraction", hp.gold_fraction}};
    meta["hyperparameters"] = h;
    auto outputs = nlohmann::ordered_json::array({"results.csv", "summary.csv", "weights.csv", "config.ini"});
    if (cfg.write_labels) outputs.push_back("labels.csv");
    if (cfg.write_predictions) outputs.push_back("predictions.csv");
    meta["outputs"] = outputs;
    return meta.dump(2) + "\n";
}

std::string config_ini(const RunConfig& cfg) {
    std::ostringstream o;
    o << "# crowdcertain bench configuration (re-run with: crowdcertain bench --config <this file>)\n";
    o << "[bench]\n";
    o << "datasets=" << join(cfg.datasets, ",") << "\n";
    o << "methods=" << join(cfg.resolved_methods(), ",") << "\n";
    o << "workers=" << sizes_text(cfg.worker_counts) << "\n";
    o << "seed-list=" << seeds_text(cfg.seeds) << "\n";
    o << "threshold-lo=" << fmt_exact(cfg.threshold_lo) << "\n";
    o << "threshold-hi=" << fmt_exact(cfg.threshold_hi) << "\n";
    o << "uncertainty=" << uncertainty::to_string(cfg.measure) << "\n";
    o << "interval-gamma=" << fmt_exact(cfg.uncertainty_params.interval_gamma) << "\n";
    o << "conformal-threshold=" << fmt_exact(cfg.uncertainty_params.conformal_threshold) << "\n";
    o << "strategy=" << core::to_string(cfg.strategy) << "\n";
    o << "penalty-reference=" << core::to_string(cfg.penalty_reference) << "\n";
    o << "folds=" << cfg.folds << "\n";
    o << "classifiers=" << cfg.ensemble.g_ensembles << "\n";
    o << "trees=" << cfg.ensemble.trees_per_forest << "\n";
    o << "max-depth=" << cfg.ensemble.max_depth << "\n";
    o << "min-leaf=" << cfg.ensemble.min_leaf << "\n";
    o << "threshold-mode=" << threshold_mode_name(cfg.threshold_mode) << "\n";
    o << "ece-bins=" << cfg.ece_bins << "\n";
    o << "rho-mode=" << rho_mode_name(cfg.rho_mode) << "\n";
    o << "em-iters=" << cfg.hyper.em_iters << "\n";
    o << "tol=" << fmt_exact(cfg.hyper.tol) << "\n";
    o << "kos-iters=" << cfg.hyper.kos_iters << "\n";
    o << "glad-step=" << fmt_exact(cfg.hyper.glad_step) << "\n";
    o << "mmsr-iters=" << cfg.hyper.mmsr_iters << "\n";
    o << "gold-fraction=" << fmt_exact(cfg.hyper.gold_fraction) << "\n";
    o << "tao-folds=" << cfg.hyper.tao_folds << "\n";
    o << "label-column=" << join(cfg.columns.label_columns, ",") << "\n";
    if (!cfg.columns.feature_columns.empty())
        o << "feature-columns=" << join(cfg.columns.feature_columns, ",") << "\n";
    if (!cfg.columns.positive_values.empty())
        o << "positive-values=" << join(cfg.columns.positive_values, ",") << "\n";
    if (!cfg.columns.negative_values.empty())
        o << "negative-values=" << join(cfg.columns.negative_values, ",") << "\n";
    o << "write-labels=" << (cfg.write_labels ? "true" : "false") << "\n";
    o << "write-predictions=" << (cfg.write_predictions ? "true" : "false") << "\n";
    return o.str();
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("results.csv");
        f << join(result_columns(), ",") << "\n";
        for (const auto& r : report.rows) {
            const auto v = metric_values(r);
            f << clean(r.dataset) << "," << r.method << "," << r.workers << "," << r.seed << "," << r.fold;
            for (std::size_t j = 0; j < 7; ++j) f << "," << fmt(v[j]);
            f << "," << (r.metrics ? fmt(r.runtime_ms) : std::string()) << "," << r.error << "\n";
        }
    }
    {
        auto f = open("summary.csv");
        f << "dataset,method,workers,n_rows";
        for (auto name : kMetricNames) f << "," << name;
        f << "\n";
        for (const auto& s : report.summary()) {
            f << clean(s.dataset) << "," << s.method << "," << s.workers << "," << s.n_rows;
            for (const auto& v : s.means) f << "," << fmt(v);
            f << "\n";
        }
    }
    {
        auto f = open("weights.csv");
        f << "dataset,workers,seed,method,worker,class,pi,psi,omega\n";
        for (const auto& w : report.weights)
            f << clean(w.dataset) << "," << w.workers << "," << w.seed << "," << w.method << "," << w.worker << ","
              << w.cls << "," << fmt(w.pi) << "," << fmt(w.psi) << "," << fmt(w.omega) << "\n";
    }
    if (report.config.write_predictions) {
        auto f = open("predictions.csv");
        f << "dataset,method,workers,seed,fold,instance_id,class_id,truth,nu,score,f_freq,f_beta\n";
        for (const auto& p : report.predictions)
            f << clean(p.dataset) << "," << p.method << "," << p.workers << "," << p.seed << "," << p.fold << ","
              << p.instance << "," << p.cls << "," << int(p.truth) << "," << int(p.nu) << "," << fmt(p.score) << ","
              << fmt(p.f_freq) << "," << fmt(p.f_beta) << "\n";
    }
    open("metadata.json") << metadata_json(report.config);
    open("config.ini") << config_ini(report.config);
    if (report.config.write_labels) {
        auto f = open("labels.csv");
        f << "dataset,workers,seed,instance_id,worker_id,class_id,label\n";
        for (std::size_t p = 0; p < report.panels.size(); ++p) {
            const auto& labels = report.panels[p].labels;
            for (std::size_t i = 0; i < labels.extent(0); ++i)
                for (std::size_t a = 0; a < labels.extent(1); ++a)
                    for (std::size_t c = 0; c < labels.extent(2); ++c)
                        f << report.panel_keys[p] << "," << i << "," << a << "," << c << ","
                          << static_cast<int>(labels(i, a, c)) << "\n";
        }
    }
}

BenchmarkReport load_report(const std::filesystem::path& dir) {
    BenchmarkReport report;
    std::ifstream results(dir / "results.csv");
    if (!results) throw Error("cannot read " + (dir / "results.csv").string());
    std::string line;
    std::getline(results, line);
    if (split(line, ',') != result_columns()) throw Error("results.csv: unexpected header");
    while (std::getline(results, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 14) throw Error("results.csv: malformed row: " + line);
        ResultRow r;
        r.dataset = f[0];
        r.method = f[1];
        r.workers = parse_number<std::size_t>(f[2], "workers");
        r.seed = parse_number<std::uint64_t>(f[3], "seed");
        r.fold = parse_number<std::size_t>(f[4], "fold");
        r.error = f[13];
        if (!f[5].empty()) {
            metrics::MetricRow m;
            m.accuracy = *parse_optional(f[5]);
            m.f1 = parse_optional(f[6]).value_or(0.0);
            m.auc = parse_optional(f[7]);
            m.brier_freq = parse_optional(f[8]);
            m.brier_beta = parse_optional(f[9]);
            m.ece_freq = parse_optional(f[10]);
            m.ece_beta = parse_optional(f[11]);
            r.metrics = m;
            r.runtime_ms = parse_optional(f[12]).value_or(0.0);
        }
        report.rows.push_back(std::move(r));
    }
    std::ifstream weights(dir / "weights.csv");
    if (weights) {
        std::getline(weights, line);
        while (std::getline(weights, line)) {
            if (line.empty()) continue;
            const auto f = split(line, ',');
            if (f.size() != 9) throw Error("weights.csv: malformed row: " + line);
            report.weights.push_back({f[0], parse_number<std::size_t>(f[1], "workers"),
                                      parse_number<std::uint64_t>(f[2], "seed"), f[3],
                                      parse_number<std::size_t>(f[4], "worker"),
                                      parse_number<std::size_t>(f[5], "class"), *parse_optional(f[6]),
                                      parse_optional(f[7]), *parse_optional(f[8])});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Plot data

PlotKind parse_plot_kind(std::string_view name) {
    if (name == "weights_vs_threshold" || name == "weights-vs-threshold") return PlotKind::weights_vs_threshold;
    if (name == "metric_boxplot" || name == "metric-boxplot") return PlotKind::metric_boxplot;
    if (name == "calibration_heatmap" || name == "calibration-heatmap") return PlotKind::calibration_heatmap;
    throw Error("unknown plot kind: " + std::string(name));
}

std::string to_string(PlotKind kind) {
    switch (kind) {
        case PlotKind::weights_vs_threshold: return "weights_vs_threshold";
        case PlotKind::metric_boxplot: return "metric_boxplot";
        case PlotKind::calibration_heatmap: return "calibration_heatmap";
    }
    return "?";
}

void emit_plot_data(const BenchmarkReport& report, PlotKind kind, const std::filesystem::path& path) {
    if (report.rows.empty()) throw Error("plot data: the report has no rows");
    std::ostringstream o;
    if (kind == PlotKind::weights_vs_threshold) {
        if (report.weights.empty()) throw Error("plot data: the report has no weights (run crowd-certain or tao)");
        o << "dataset,workers,seed,method,worker,class,pi,psi,omega\n";
        for (const auto& w : report.weights)
            o << clean(w.dataset) << "," << w.workers << "," << w.seed << "," << w.method << "," << w.worker << ","
              << w.cls << "," << fmt(w.pi) << "," << fmt(w.psi) << "," << fmt(w.omega) << "\n";
    } else if (kind == PlotKind::metric_boxplot) {
        // Fold means per (dataset, method, workers, seed, metric).
        using Key = std::tuple<std::string, std::string, std::size_t, std::uint64_t>;
        std::vector<Key> order;
        std::map<Key, std::array<std::pair<double, std::size_t>, 7>> acc;
        for (const auto& r : report.rows) {
            if (!r.metrics) continue;
            Key key{r.dataset, r.method, r.workers, r.seed};
            if (!acc.count(key)) order.push_back(key);
            auto& slot = acc[key];
            const auto v = metric_values(r);
            for (std::size_t j = 0; j < 7; ++j)
                if (v[j]) {
                    slot[j].first += *v[j];
                    slot[j].second += 1;
                }
        }
        o << "dataset,method,workers,seed,metric,value\n";
        for (const auto& key : order) {
            const auto& slot = acc[key];
            for (std::size_t j = 0; j < 7; ++j)
                if (slot[j].second)
                    o << clean(std::get<0>(key)) << "," << std::get<1>(key) << "," << std::get<2>(key) << ","
                      << std::get<3>(key) << "," << kMetricNames[j] << ","
                      << fmt(slot[j].first / static_cast<double>(slot[j].second)) << "\n";
        }
    } else {
        o << "dataset,method,workers,metric,value\n";
        for (const auto& s : report.summary())
            for (std::size_t j = 3; j < 7; ++j)
                if (s.means[j])
                    o << clean(s.dataset) << "," << s.method << "," << s.workers << "," << kMetricNames[j] << ","
                      << fmt(*s.means[j]) << "\n";
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << o.str();
}

std::vector<std::size_t> parse_index_list(std::string_view text) {
    std::vector<std::size_t> out;
    for (const auto& part : split(text, ',')) {
        if (part.empty()) throw Error("empty entry in list '" + std::string(text) + "'");
        const auto colon = part.find(':');
        if (colon == std::string::npos) {
            out.push_back(parse_number<std::size_t>(part, "list entry"));
            continue;
        }
        const auto lo = parse_number<std::size_t>(std::string_view(part).substr(0, colon), "range start");
        const auto hi = parse_number<std::size_t>(std::string_view(part).substr(colon + 1), "range end");
        if (lo > hi) throw Error("descending range '" + part + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    if (out.empty()) throw Error("empty list");
    return out;
}

}  // namespace crowdcertain::bench
