#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "crowdcertain/baselines.hpp"
#include "crowdcertain/bench.hpp"
#include "crowdcertain/classifier_ensemble.hpp"
#include "crowdcertain/confidence.hpp"
#include "crowdcertain/crowd_certain.hpp"
#include "crowdcertain/dataset_io.hpp"
#include "crowdcertain/metrics.hpp"
#include "crowdcertain/simulation.hpp"
#include "crowdcertain/uncertainty.hpp"

namespace py = pybind11;
namespace cc = crowdcertain;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <class T, std::size_t R>
cc::NdArray<T, R> to_nd(const py::array_t<T, py::array::c_style | py::array::forcecast>& a, const char* what) {
    if (a.ndim() != static_cast<py::ssize_t>(R))
        throw cc::Error(std::string(what) + ": expected " + std::to_string(R) + " dimensions");
    typename cc::NdArray<T, R>::Shape shape{};
    for (std::size_t d = 0; d < R; ++d) shape[d] = static_cast<std::size_t>(a.shape(d));
    cc::NdArray<T, R> out(shape);
    std::copy(a.data(), a.data() + a.size(), out.flat().begin());
    return out;
}

template <class T, std::size_t R>
py::array_t<T> to_numpy(const cc::NdArray<T, R>& a) {
    std::vector<py::ssize_t> shape(a.shape().begin(), a.shape().end());
    py::array_t<T> out(shape);
    std::copy(a.flat().begin(), a.flat().end(), out.mutable_data());
    return out;
}

cc::LabelMatrix labels_2d(const LabelArray& a, const char* what) {
    if (a.ndim() == 1) {
        cc::LabelMatrix m({static_cast<std::size_t>(a.shape(0)), 1});
        std::copy(a.data(), a.data() + a.size(), m.flat().begin());
        return m;
    }
    return to_nd<std::uint8_t, 2>(a, what);
}

cc::Matrix<double> confidence_matrix(const DoubleArray& f) {
    if (f.ndim() == 1) {
        cc::Matrix<double> m({static_cast<std::size_t>(f.shape(0)), 1});
        std::copy(f.data(), f.data() + f.size(), m.flat().begin());
        return m;
    }
    return to_nd<double, 2>(f, "f");
}

cc::LabelTensor labels_3d(const LabelArray& a, const char* what) {
    if (a.ndim() == 2) {
        cc::LabelTensor t({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), 1});
        std::copy(a.data(), a.data() + a.size(), t.flat().begin());
        return t;
    }
    return to_nd<std::uint8_t, 3>(a, what);
}

py::dict confidence_dict(const cc::confidence::ConfidenceScores& c) {
    py::dict d;
    d["f_freq"] = to_numpy(c.f_freq);
    d["f_beta"] = to_numpy(c.f_beta);
    d["shape_l"] = to_numpy(c.shape_l);
    d["shape_u"] = to_numpy(c.shape_u);
    return d;
}

cc::ensemble::ForestConfig forest_config(std::size_t g, std::size_t trees, std::size_t depth) {
    cc::ensemble::ForestConfig cfg;
    cfg.g_ensembles = g;
    cfg.trees_per_forest = trees;
    cfg.max_depth = depth;
    return cfg;
}

cc::ensemble::ThresholdMode threshold_mode(const std::string& name) {
    if (name == "youden") return cc::ensemble::ThresholdMode::roc_youden;
    if (name == "fixed") return cc::ensemble::ThresholdMode::fixed_half;
    throw cc::Error("unknown threshold mode: " + name);
}

py::dict load_dataset(const std::string& name, const std::vector<std::string>& label_columns,
                      const std::vector<std::string>& positive_values,
                      const std::vector<std::string>& negative_values) {
    cc::data::ColumnSpec spec;
    if (!label_columns.empty()) spec.label_columns = label_columns;
    spec.positive_values = positive_values;
    spec.negative_values = negative_values;
    const auto ds = cc::data::resolve_dataset(name, spec);
    py::dict d;
    d["name"] = ds.name;
    d["features"] = to_numpy(ds.features);
    d["truth"] = to_numpy(ds.truth);
    d["feature_names"] = ds.feature_names;
    d["class_names"] = ds.class_names;
    return d;
}

py::dict simulate(const LabelArray& truth, std::size_t workers, std::uint64_t seed, double lo, double hi,
                  const std::string& rho_mode) {
    const auto y = labels_2d(truth, "truth");
    const auto pi = cc::sim::draw_thresholds(workers, y.extent(1), lo, hi, seed);
    const auto mode = rho_mode == "per-worker" ? cc::sim::RhoMode::per_worker : cc::sim::RhoMode::shared;
    if (rho_mode != "shared" && rho_mode != "per-worker") throw cc::Error("unknown rho mode: " + rho_mode);
    const auto panel = cc::sim::synthesize_labels(y, pi, seed, mode);
    py::dict d;
    d["thresholds"] = to_numpy(panel.thresholds);
    d["labels"] = to_numpy(panel.labels);
    return d;
}

py::dict crowd_certain(const DoubleArray& train_features, const LabelArray& train_labels,
                       const DoubleArray& test_features, const std::string& uncertainty, const std::string& strategy,
                       const std::string& penalty_reference, std::size_t classifiers, std::size_t trees,
                       std::size_t depth, const std::string& thresholds) {
    const auto x_train = to_nd<double, 2>(train_features, "train_features");
    const auto x_test = to_nd<double, 2>(test_features, "test_features");
    const auto z = labels_3d(train_labels, "train_labels");
    const auto ens = cc::ensemble::WorkerEnsembles::train(x_train, z, forest_config(classifiers, trees, depth),
                                                          threshold_mode(thresholds));
    const auto train_pred = ens.predict(x_train);
    const auto test_pred = ens.predict(x_test);
    cc::core::Options opt;
    opt.measure = cc::uncertainty::parse_measure(uncertainty);
    opt.mode = cc::core::parse_strategy(strategy);
    opt.reference = cc::core::parse_penalty_reference(penalty_reference);
    const auto w = cc::core::estimate_weights(train_pred, opt, &z);
    const auto agg = cc::core::aggregate(test_pred.eta, w.omega);
    const auto conf = cc::confidence::compute(test_pred.eta, w.omega, agg.nu);
    py::dict d = confidence_dict(conf);
    d["nu"] = to_numpy(agg.nu);
    d["weighted_score"] = to_numpy(agg.weighted_score);
    d["omega"] = to_numpy(w.omega);
    d["psi"] = to_numpy(w.psi);
    d["psi_overall"] = w.psi_overall;
    d["eta"] = to_numpy(test_pred.eta);
    return d;
}

py::dict baseline(const std::string& method, const LabelArray& labels, std::optional<DoubleArray> features,
                  std::optional<LabelArray> truth, std::uint64_t seed, std::size_t em_iters, double tol,
                  std::size_t kos_iters, double glad_step) {
    const auto z = labels_3d(labels, "labels");
    const auto m = cc::baselines::parse_method(method);
    cc::Matrix<double> x({z.extent(0), 0});
    if (features) x = to_nd<double, 2>(*features, "features");
    cc::LabelMatrix y({z.extent(0), z.extent(2)});
    if (truth) y = labels_2d(*truth, "truth");
    if (m == cc::baselines::Method::tao && !features) throw cc::Error("tao needs features");
    if (m == cc::baselines::Method::gold_mv && !truth) throw cc::Error("gold-mv needs truth");
    cc::baselines::Hyperparameters hp;
    hp.seed = seed;
    hp.em_iters = em_iters;
    hp.tol = tol;
    hp.kos_iters = kos_iters;
    hp.glad_step = glad_step;
    const auto r = cc::baselines::run(m, z, x, y, hp);
    py::dict d;
    d["method"] = cc::baselines::to_string(r.method);
    d["nu"] = to_numpy(r.nu);
    d["score"] = to_numpy(r.score);
    d["worker_scores"] = to_numpy(r.worker_scores);
    d["iterations_run"] = r.iterations_run;
    d["objective_trace"] = r.objective_trace;
    d["confidence"] = r.confidence ? py::object(confidence_dict(*r.confidence)) : py::object(py::none());
    return d;
}

py::object optional_value(const std::optional<double>& v) { return v ? py::object(py::float_(*v)) : py::none(); }

py::list run_bench(const std::vector<std::string>& datasets, const std::vector<std::string>& methods,
                   const std::vector<std::size_t>& workers, const std::vector<std::uint64_t>& seeds,
                   std::size_t folds, const std::string& uncertainty, const std::string& strategy, std::size_t jobs,
                   const std::string& out) {
    cc::bench::RunConfig cfg;
    cfg.datasets = datasets;
    cfg.methods = methods;
    cfg.worker_counts = workers;
    cfg.seeds = seeds;
    cfg.folds = folds;
    cfg.measure = cc::uncertainty::parse_measure(uncertainty);
    cfg.strategy = cc::core::parse_strategy(strategy);
    cfg.jobs = jobs;
    cfg.out_dir = out;
    cc::bench::BenchmarkReport report;
    {
        py::gil_scoped_release release;
        report = cc::bench::run_benchmark(cfg);
    }
    if (!out.empty()) cc::bench::write_report(report, out);
    py::list rows;
    for (const auto& s : report.summary()) {
        py::dict d;
        d["dataset"] = s.dataset;
        d["method"] = s.method;
        d["workers"] = s.workers;
        d["n_rows"] = s.n_rows;
        const char* names[] = {"accuracy", "f1", "auc", "brier_mse_freq", "brier_mse_beta",
                               "ece_freq", "ece_beta", "runtime_ms"};
        for (std::size_t j = 0; j < 8; ++j) d[names[j]] = optional_value(s.means[j]);
        rows.append(d);
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_crowdcertain, m) {
    m.doc() = "Crowd label aggregation with classifier-ensemble uncertainty";
    py::register_exception<cc::Error>(m, "Error", PyExc_ValueError);

    m.def("load_dataset", &load_dataset, py::arg("name"), py::arg("label_columns") = std::vector<std::string>{},
          py::arg("positive_values") = std::vector<std::string>{},
          py::arg("negative_values") = std::vector<std::string>{});
    m.def("bundled_datasets", &cc::data::bundled_names);
    m.def("simulate", &simulate, py::arg("truth"), py::arg("workers"), py::arg("seed") = 0, py::arg("lo") = 0.4,
          py::arg("hi") = 1.0, py::arg("rho_mode") = "shared");
    m.def("crowd_certain", &crowd_certain, py::arg("train_features"), py::arg("train_labels"),
          py::arg("test_features"), py::arg("uncertainty") = "std-dev", py::arg("strategy") = "penalized",
          py::arg("penalty_reference") = "eta", py::arg("classifiers") = 10, py::arg("trees") = 4,
          py::arg("max_depth") = 4, py::arg("thresholds") = "youden");
    m.def("baseline", &baseline, py::arg("method"), py::arg("labels"), py::arg("features") = py::none(),
          py::arg("truth") = py::none(), py::arg("seed") = 0, py::arg("em_iters") = 100, py::arg("tol") = 1e-6,
          py::arg("kos_iters") = 10, py::arg("glad_step") = 0.01);
    m.def("baseline_methods", [] {
        std::vector<std::string> out;
        for (auto method : cc::baselines::standard_methods()) out.push_back(cc::baselines::to_string(method));
        return out;
    });

    m.def("beta_confidence", &cc::confidence::beta_confidence, py::arg("l"), py::arg("u"));
    m.def(
        "freq_confidence",
        [](const LabelArray& votes, const DoubleArray& weights, std::uint8_t nu) {
            std::vector<cc::Label> v(votes.data(), votes.data() + votes.size());
            std::vector<double> w(weights.data(), weights.data() + weights.size());
            return cc::confidence::freq_confidence(v, w, nu);
        },
        py::arg("votes"), py::arg("weights"), py::arg("nu"));

    m.def(
        "accuracy",
        [](const LabelArray& nu, const LabelArray& y) {
            return cc::metrics::accuracy(labels_2d(nu, "nu"), labels_2d(y, "y"));
        },
        py::arg("nu"), py::arg("y"));
    m.def(
        "f1", [](const LabelArray& nu, const LabelArray& y) { return cc::metrics::f1(labels_2d(nu, "nu"), labels_2d(y, "y")); },
        py::arg("nu"), py::arg("y"));
    m.def(
        "auc_roc",
        [](const DoubleArray& scores, const LabelArray& y) {
            std::vector<double> s(scores.data(), scores.data() + scores.size());
            std::vector<cc::Label> l(y.data(), y.data() + y.size());
            return optional_value(cc::metrics::auc_roc(s, l));
        },
        py::arg("scores"), py::arg("y"));
    m.def(
        "brier",
        [](const DoubleArray& f, const LabelArray& y) {
            const auto fm = confidence_matrix(f);
            return cc::metrics::brier(fm, labels_2d(y, "y"));
        },
        py::arg("f"), py::arg("y"));
    m.def(
        "ece",
        [](const DoubleArray& f, const LabelArray& y, const LabelArray& nu, std::size_t bins) {
            const auto fm = confidence_matrix(f);
            return cc::metrics::ece(fm, labels_2d(y, "y"), labels_2d(nu, "nu"), bins);
        },
        py::arg("f"), py::arg("y"), py::arg("nu"), py::arg("bins") = 10);

    m.def("run_benchmark", &run_bench, py::arg("datasets"), py::arg("methods") = std::vector<std::string>{},
          py::arg("workers") = std::vector<std::size_t>{3}, py::arg("seeds") = std::vector<std::uint64_t>{0},
          py::arg("folds") = 5, py::arg("uncertainty") = "std-dev", py::arg("strategy") = "penalized",
          py::arg("jobs") = 1, py::arg("out") = "");
    m.attr("__version__") = std::string(cc::bench::kVersion);
}
