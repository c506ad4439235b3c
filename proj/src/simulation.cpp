#include "crowdcertain/simulation.hpp"

#include <fstream>

#include "crowdcertain/random.hpp"

namespace crowdcertain::sim {

Matrix<double> draw_thresholds(std::size_t m, std::size_t k, double lo, double hi, std::uint64_t seed) {
    if (m == 0) throw Error("draw_thresholds: need at least one worker");
    if (k == 0) throw Error("draw_thresholds: need at least one class");
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw Error("draw_thresholds: range must satisfy 0 <= lo < hi <= 1");
    Rng rng = Rng::substream(seed, "thresholds");
    Matrix<double> out({m, k});
    for (auto& v : out.flat()) v = rng.uniform(lo, hi);
    return out;
}

WorkerPanel synthesize_labels(const LabelMatrix& truth, const Matrix<double>& thresholds, std::uint64_t seed,
                              RhoMode mode) {
    const std::size_t n = truth.extent(0);
    const std::size_t k = truth.extent(1);
    const std::size_t m = thresholds.extent(0);
    if (thresholds.extent(1) != k)
        throw Error("synthesize_labels: thresholds have " + std::to_string(thresholds.extent(1)) +
                    " classes, dataset has " + std::to_string(k));

    WorkerPanel panel;
    panel.workers = m;
    panel.thresholds = thresholds;
    panel.seed = seed;
    panel.rho_mode = mode;
    panel.labels = LabelTensor({n, m, k});

    // The rho stream is independent of the threshold stream, so in shared
    // mode adding workers leaves every rho unchanged.
    Rng rng = Rng::substream(seed, "rho");
    const std::size_t per_instance = mode == RhoMode::shared ? 1 : m;
    panel.rho.resize(n * per_instance);
    for (auto& r : panel.rho) r = rng.uniform();

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) {
            const double rho = panel.rho[i * per_instance + (mode == RhoMode::shared ? 0 : a)];
            for (std::size_t c = 0; c < k; ++c) {
                const Label y = truth(i, c);
                panel.labels(i, a, c) = rho <= thresholds(a, c) ? y : static_cast<Label>(1 - y);
            }
        }
    return panel;
}

void write_panel_csv(const WorkerPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "instance_id,worker_id,class_id,label\n";
    const auto& z = panel.labels;
    for (std::size_t i = 0; i < z.extent(0); ++i)
        for (std::size_t a = 0; a < z.extent(1); ++a)
            for (std::size_t c = 0; c < z.extent(2); ++c)
                out << i << ',' << a << ',' << c << ',' << int(z(i, a, c)) << '\n';
}

}  // namespace crowdcertain::sim
