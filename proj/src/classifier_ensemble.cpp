#include "crowdcertain/classifier_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace crowdcertain::ensemble {

using json = nlohmann::json;

void ForestConfig::validate() const {
    if (g_ensembles < 1 || trees_per_forest < 1 || max_depth < 1 || min_leaf < 1)
        throw Error("forest configuration counts must all be >= 1");
}

namespace {

double laplace(std::size_t positives, std::size_t total) {
    return (static_cast<double>(positives) + 1.0) / (static_cast<double>(total) + 2.0);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;  // sum over children of (n1^2 + n0^2) / n; larger is purer
};

Split best_split(const Matrix<double>& x, std::span<const Label> y, const std::vector<std::size_t>& rows,
                 std::size_t min_leaf, Rng& rng) {
    const std::size_t n_features = x.extent(1);
    const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(n_features))));

    std::vector<std::size_t> order(n_features);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n_features; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::size_t total1 = 0;
    for (auto r : rows) total1 += y[r];
    const std::size_t total = rows.size();

    Split best;
    std::size_t informative = 0;
    std::vector<std::pair<double, Label>> vals(total);
    for (std::size_t f : order) {
        if (informative >= mtry) break;
        for (std::size_t j = 0; j < total; ++j) vals[j] = {x(rows[j], f), y[rows[j]]};
        std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;  // constant here; does not count toward mtry
        ++informative;

        std::size_t left1 = 0;
        for (std::size_t j = 0; j + 1 < total; ++j) {
            left1 += vals[j].second;
            if (vals[j].first == vals[j + 1].first) continue;
            const std::size_t nl = j + 1;
            const std::size_t nr = total - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double l1 = double(left1), l0 = double(nl - left1);
            const double r1 = double(total1 - left1), r0 = double(nr - (total1 - left1));
            const double score = (l1 * l1 + l0 * l0) / double(nl) + (r1 * r1 + r0 * r0) / double(nr);
            if (score > best.score) {
                double mid = 0.5 * (vals[j].first + vals[j + 1].first);
                if (!(mid < vals[j + 1].first)) mid = vals[j].first;
                best = {static_cast<int>(f), mid, score};
            }
        }
    }
    return best;
}

}  // namespace

DecisionTree DecisionTree::fit(const Matrix<double>& x, std::span<const Label> y, std::span<const std::size_t> sample,
                               std::size_t max_depth, std::size_t min_leaf, Rng& rng) {
    if (sample.empty()) throw Error("DecisionTree::fit: empty sample");
    DecisionTree tree;
    struct Pending {
        int node;
        std::vector<std::size_t> rows;
        std::size_t depth;
    };
    std::deque<Pending> queue;
    tree.nodes_.emplace_back();
    queue.push_back({0, std::vector<std::size_t>(sample.begin(), sample.end()), 0});

    while (!queue.empty()) {
        Pending p = std::move(queue.front());
        queue.pop_front();
        std::size_t pos = 0;
        for (auto r : p.rows) pos += y[r];
        tree.nodes_[p.node].value = laplace(pos, p.rows.size());

        const bool pure = pos == 0 || pos == p.rows.size();
        if (pure || p.depth >= max_depth || p.rows.size() < 2 * min_leaf) continue;

        const Split split = best_split(x, y, p.rows, min_leaf, rng);
        if (split.feature < 0) continue;

        Pending left{static_cast<int>(tree.nodes_.size()), {}, p.depth + 1};
        Pending right{static_cast<int>(tree.nodes_.size() + 1), {}, p.depth + 1};
        for (auto r : p.rows) (x(r, split.feature) <= split.threshold ? left.rows : right.rows).push_back(r);

        auto& node = tree.nodes_[p.node];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left.node;
        node.right = right.node;
        tree.nodes_.emplace_back();
        tree.nodes_.emplace_back();
        queue.push_back(std::move(left));
        queue.push_back(std::move(right));
    }
    return tree;
}

DecisionTree DecisionTree::from_nodes(std::vector<Node> nodes) {
    if (nodes.empty()) throw Error("tree has no nodes");
    const int n = static_cast<int>(nodes.size());
    for (const auto& nd : nodes)
        if (nd.feature >= 0 && (nd.left <= 0 || nd.left >= n || nd.right <= 0 || nd.right >= n))
            throw Error("tree node references a child out of range");
    DecisionTree t;
    t.nodes_ = std::move(nodes);
    return t;
}

double DecisionTree::predict(std::span<const double> row) const {
    int i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& nd = nodes_[i];
        i = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[i].value;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes_[i].feature >= 0) {
            d[nodes_[i].left] = d[i] + 1;
            d[nodes_[i].right] = d[i] + 1;
        }
    }
    return best;
}

RandomForest RandomForest::fit(const Matrix<double>& x, std::span<const Label> y, const ForestConfig& cfg,
                               std::uint64_t seed) {
    cfg.validate();
    const std::size_t n = x.extent(0);
    if (n == 0) throw Error("RandomForest::fit: empty training set");
    if (y.size() != n) throw Error("RandomForest::fit: label count does not match rows");

    RandomForest forest;
    const std::size_t pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), Label{1}));
    if (pos == 0 || pos == n) {
        forest.constant_ = pos == 0 ? 0.0 : 1.0;
        return forest;
    }

    Rng rng = Rng::substream(seed, "forest");
    std::vector<std::size_t> sample(n);
    for (std::size_t t = 0; t < cfg.trees_per_forest; ++t) {
        for (auto& s : sample) s = rng.below(n);
        forest.trees_.push_back(DecisionTree::fit(x, y, sample, cfg.max_depth, cfg.min_leaf, rng));
    }
    return forest;
}

double RandomForest::predict_proba(std::span<const double> row) const {
    if (constant_) return *constant_;
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(row);
    return s / static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::predict_proba(const Matrix<double>& x) const {
    std::vector<double> out(x.extent(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict_proba(x.row(i));
    return out;
}

bool RandomForest::operator==(const RandomForest& other) const { return to_json() == other.to_json(); }

namespace {

json forest_json(const std::vector<DecisionTree>& trees, const std::optional<double>& constant) {
    json j;
    j["format"] = "crowdcertain-forest";
    j["version"] = 1;
    j["constant"] = constant ? json(*constant) : json(nullptr);
    json arr = json::array();
    for (const auto& t : trees) {
        json nodes = json::array();
        for (const auto& nd : t.nodes()) nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value});
        arr.push_back(nodes);
    }
    j["trees"] = std::move(arr);
    return j;
}

}  // namespace

std::string RandomForest::to_json() const { return forest_json(trees_, constant_).dump(); }

RandomForest RandomForest::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("forest JSON: ") + e.what());
    }
    if (j.value("format", "") != "crowdcertain-forest" || j.value("version", 0) != 1)
        throw Error("forest JSON: unsupported format or version");
    RandomForest f;
    if (!j["constant"].is_null()) f.constant_ = j["constant"].get<double>();
    for (const auto& tj : j["trees"]) {
        std::vector<DecisionTree::Node> nodes;
        for (const auto& nj : tj)
            nodes.push_back({nj[0].get<int>(), nj[1].get<double>(), nj[2].get<int>(), nj[3].get<int>(),
                             nj[4].get<double>()});
        f.trees_.push_back(DecisionTree::from_nodes(std::move(nodes)));
    }
    if (!f.constant_ && f.trees_.empty()) throw Error("forest JSON: no trees");
    return f;
}

RandomForest train_worker_ensemble(const Matrix<double>& train_features, std::span<const Label> worker_labels,
                                   const ForestConfig& cfg, std::uint64_t g) {
    for (auto l : worker_labels)
        if (l > 1) throw Error("train_worker_ensemble: labels must be binary");
    return RandomForest::fit(train_features, worker_labels, cfg, g);
}

double binarization_threshold(std::span<const double> probs, std::span<const Label> labels, ThresholdMode mode) {
    if (probs.empty()) throw Error("binarization_threshold: empty input");
    if (probs.size() != labels.size()) throw Error("binarization_threshold: size mismatch");
    if (mode == ThresholdMode::fixed_half) return 0.5;

    const std::size_t n = probs.size();
    const std::size_t pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label{1}));
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) return 0.5;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

    // Walk candidates from the largest down; counts hold instances strictly above the candidate.
    // J = TPR - FPR is compared through its integer numerator tp * neg - fp * pos so
    // that ties are exact and the largest maximizing candidate wins.
    std::size_t tp = 0, fp = 0;
    long long best_j = 0;
    double best_theta = 0.5;
    bool have_best = false;
    std::size_t i = 0;
    while (i < n) {
        const double v = probs[idx[i]];
        const long long j = static_cast<long long>(tp * neg) - static_cast<long long>(fp * pos);
        if (!have_best || j > best_j) {
            have_best = true;
            best_j = j;
            best_theta = v;
        }
        while (i < n && probs[idx[i]] == v) {
            (labels[idx[i]] ? tp : fp)++;
            ++i;
        }
    }
    return best_theta;
}

Label classifier_majority(std::span<const Label> votes) {
    std::size_t ones = 0;
    for (auto v : votes) ones += v;
    return 2 * ones >= votes.size() ? 1 : 0;
}

WorkerEnsembles WorkerEnsembles::train(const Matrix<double>& train_features, const LabelTensor& worker_labels,
                                       const ForestConfig& cfg, ThresholdMode mode) {
    cfg.validate();
    const std::size_t n = train_features.extent(0);
    if (worker_labels.extent(0) != n) throw Error("WorkerEnsembles::train: label rows do not match features");
    const std::size_t m = worker_labels.extent(1);
    const std::size_t k = worker_labels.extent(2);

    WorkerEnsembles out;
    out.thresholds_ = Tensor3<double>({m, k, cfg.g_ensembles});
    out.forests_.reserve(m * k * cfg.g_ensembles);
    std::vector<Label> y(n);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < n; ++i) y[i] = worker_labels(i, a, c);
            for (std::size_t g = 0; g < cfg.g_ensembles; ++g) {
                auto forest = train_worker_ensemble(train_features, y, cfg, g);
                out.thresholds_(a, c, g) = binarization_threshold(forest.predict_proba(train_features), y, mode);
                out.forests_.push_back(std::move(forest));
            }
        }
    return out;
}

const RandomForest& WorkerEnsembles::forest(std::size_t worker, std::size_t cls, std::size_t g) const {
    return forests_.at((worker * classes() + cls) * this->g() + g);
}

EnsemblePredictions WorkerEnsembles::predict(const Matrix<double>& features) const {
    const std::size_t n = features.extent(0);
    const std::size_t m = workers(), k = classes(), gn = g();
    EnsemblePredictions p;
    p.probs = Tensor4<double>({n, m, k, gn});
    p.labels = Tensor4<Label>({n, m, k, gn});
    p.thresholds = thresholds_;
    p.eta = LabelTensor({n, m, k});
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t g = 0; g < gn; ++g) {
                const auto& f = forest(a, c, g);
                const double theta = thresholds_(a, c, g);
                for (std::size_t i = 0; i < n; ++i) {
                    const double pr = f.predict_proba(features.row(i));
                    p.probs(i, a, c, g) = pr;
                    p.labels(i, a, c, g) = pr > theta ? 1 : 0;
                }
            }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < k; ++c) p.eta(i, a, c) = classifier_majority(p.labels.row(i, a, c));
    return p;
}

void WorkerEnsembles::save(const std::filesystem::path& path) const {
    json j;
    j["format"] = "crowdcertain-worker-ensembles";
    j["version"] = 1;
    j["shape"] = {workers(), classes(), g()};
    j["thresholds"] = std::vector<double>(thresholds_.flat().begin(), thresholds_.flat().end());
    json forests = json::array();
    for (const auto& f : forests_) forests.push_back(json::parse(f.to_json()));
    j["forests"] = std::move(forests);
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump() << '\n';
}

WorkerEnsembles WorkerEnsembles::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(std::string("ensemble JSON: ") + e.what());
    }
    if (j.value("format", "") != "crowdcertain-worker-ensembles" || j.value("version", 0) != 1)
        throw Error("ensemble JSON: unsupported format or version");
    const auto shape = j["shape"].get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw Error("ensemble JSON: bad shape");
    WorkerEnsembles out;
    out.thresholds_ = Tensor3<double>({shape[0], shape[1], shape[2]});
    const auto th = j["thresholds"].get<std::vector<double>>();
    if (th.size() != out.thresholds_.size()) throw Error("ensemble JSON: threshold count mismatch");
    std::copy(th.begin(), th.end(), out.thresholds_.flat().begin());
    for (const auto& fj : j["forests"]) out.forests_.push_back(RandomForest::from_json(fj.dump()));
    if (out.forests_.size() != out.thresholds_.size()) throw Error("ensemble JSON: forest count mismatch");
    return out;
}

}  // namespace crowdcertain::ensemble
