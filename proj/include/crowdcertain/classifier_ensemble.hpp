#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdcertain/ndarray.hpp"
#include "crowdcertain/random.hpp"

namespace crowdcertain::ensemble {

// G seed-varied random forests are trained per worker; each forest has
// `trees_per_forest` gini trees grown to at most `max_depth`.
struct ForestConfig {
    std::size_t g_ensembles = 10;
    std::size_t trees_per_forest = 4;
    std::size_t max_depth = 4;
    std::size_t min_leaf = 1;

    void validate() const;
};

enum class ThresholdMode { roc_youden, fixed_half };

class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;  // Laplace-smoothed positive-class frequency
    };

    // Grows a tree on the rows listed in `sample` (duplicates allowed).
    // Nodes are expanded level by level, so a deeper tree grown from the same
    // generator state shares every split of a shallower one.
    static DecisionTree fit(const Matrix<double>& x, std::span<const Label> y, std::span<const std::size_t> sample,
                            std::size_t max_depth, std::size_t min_leaf, Rng& rng);

    static DecisionTree from_nodes(std::vector<Node> nodes);

    double predict(std::span<const double> row) const;
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t depth() const;

private:
    std::vector<Node> nodes_;
};

class RandomForest {
public:
    // Bootstrap per tree and sqrt(F) candidate features per split. A single-class
    // label vector yields a constant model predicting exactly that class.
    static RandomForest fit(const Matrix<double>& x, std::span<const Label> y, const ForestConfig& cfg,
                            std::uint64_t seed);

    double predict_proba(std::span<const double> row) const;
    std::vector<double> predict_proba(const Matrix<double>& x) const;

    bool is_constant() const { return constant_.has_value(); }
    const std::vector<DecisionTree>& trees() const { return trees_; }

    std::string to_json() const;
    static RandomForest from_json(const std::string& text);

    bool operator==(const RandomForest& other) const;

private:
    std::vector<DecisionTree> trees_;
    std::optional<double> constant_;
};

// Classifier g for one worker; its randomness is fully determined by g.
RandomForest train_worker_ensemble(const Matrix<double>& train_features, std::span<const Label> worker_labels,
                                   const ForestConfig& cfg, std::uint64_t g);

// roc_youden: the candidate (a distinct predicted probability) maximizing
// TPR - FPR when positives are p > theta; ties go to the largest candidate.
// Falls back to 0.5 when labels are single-class.
double binarization_threshold(std::span<const double> probs, std::span<const Label> labels, ThresholdMode mode);

// 1 iff at least half of the votes are 1.
Label classifier_majority(std::span<const Label> votes);

// Per-instance outputs of every worker's G classifiers.
struct EnsemblePredictions {
    Tensor4<double> probs;       // N x M x K x G
    Tensor3<double> thresholds;  // M x K x G
    Tensor4<Label> labels;       // N x M x K x G, probs > thresholds
    LabelTensor eta;             // N x M x K, classifier majority

    std::size_t n() const { return probs.extent(0); }
    std::size_t workers() const { return probs.extent(1); }
    std::size_t classes() const { return probs.extent(2); }
    std::size_t g() const { return probs.extent(3); }
};

// The trained M x K x G forests of a panel together with their thresholds.
// Thresholds come from the training rows only.
class WorkerEnsembles {
public:
    static WorkerEnsembles train(const Matrix<double>& train_features, const LabelTensor& worker_labels,
                                 const ForestConfig& cfg, ThresholdMode mode);

    EnsemblePredictions predict(const Matrix<double>& features) const;

    const RandomForest& forest(std::size_t worker, std::size_t cls, std::size_t g) const;
    double threshold(std::size_t worker, std::size_t cls, std::size_t g) const { return thresholds_(worker, cls, g); }
    std::size_t workers() const { return thresholds_.extent(0); }
    std::size_t classes() const { return thresholds_.extent(1); }
    std::size_t g() const { return thresholds_.extent(2); }

    void save(const std::filesystem::path& path) const;
    static WorkerEnsembles load(const std::filesystem::path& path);

private:
    std::vector<RandomForest> forests_;  // row-major (worker, class, g)
    Tensor3<double> thresholds_;
};

}  // namespace crowdcertain::ensemble
