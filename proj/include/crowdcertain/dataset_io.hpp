#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcertain/ndarray.hpp"

namespace crowdcertain::data {

// Feature matrix plus binary ground truth, one column per class.
struct Dataset {
    std::string name;
    Matrix<double> features;  // N x F
    LabelMatrix truth;        // N x K
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;

    std::size_t n() const { return features.extent(0); }
    std::size_t n_features() const { return features.extent(1); }
    std::size_t n_classes() const { return truth.extent(1); }
};

// Which columns to read and how to binarize labels.
//
// With no positive_values, label cells must already be 0/1. With
// positive_values, matching cells map to 1; if negative_values is also given
// only those map to 0 and rows with any other label value are dropped (this is
// how a multi-class table is reduced to a two-class problem), otherwise every
// non-positive value maps to 0.
struct ColumnSpec {
    std::vector<std::string> label_columns{"label"};
    std::vector<std::string> feature_columns;  // empty: every non-label column
    std::vector<std::string> positive_values;
    std::vector<std::string> negative_values;
};

Dataset load_csv(const std::filesystem::path& path, const ColumnSpec& spec);

// Writes features at 17 significant digits followed by one 0/1 column per class.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

struct FoldPlan {
    std::size_t k_folds = 0;
    std::vector<std::size_t> assignments;  // fold index per instance
    std::uint64_t seed = 0;

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
    std::size_t fold_size(std::size_t fold) const;
};

// Seeded permutation of [0, n) chunked into k folds of size floor(n/k) or ceil(n/k).
FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

Matrix<double> select_rows(const Matrix<double>& m, std::span<const std::size_t> rows);
LabelMatrix select_rows(const LabelMatrix& m, std::span<const std::size_t> rows);
LabelTensor select_rows(const LabelTensor& t, std::span<const std::size_t> rows);

// Synthetic generators used by the bundled benchmark set.
Dataset make_two_gaussians(std::size_t n, std::uint64_t seed, double separation = 4.0);
Dataset make_xor_grid(std::size_t n, std::uint64_t seed);

std::vector<std::string> bundled_names();
std::filesystem::path default_data_dir();

// A bundled name ("gaussian", "xor", "iris", "breast-cancer") or a CSV path
// read with `spec`.
Dataset resolve_dataset(std::string_view name_or_path, const ColumnSpec& spec);

}  // namespace crowdcertain::data
