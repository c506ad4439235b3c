#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crowdcertain/ndarray.hpp"
#include "crowdcertain/random.hpp"

namespace testing_support {

using crowdcertain::Label;
using crowdcertain::LabelMatrix;
using crowdcertain::LabelTensor;

// N x M single-class tensor from rows of votes.
inline LabelTensor tensor_from_rows(const std::vector<std::vector<int>>& rows) {
    const std::size_t n = rows.size(), m = rows.empty() ? 0 : rows.front().size();
    LabelTensor z({n, m, 1});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) z(i, a, 0) = static_cast<Label>(rows[i][a]);
    return z;
}

inline LabelMatrix column(const std::vector<int>& values) {
    LabelMatrix y({values.size(), 1});
    for (std::size_t i = 0; i < values.size(); ++i) y(i, 0) = static_cast<Label>(values[i]);
    return y;
}

inline LabelMatrix slice_class(const LabelTensor& z, std::size_t k) {
    LabelMatrix out({z.extent(0), z.extent(1)});
    for (std::size_t i = 0; i < z.extent(0); ++i)
        for (std::size_t a = 0; a < z.extent(1); ++a) out(i, a) = z(i, a, k);
    return out;
}

// Independent noisy workers: worker a answers correctly with probability acc[a].
inline LabelTensor noisy_panel(const LabelMatrix& truth, const std::vector<double>& acc, std::uint64_t seed) {
    crowdcertain::Rng rng(seed);
    const std::size_t n = truth.extent(0), k = truth.extent(1);
    LabelTensor z({n, acc.size(), k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < acc.size(); ++a)
            for (std::size_t c = 0; c < k; ++c)
                z(i, a, c) = rng.uniform() < acc[a] ? truth(i, c) : static_cast<Label>(1 - truth(i, c));
    return z;
}

inline LabelMatrix balanced_truth(std::size_t n, std::uint64_t seed) {
    crowdcertain::Rng rng(seed);
    LabelMatrix y({n, 1});
    for (std::size_t i = 0; i < n; ++i) y(i, 0) = static_cast<Label>(rng.uniform() < 0.5);
    return y;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("crowdcertain_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
