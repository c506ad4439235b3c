#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdcertain {

// Library-wide error type. Every precondition violation surfaces as one of these.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense row-major array with a fixed rank. Used for the N x M x K label
// tensors and the N x M x K x G probability tensors of the pipeline.
template <typename T, std::size_t Rank>
class NdArray {
public:
    using value_type = T;
    using Shape = std::array<std::size_t, Rank>;

    NdArray() { shape_.fill(0); }

    explicit NdArray(Shape shape, T fill = T{}) : shape_(shape) {
        std::size_t n = 1;
        for (auto e : shape_) n *= e;
        data_.assign(n, fill);
    }

    template <std::integral... I>
        requires(sizeof...(I) == Rank)
    T& operator()(I... idx) {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }

    template <std::integral... I>
        requires(sizeof...(I) == Rank)
    const T& operator()(I... idx) const {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t extent(std::size_t dim) const { return shape_.at(dim); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> flat() noexcept { return data_; }
    std::span<const T> flat() const noexcept { return data_; }

    // Contiguous slice along the innermost dimension.
    template <std::integral... I>
        requires(sizeof...(I) == Rank - 1)
    std::span<const T> row(I... idx) const {
        std::array<std::size_t, Rank> full{static_cast<std::size_t>(idx)..., 0};
        return std::span<const T>(data_).subspan(offset(full), shape_[Rank - 1]);
    }

    template <std::integral... I>
        requires(sizeof...(I) == Rank - 1)
    std::span<T> row(I... idx) {
        std::array<std::size_t, Rank> full{static_cast<std::size_t>(idx)..., 0};
        return std::span<T>(data_).subspan(offset(full), shape_[Rank - 1]);
    }

    bool operator==(const NdArray&) const = default;

private:
    std::size_t offset(const std::array<std::size_t, Rank>& idx) const {
        std::size_t off = 0;
        for (std::size_t d = 0; d < Rank; ++d) off = off * shape_[d] + idx[d];
        return off;
    }

    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
using Matrix = NdArray<T, 2>;
template <typename T>
using Tensor3 = NdArray<T, 3>;
template <typename T>
using Tensor4 = NdArray<T, 4>;

// Binary labels are stored as bytes holding 0 or 1.
using Label = std::uint8_t;
using LabelMatrix = Matrix<Label>;
using LabelTensor = Tensor3<Label>;

template <typename T, std::size_t Rank>
void require_same_shape(const NdArray<T, Rank>& a, const NdArray<T, Rank>& b, const char* what) {
    if (a.shape() != b.shape()) throw Error(std::string("shape mismatch: ") + what);
}

}  // namespace crowdcertain
