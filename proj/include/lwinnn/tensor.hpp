#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lwinnn {

/// Dense row-major float32 tensor with up to four axes.
///
/// The element count always equals the product of dims. Construction does
/// not check finiteness; file I/O does (see bundle.hpp).
class Tensor {
public:
    static constexpr std::size_t kMaxRank = 4;

    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> dims);
    Tensor(std::initializer_list<std::size_t> dims) : Tensor(std::vector<std::size_t>(dims)) {}

    /// Takes ownership of data; throws ShapeError if its length is not prod(dims).
    Tensor(std::vector<std::size_t> dims, std::vector<float> data);

    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }
    const std::vector<float>& values() const noexcept { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    /// Index of the first non-finite value, or size() when all are finite.
    std::size_t first_non_finite() const noexcept;
    bool all_finite() const noexcept { return first_non_finite() == size(); }

    /// Bit-level equality of dims and payload (so -0.0 != +0.0 and NaN == NaN).
    friend bool operator==(const Tensor& a, const Tensor& b) noexcept;

private:
    std::vector<std::size_t> dims_;
    std::vector<float> data_;
};

std::size_t element_count(std::span<const std::size_t> dims);

/// "(64, 62, 62)"
std::string format_dims(std::span<const std::size_t> dims);

} // namespace lwinnn
