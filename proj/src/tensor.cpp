#include "lwinnn/tensor.hpp"

#include "lwinnn/errors.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace lwinnn {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.empty() || dims.size() > Tensor::kMaxRank) {
        throw ShapeError("tensor rank must be in [1, 4], got " + std::to_string(dims.size()));
    }
    for (std::size_t d : dims) {
        if (d == 0) {
            throw ShapeError("tensor dims must be positive, got " + format_dims(dims));
        }
    }
}

} // namespace

std::size_t element_count(std::span<const std::size_t> dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        n *= d;
    }
    return n;
}

std::string format_dims(std::span<const std::size_t> dims) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) {
            os << ", ";
        }
        os << dims[i];
    }
    os << ')';
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_.assign(element_count(dims_), 0.0f);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != element_count(dims_)) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match dims " + format_dims(dims_));
    }
}

std::size_t Tensor::first_non_finite() const noexcept {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            return i;
        }
    }
    return data_.size();
}

bool operator==(const Tensor& a, const Tensor& b) noexcept {
    return a.dims_ == b.dims_ &&
           (a.data_.empty() ||
            std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0);
}

} // namespace lwinnn
