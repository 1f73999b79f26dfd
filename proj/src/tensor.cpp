#include "fedphish/tensor.hpp"

#include <cmath>
#include <sstream>

namespace fedphish {

std::int64_t shape_product(const std::vector<std::int64_t>& shape) {
    std::int64_t p = 1;
    for (std::int64_t d : shape) p *= d;
    return p;
}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    for (std::int64_t d : shape_) {
        if (d < 0) throw DimensionError("tensor: negative dimension in shape " + shape_str());
    }
    if (shape_product(shape_) != static_cast<std::int64_t>(values_.size())) {
        throw DimensionError("tensor: shape " + shape_str() + " does not match value count " +
                             std::to_string(values_.size()));
    }
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
    std::size_t n = static_cast<std::size_t>(shape_product(shape));
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
    std::size_t n = static_cast<std::size_t>(shape_product(shape));
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::row(std::vector<double> values) {
    std::int64_t n = static_cast<std::int64_t>(values.size());
    return Tensor({1, n}, std::move(values));
}

Tensor Tensor::matrix(std::int64_t rows, std::int64_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::identity(std::int64_t n) {
    Tensor t = zeros({n, n});
    for (std::int64_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::int64_t Tensor::rows() const {
    require_rank2(*this, "rows");
    return shape_[0];
}

std::int64_t Tensor::cols() const {
    require_rank2(*this, "cols");
    return shape_[1];
}

double& Tensor::at(std::int64_t r, std::int64_t c) {
    return values_[static_cast<std::size_t>(r * shape_[1] + c)];
}

double Tensor::at(std::int64_t r, std::int64_t c) const {
    return values_[static_cast<std::size_t>(r * shape_[1] + c)];
}

bool Tensor::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ", ";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& op) {
    if (!a.same_shape(b)) {
        throw DimensionError(op + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

void require_rank2(const Tensor& t, const std::string& op) {
    if (t.rank() != 2) {
        throw DimensionError(op + ": expected rank-2 tensor, got shape " + t.shape_str());
    }
}

} // namespace fedphish
