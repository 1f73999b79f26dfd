#ifndef FEDPHISH_TENSOR_HPP
#define FEDPHISH_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fedphish/errors.hpp"

namespace fedphish {

/// Dense row-major tensor of 64-bit floats. Mostly used rank-1/rank-2;
/// the shape vector is kept general so parameter entries can carry any rank.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::int64_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<std::int64_t> shape);
    static Tensor full(std::vector<std::int64_t> shape, double value);
    static Tensor scalar(double value) { return Tensor({1}, {value}); }
    static Tensor row(std::vector<double> values);
    static Tensor matrix(std::int64_t rows, std::int64_t cols, std::vector<double> values);
    static Tensor identity(std::int64_t n);

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
    std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }

    // rank-2 accessors
    std::int64_t rows() const;
    std::int64_t cols() const;
    double& at(std::int64_t r, std::int64_t c);
    double at(std::int64_t r, std::int64_t c) const;

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::int64_t> shape_;
    std::vector<double> values_;
};

std::int64_t shape_product(const std::vector<std::int64_t>& shape);

/// Throws DimensionError naming `op` unless both operands share `expect`ed
/// relation; small helpers used across the op implementations.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& op);
void require_rank2(const Tensor& t, const std::string& op);

} // namespace fedphish

#endif
