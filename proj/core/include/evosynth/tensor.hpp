#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace evosynth {

/// Dense row-major tensor of 64-bit floats. The single data carrier of the
/// engine: activations, weights, gradients and {0,1} synapse masks.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape);  // zero-filled
    Tensor(std::vector<size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<size_t> shape);
    static Tensor ones(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, double value);

    const std::vector<size_t>& shape() const { return shape_; }
    size_t ndim() const { return shape_.size(); }
    size_t numel() const { return data_.size(); }
    size_t dim(size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// Copy with a new shape; element count must match.
    Tensor reshaped(std::vector<size_t> shape) const;

    bool all_finite() const;
    /// True when every entry is exactly 0.0 or 1.0.
    bool is_binary() const;

    bool operator==(const Tensor& other) const = default;

private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

size_t shape_numel(const std::vector<size_t>& shape);
std::string shape_str(const std::vector<size_t>& shape);

}  // namespace evosynth
