#include "evosynth/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "evosynth/error.hpp"

namespace evosynth {

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

std::string shape_str(const std::vector<size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(std::vector<size_t> shape) : shape_(std::move(shape)) {
    for (size_t d : shape_)
        require(d > 0, "tensor dimension must be positive, got shape ", shape_str(shape_));
    data_.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    for (size_t d : shape_)
        require(d > 0, "tensor dimension must be positive, got shape ", shape_str(shape_));
    require(shape_numel(shape_) == data_.size(), "tensor shape ", shape_str(shape_),
            " wants ", shape_numel(shape_), " values, got ", data_.size());
}

Tensor Tensor::zeros(std::vector<size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::ones(std::vector<size_t> shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(std::vector<size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.numel(); ++i) t[i] = value;
    return t;
}

Tensor Tensor::reshaped(std::vector<size_t> shape) const {
    require(shape_numel(shape) == numel(), "reshape ", shape_str(shape_), " -> ",
            shape_str(shape), " changes element count");
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::is_binary() const {
    for (double v : data_)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

}  // namespace evosynth
