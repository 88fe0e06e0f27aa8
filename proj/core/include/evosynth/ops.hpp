#pragma once

#include <vector>

#include "evosynth/tensor.hpp"

namespace evosynth {

/// Gradients produced by one layer's backward pass. Shapes mirror the layer's
/// parameters and input exactly.
struct LayerGrad {
    Tensor weight_grad;
    Tensor bias_grad;
    Tensor input_grad;
};

struct LossGrad {
    double loss = 0.0;
    Tensor logit_grad;
};

// Valid convolution, stride 1, no padding. mask has the weight shape with
// entries in {0,1}; masked taps contribute nothing to output or gradients.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const Tensor& bias, const Tensor& mask);
LayerGrad conv2d_backward(const Tensor& input, const Tensor& weights,
                          const Tensor& mask, const Tensor& output_grad);

// 2x2 max-pool, stride 2. Odd trailing rows/columns are dropped. Ties route
// the gradient to the lowest flat index of the window.
Tensor maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const Tensor& input, const Tensor& output_grad);

// Fully connected layer on [N, In] inputs, weights [Out, In].
Tensor fc_forward(const Tensor& input, const Tensor& weights,
                  const Tensor& bias, const Tensor& mask);
LayerGrad fc_backward(const Tensor& input, const Tensor& weights,
                      const Tensor& mask, const Tensor& output_grad);

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& output_grad);

/// Mean softmax cross-entropy over the batch plus the logit gradient.
LossGrad softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// As above but with an explicit normalizer, so a batch split into chunks can
/// be reduced by plain summation: loss is the per-chunk sum of -log p(label),
/// logit_grad rows are already divided by `divisor`.
LossGrad softmax_cross_entropy_partial(const Tensor& logits,
                                       const std::vector<int>& labels,
                                       size_t divisor);

/// One SGD-with-momentum step:
///   velocity <- momentum * velocity - lr * grad
///   weights  <- (weights + velocity) .* mask   (mask == nullptr: no masking)
/// Masked coordinates end exactly 0.0. A non-finite gradient aborts the step
/// before anything is mutated.
void sgd_step(Tensor& weights, const Tensor& grad, Tensor& velocity,
              double lr, double momentum, const Tensor* mask);

}  // namespace evosynth
