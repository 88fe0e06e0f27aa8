#include "evosynth/ops.hpp"

#include <cmath>
#include <vector>

#include "evosynth/error.hpp"

namespace evosynth {

namespace {

void check_mask_binary(const char* op, const Tensor& mask) {
    if (mask.is_binary()) return;
    for (size_t i = 0; i < mask.numel(); ++i)
        if (mask[i] != 0.0 && mask[i] != 1.0)
            fail(op, ": mask entry at flat index ", i, " is ", mask[i],
                 "; mask entries must be 0 or 1");
}

void check_conv_args(const char* op, const Tensor& input, const Tensor& weights,
                     const Tensor* bias, const Tensor& mask) {
    require(input.ndim() == 4, op, ": input must be 4-D [N,C,H,W], got ",
            shape_str(input.shape()));
    require(weights.ndim() == 4, op, ": weights must be 4-D [Cout,Cin,kh,kw], got ",
            shape_str(weights.shape()));
    require(input.dim(1) == weights.dim(1), op, ": input channel count ", input.dim(1),
            " does not match weight in_channels ", weights.dim(1));
    require(weights.dim(2) <= input.dim(2), op, ": kernel height ", weights.dim(2),
            " exceeds input height ", input.dim(2));
    require(weights.dim(3) <= input.dim(3), op, ": kernel width ", weights.dim(3),
            " exceeds input width ", input.dim(3));
    if (bias)
        require(bias->numel() == weights.dim(0), op, ": bias size ", bias->numel(),
                " does not match out_channels ", weights.dim(0));
    require(mask.same_shape(weights), op, ": mask shape ", shape_str(mask.shape()),
            " does not match weight shape ", shape_str(weights.shape()));
    check_mask_binary(op, mask);
}

// weights with the mask folded in; zero taps get skipped in the hot loops
std::vector<double> masked_weights(const Tensor& weights, const Tensor& mask) {
    std::vector<double> wm(weights.numel());
    for (size_t i = 0; i < wm.size(); ++i) wm[i] = mask[i] == 0.0 ? 0.0 : weights[i];
    return wm;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const Tensor& bias, const Tensor& mask) {
    check_conv_args("conv2d_forward", input, weights, &bias, mask);
    const size_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const size_t Cout = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const size_t Ho = H - kh + 1, Wo = W - kw + 1;

    const std::vector<double> wm = masked_weights(weights, mask);
    Tensor out({N, Cout, Ho, Wo});
    const double* in = input.data();
    double* o = out.data();

    for (size_t n = 0; n < N; ++n) {
        for (size_t oc = 0; oc < Cout; ++oc) {
            double* out_plane = o + (n * Cout + oc) * Ho * Wo;
            const double b = bias[oc];
            for (size_t i = 0; i < Ho * Wo; ++i) out_plane[i] = b;
            for (size_t ic = 0; ic < Cin; ++ic) {
                const double* in_plane = in + (n * Cin + ic) * H * W;
                const double* w_k = wm.data() + (oc * Cin + ic) * kh * kw;
                for (size_t u = 0; u < kh; ++u) {
                    for (size_t v = 0; v < kw; ++v) {
                        const double w = w_k[u * kw + v];
                        if (w == 0.0) continue;
                        for (size_t y = 0; y < Ho; ++y) {
                            const double* in_row = in_plane + (y + u) * W + v;
                            double* out_row = out_plane + y * Wo;
                            for (size_t x = 0; x < Wo; ++x) out_row[x] += w * in_row[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

LayerGrad conv2d_backward(const Tensor& input, const Tensor& weights,
                          const Tensor& mask, const Tensor& output_grad) {
    check_conv_args("conv2d_backward", input, weights, nullptr, mask);
    const size_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const size_t Cout = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const size_t Ho = H - kh + 1, Wo = W - kw + 1;
    require(output_grad.shape() == std::vector<size_t>({N, Cout, Ho, Wo}),
            "conv2d_backward: output_grad shape ", shape_str(output_grad.shape()),
            " does not match expected ", shape_str({N, Cout, Ho, Wo}));

    const std::vector<double> wm = masked_weights(weights, mask);
    LayerGrad g{Tensor(weights.shape()), Tensor({Cout}), Tensor(input.shape())};
    const double* in = input.data();
    const double* og = output_grad.data();
    double* wg = g.weight_grad.data();
    double* bg = g.bias_grad.data();
    double* ig = g.input_grad.data();

    for (size_t n = 0; n < N; ++n) {
        for (size_t oc = 0; oc < Cout; ++oc) {
            const double* og_plane = og + (n * Cout + oc) * Ho * Wo;
            double bacc = 0.0;
            for (size_t i = 0; i < Ho * Wo; ++i) bacc += og_plane[i];
            bg[oc] += bacc;
            for (size_t ic = 0; ic < Cin; ++ic) {
                const double* in_plane = in + (n * Cin + ic) * H * W;
                double* ig_plane = ig + (n * Cin + ic) * H * W;
                const double* w_k = wm.data() + (oc * Cin + ic) * kh * kw;
                double* wg_k = wg + (oc * Cin + ic) * kh * kw;
                for (size_t u = 0; u < kh; ++u) {
                    for (size_t v = 0; v < kw; ++v) {
                        const double w = w_k[u * kw + v];
                        double wacc = 0.0;
                        for (size_t y = 0; y < Ho; ++y) {
                            const double* in_row = in_plane + (y + u) * W + v;
                            double* ig_row = ig_plane + (y + u) * W + v;
                            const double* og_row = og_plane + y * Wo;
                            for (size_t x = 0; x < Wo; ++x) wacc += in_row[x] * og_row[x];
                            if (w != 0.0)
                                for (size_t x = 0; x < Wo; ++x) ig_row[x] += w * og_row[x];
                        }
                        wg_k[u * kw + v] += wacc;
                    }
                }
            }
        }
    }
    // pruned synapses receive zero gradient, exactly
    for (size_t i = 0; i < g.weight_grad.numel(); ++i)
        if (mask[i] == 0.0) wg[i] = 0.0;
    return g;
}

Tensor maxpool2x2_forward(const Tensor& input) {
    require(input.ndim() == 4, "maxpool2x2_forward: input must be 4-D, got ",
            shape_str(input.shape()));
    const size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    require(H >= 2 && W >= 2, "maxpool2x2_forward: spatial dims ", H, "x", W,
            " too small for a 2x2 window");
    const size_t Ho = H / 2, Wo = W / 2;

    Tensor out({N, C, Ho, Wo});
    const double* in = input.data();
    double* o = out.data();
    for (size_t p = 0; p < N * C; ++p) {
        const double* plane = in + p * H * W;
        double* out_plane = o + p * Ho * Wo;
        for (size_t y = 0; y < Ho; ++y) {
            for (size_t x = 0; x < Wo; ++x) {
                const double* w0 = plane + (2 * y) * W + 2 * x;
                const double* w1 = w0 + W;
                double m = w0[0];
                if (w0[1] > m) m = w0[1];
                if (w1[0] > m) m = w1[0];
                if (w1[1] > m) m = w1[1];
                out_plane[y * Wo + x] = m;
            }
        }
    }
    return out;
}

Tensor maxpool2x2_backward(const Tensor& input, const Tensor& output_grad) {
    require(input.ndim() == 4, "maxpool2x2_backward: input must be 4-D, got ",
            shape_str(input.shape()));
    const size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const size_t Ho = H / 2, Wo = W / 2;
    require(output_grad.shape() == std::vector<size_t>({N, C, Ho, Wo}),
            "maxpool2x2_backward: output_grad shape ", shape_str(output_grad.shape()),
            " does not match expected ", shape_str({N, C, Ho, Wo}));

    Tensor grad(input.shape());
    const double* in = input.data();
    const double* og = output_grad.data();
    double* g = grad.data();
    for (size_t p = 0; p < N * C; ++p) {
        const double* plane = in + p * H * W;
        double* g_plane = g + p * H * W;
        const double* og_plane = og + p * Ho * Wo;
        for (size_t y = 0; y < Ho; ++y) {
            for (size_t x = 0; x < Wo; ++x) {
                // ties go to the lowest flat index: strict > keeps the first max
                const size_t base = (2 * y) * W + 2 * x;
                const size_t idx[4] = {base, base + 1, base + W, base + W + 1};
                size_t best = idx[0];
                for (int k = 1; k < 4; ++k)
                    if (plane[idx[k]] > plane[best]) best = idx[k];
                g_plane[best] += og_plane[y * Wo + x];
            }
        }
    }
    return grad;
}

namespace {
void check_fc_args(const char* op, const Tensor& input, const Tensor& weights,
                   const Tensor* bias, const Tensor& mask) {
    require(input.ndim() == 2, op, ": input must be 2-D [N,in], got ",
            shape_str(input.shape()));
    require(weights.ndim() == 2, op, ": weights must be 2-D [out,in], got ",
            shape_str(weights.shape()));
    require(input.dim(1) == weights.dim(1), op, ": input features ", input.dim(1),
            " do not match weight in_features ", weights.dim(1));
    if (bias)
        require(bias->numel() == weights.dim(0), op, ": bias size ", bias->numel(),
                " does not match out_features ", weights.dim(0));
    require(mask.same_shape(weights), op, ": mask shape ", shape_str(mask.shape()),
            " does not match weight shape ", shape_str(weights.shape()));
    check_mask_binary(op, mask);
}
}  // namespace

Tensor fc_forward(const Tensor& input, const Tensor& weights,
                  const Tensor& bias, const Tensor& mask) {
    check_fc_args("fc_forward", input, weights, &bias, mask);
    const size_t N = input.dim(0), In = input.dim(1), Out = weights.dim(0);

    const std::vector<double> wm = masked_weights(weights, mask);
    Tensor out({N, Out});
    const double* in = input.data();
    double* o = out.data();
    for (size_t n = 0; n < N; ++n) {
        const double* in_row = in + n * In;
        double* out_row = o + n * Out;
        for (size_t j = 0; j < Out; ++j) {
            const double* w_row = wm.data() + j * In;
            double acc = bias[j];
            for (size_t i = 0; i < In; ++i) acc += w_row[i] * in_row[i];
            out_row[j] = acc;
        }
    }
    return out;
}

LayerGrad fc_backward(const Tensor& input, const Tensor& weights,
                      const Tensor& mask, const Tensor& output_grad) {
    check_fc_args("fc_backward", input, weights, nullptr, mask);
    const size_t N = input.dim(0), In = input.dim(1), Out = weights.dim(0);
    require(output_grad.shape() == std::vector<size_t>({N, Out}),
            "fc_backward: output_grad shape ", shape_str(output_grad.shape()),
            " does not match expected ", shape_str({N, Out}));

    const std::vector<double> wm = masked_weights(weights, mask);
    LayerGrad g{Tensor(weights.shape()), Tensor({Out}), Tensor(input.shape())};
    const double* in = input.data();
    const double* og = output_grad.data();
    double* wg = g.weight_grad.data();
    double* bg = g.bias_grad.data();
    double* ig = g.input_grad.data();

    for (size_t n = 0; n < N; ++n) {
        const double* in_row = in + n * In;
        const double* og_row = og + n * Out;
        double* ig_row = ig + n * In;
        for (size_t j = 0; j < Out; ++j) {
            const double go = og_row[j];
            bg[j] += go;
            if (go == 0.0) continue;
            double* wg_row = wg + j * In;
            const double* w_row = wm.data() + j * In;
            for (size_t i = 0; i < In; ++i) {
                wg_row[i] += go * in_row[i];
                ig_row[i] += go * w_row[i];
            }
        }
    }
    for (size_t i = 0; i < g.weight_grad.numel(); ++i)
        if (mask[i] == 0.0) wg[i] = 0.0;
    return g;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape());
    for (size_t i = 0; i < input.numel(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& output_grad) {
    require(input.same_shape(output_grad), "relu_backward: input shape ",
            shape_str(input.shape()), " does not match output_grad shape ",
            shape_str(output_grad.shape()));
    Tensor grad(input.shape());
    for (size_t i = 0; i < input.numel(); ++i)
        grad[i] = input[i] > 0.0 ? output_grad[i] : 0.0;
    return grad;
}

LossGrad softmax_cross_entropy_partial(const Tensor& logits,
                                       const std::vector<int>& labels,
                                       size_t divisor) {
    require(logits.ndim() == 2, "softmax_cross_entropy: logits must be 2-D [N,K], got ",
            shape_str(logits.shape()));
    const size_t N = logits.dim(0), K = logits.dim(1);
    require(labels.size() == N, "softmax_cross_entropy: ", labels.size(), " labels for ",
            N, " logit rows");
    require(divisor > 0, "softmax_cross_entropy: divisor must be positive");

    LossGrad out;
    out.logit_grad = Tensor(logits.shape());
    const double* l = logits.data();
    double* g = out.logit_grad.data();
    const double inv = 1.0 / static_cast<double>(divisor);
    double loss_sum = 0.0;
    std::vector<double> p(K);
    for (size_t n = 0; n < N; ++n) {
        const int label = labels[n];
        require(label >= 0 && static_cast<size_t>(label) < K,
                "softmax_cross_entropy: label ", label, " out of range [0,", K,
                ") at sample ", n);
        const double* row = l + n * K;
        double m = row[0];
        for (size_t k = 1; k < K; ++k)
            if (row[k] > m) m = row[k];
        double s = 0.0;
        for (size_t k = 0; k < K; ++k) {
            p[k] = std::exp(row[k] - m);
            s += p[k];
        }
        loss_sum += std::log(s) - (row[static_cast<size_t>(label)] - m);
        double* g_row = g + n * K;
        for (size_t k = 0; k < K; ++k) g_row[k] = p[k] / s * inv;
        g_row[static_cast<size_t>(label)] -= inv;
    }
    out.loss = loss_sum;
    return out;
}

LossGrad softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const size_t N = logits.ndim() == 2 ? logits.dim(0) : 0;
    LossGrad out = softmax_cross_entropy_partial(logits, labels, N == 0 ? 1 : N);
    out.loss /= static_cast<double>(N == 0 ? 1 : N);
    return out;
}

void sgd_step(Tensor& weights, const Tensor& grad, Tensor& velocity,
              double lr, double momentum, const Tensor* mask) {
    require(grad.same_shape(weights), "sgd_step: grad shape ", shape_str(grad.shape()),
            " does not match weight shape ", shape_str(weights.shape()));
    require(velocity.same_shape(weights), "sgd_step: velocity shape ",
            shape_str(velocity.shape()), " does not match weight shape ",
            shape_str(weights.shape()));
    if (mask) {
        require(mask->same_shape(weights), "sgd_step: mask shape ",
                shape_str(mask->shape()), " does not match weight shape ",
                shape_str(weights.shape()));
        check_mask_binary("sgd_step", *mask);
    }
    require(lr > 0.0, "sgd_step: learning rate must be positive, got ", lr);
    require(momentum >= 0.0 && momentum < 1.0, "sgd_step: momentum must be in [0,1), got ",
            momentum);
    for (size_t i = 0; i < grad.numel(); ++i)
        if (!std::isfinite(grad[i]))
            fail("sgd_step: non-finite gradient ", grad[i], " at flat index ", i,
                 "; step aborted");

    for (size_t i = 0; i < weights.numel(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * grad[i];
        if (mask && (*mask)[i] == 0.0)
            weights[i] = 0.0;
        else
            weights[i] += velocity[i];
    }
}

}  // namespace evosynth
