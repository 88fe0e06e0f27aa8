#include "evosynth/trainer.hpp"

#include <algorithm>
#include <thread>
#include <utility>
#include <vector>

#include "evosynth/error.hpp"
#include "evosynth/ops.hpp"
#include "evosynth/rng.hpp"

namespace evosynth {

namespace {

/// Flattens a 4-D activation to [N, C*H*W] for an fc layer; 2-D passes through.
Tensor flatten_for_fc(const Tensor& act) {
    if (act.ndim() == 2) return act;
    require(act.ndim() == 4, "forward: fc layer fed a ", act.ndim(), "-D activation");
    return act.reshaped({act.dim(0), act.dim(1) * act.dim(2) * act.dim(3)});
}

struct ForwardCache {
    // inputs[i] is the tensor layer i actually consumed (post-flatten for fc);
    // pre_flatten_shape[i] is non-empty when layer i flattened its input.
    std::vector<Tensor> inputs;
    std::vector<std::vector<size_t>> pre_flatten_shape;
    Tensor logits;
};

ForwardCache forward_cached(const NetworkArch& net, const Tensor& input) {
    ForwardCache cache;
    cache.inputs.reserve(net.layers.size());
    cache.pre_flatten_shape.resize(net.layers.size());

    Tensor act = input;
    size_t p = 0;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        switch (l.kind) {
            case LayerKind::Conv:
                cache.inputs.push_back(act);
                act = conv2d_forward(act, net.weights[p], net.biases[p], net.masks[p]);
                ++p;
                break;
            case LayerKind::Pool:
                cache.inputs.push_back(act);
                act = maxpool2x2_forward(act);
                break;
            case LayerKind::Relu:
                cache.inputs.push_back(act);
                act = relu_forward(act);
                break;
            case LayerKind::Fc: {
                if (act.ndim() != 2) cache.pre_flatten_shape[i] = act.shape();
                Tensor flat = flatten_for_fc(act);
                cache.inputs.push_back(flat);
                act = fc_forward(flat, net.weights[p], net.biases[p], net.masks[p]);
                ++p;
                break;
            }
            case LayerKind::Softmax:
                fail("forward: softmax is applied by the loss, not a layer");
        }
    }
    cache.logits = std::move(act);
    return cache;
}

struct BatchGrads {
    std::vector<Tensor> weight_grads;
    std::vector<Tensor> bias_grads;
    double loss_sum = 0.0;
};

/// Forward + backward on one (sub-)batch. The logit gradient is divided by
/// `divisor` so chunk gradients add up to the full-batch mean gradient.
BatchGrads compute_grads(const NetworkArch& net, const Tensor& images,
                         const std::vector<int>& labels, size_t divisor) {
    ForwardCache cache = forward_cached(net, images);
    const LossGrad loss = softmax_cross_entropy_partial(cache.logits, labels, divisor);

    BatchGrads out;
    out.loss_sum = loss.loss;
    out.weight_grads.resize(net.num_parametric());
    out.bias_grads.resize(net.num_parametric());

    Tensor g = loss.logit_grad;
    size_t p = net.num_parametric();
    for (size_t i = net.layers.size(); i-- > 0;) {
        const LayerSpec& l = net.layers[i];
        switch (l.kind) {
            case LayerKind::Conv: {
                --p;
                LayerGrad lg = conv2d_backward(cache.inputs[i], net.weights[p],
                                               net.masks[p], g);
                out.weight_grads[p] = std::move(lg.weight_grad);
                out.bias_grads[p] = std::move(lg.bias_grad);
                g = std::move(lg.input_grad);
                break;
            }
            case LayerKind::Pool:
                g = maxpool2x2_backward(cache.inputs[i], g);
                break;
            case LayerKind::Relu:
                g = relu_backward(cache.inputs[i], g);
                break;
            case LayerKind::Fc: {
                --p;
                LayerGrad lg = fc_backward(cache.inputs[i], net.weights[p],
                                           net.masks[p], g);
                out.weight_grads[p] = std::move(lg.weight_grad);
                out.bias_grads[p] = std::move(lg.bias_grad);
                g = std::move(lg.input_grad);
                break;
            }
            case LayerKind::Softmax:
                fail("backward: softmax is applied by the loss, not a layer");
        }
        if (!cache.pre_flatten_shape[i].empty())
            g = g.reshaped(cache.pre_flatten_shape[i]);
    }
    return out;
}

/// Contiguous [begin, end) sample ranges, one per worker; empty ranges dropped.
std::vector<std::pair<size_t, size_t>> chunk_ranges(size_t n, int threads) {
    const size_t t = static_cast<size_t>(threads);
    const size_t per = (n + t - 1) / t;
    std::vector<std::pair<size_t, size_t>> ranges;
    for (size_t begin = 0; begin < n; begin += per)
        ranges.emplace_back(begin, std::min(n, begin + per));
    return ranges;
}

Tensor slice_samples(const Tensor& images, size_t begin, size_t end) {
    std::vector<size_t> shape = images.shape();
    const size_t stride = images.numel() / shape[0];
    shape[0] = end - begin;
    Tensor out(shape);
    const double* src = images.data() + begin * stride;
    std::copy(src, src + out.numel(), out.data());
    return out;
}

/// Gradients for a full batch, split into `threads` contiguous chunks reduced
/// in chunk order. Any fixed thread count is bit-reproducible; threads == 1
/// runs inline and is the reference path.
BatchGrads batch_grads(const NetworkArch& net, const Tensor& images,
                       const std::vector<int>& labels, int threads) {
    const size_t n = labels.size();
    if (threads <= 1 || n < 2) return compute_grads(net, images, labels, n);

    const std::vector<std::pair<size_t, size_t>> ranges = chunk_ranges(n, threads);
    std::vector<BatchGrads> partial(ranges.size());
    std::vector<std::thread> workers;
    for (size_t c = 0; c < ranges.size(); ++c) {
        workers.emplace_back([&, c] {
            const auto [begin, end] = ranges[c];
            const Tensor chunk_images = slice_samples(images, begin, end);
            const std::vector<int> chunk_labels(labels.begin() + static_cast<ptrdiff_t>(begin),
                                                labels.begin() + static_cast<ptrdiff_t>(end));
            partial[c] = compute_grads(net, chunk_images, chunk_labels, n);
        });
    }
    for (std::thread& w : workers) w.join();

    BatchGrads out = std::move(partial[0]);
    for (size_t c = 1; c < partial.size(); ++c) {
        out.loss_sum += partial[c].loss_sum;
        for (size_t p = 0; p < out.weight_grads.size(); ++p) {
            for (size_t i = 0; i < out.weight_grads[p].numel(); ++i)
                out.weight_grads[p][i] += partial[c].weight_grads[p][i];
            for (size_t i = 0; i < out.bias_grads[p].numel(); ++i)
                out.bias_grads[p][i] += partial[c].bias_grads[p][i];
        }
    }
    return out;
}

}  // namespace

Tensor forward(const NetworkArch& net, const Tensor& input) {
    Tensor act = input;
    size_t p = 0;
    for (const LayerSpec& l : net.layers) {
        switch (l.kind) {
            case LayerKind::Conv:
                act = conv2d_forward(act, net.weights[p], net.biases[p], net.masks[p]);
                ++p;
                break;
            case LayerKind::Pool:
                act = maxpool2x2_forward(act);
                break;
            case LayerKind::Relu:
                act = relu_forward(act);
                break;
            case LayerKind::Fc:
                act = fc_forward(flatten_for_fc(act), net.weights[p], net.biases[p],
                                 net.masks[p]);
                ++p;
                break;
            case LayerKind::Softmax:
                fail("forward: softmax is applied by the loss, not a layer");
        }
    }
    return act;
}

void train(NetworkArch& net, const Dataset& train_set, const TrainOptions& options) {
    net.check_consistency();
    require(options.epochs >= 1, "train: epochs must be >= 1, got ", options.epochs);
    require(options.threads >= 1, "train: thread count must be >= 1, got ",
            options.threads);
    require(train_set.size() > 0, "train: dataset is empty");

    std::vector<Tensor> weight_vel, bias_vel;
    for (size_t p = 0; p < net.num_parametric(); ++p) {
        weight_vel.push_back(Tensor::zeros(net.weights[p].shape()));
        bias_vel.push_back(Tensor::zeros(net.biases[p].shape()));
    }

    for (size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const std::vector<std::vector<uint32_t>> batches =
            batch_indices(train_set.size(), options.batch_size,
                          derive_seed(options.seed, epoch));
        for (const std::vector<uint32_t>& batch : batches) {
            auto [images, labels] = gather(train_set, batch);
            const BatchGrads grads = batch_grads(net, images, labels, options.threads);
            for (size_t p = 0; p < net.num_parametric(); ++p) {
                sgd_step(net.weights[p], grads.weight_grads[p], weight_vel[p],
                         options.lr, options.momentum, &net.masks[p]);
                sgd_step(net.biases[p], grads.bias_grads[p], bias_vel[p],
                         options.lr, options.momentum, nullptr);
            }
        }
        net.check_consistency();
    }
}

double evaluate(const NetworkArch& net, const Dataset& test_set,
                size_t batch_size, int threads) {
    net.check_consistency();
    require(test_set.size() > 0, "evaluate: dataset is empty");
    require(batch_size > 0, "evaluate: batch size must be positive");
    require(threads >= 1, "evaluate: thread count must be >= 1, got ", threads);

    const size_t n = test_set.size();
    auto count_correct = [&](size_t begin, size_t end) {
        size_t correct = 0;
        for (size_t start = begin; start < end; start += batch_size) {
            const size_t stop = std::min(end, start + batch_size);
            std::vector<uint32_t> idx(stop - start);
            for (size_t i = 0; i < idx.size(); ++i)
                idx[i] = static_cast<uint32_t>(start + i);
            auto [images, labels] = gather(test_set, idx);
            const Tensor logits = forward(net, images);
            const size_t K = logits.dim(1);
            for (size_t b = 0; b < labels.size(); ++b) {
                const double* row = logits.data() + b * K;
                size_t best = 0;  // ties resolve to the lowest class index
                for (size_t k = 1; k < K; ++k)
                    if (row[k] > row[best]) best = k;
                if (static_cast<int>(best) == labels[b]) ++correct;
            }
        }
        return correct;
    };

    if (threads <= 1) return static_cast<double>(count_correct(0, n)) / static_cast<double>(n);

    const std::vector<std::pair<size_t, size_t>> ranges = chunk_ranges(n, threads);
    std::vector<size_t> counts(ranges.size(), 0);
    std::vector<std::thread> workers;
    for (size_t c = 0; c < ranges.size(); ++c)
        workers.emplace_back([&, c] { counts[c] = count_correct(ranges[c].first, ranges[c].second); });
    for (std::thread& w : workers) w.join();

    size_t correct = 0;
    for (size_t c : counts) correct += c;
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace evosynth
