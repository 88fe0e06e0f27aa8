#pragma once

#include <cstdint>

#include "evosynth/data.hpp"
#include "evosynth/network.hpp"

namespace evosynth {

struct TrainOptions {
    size_t epochs = 1;
    double lr = 0.01;
    double momentum = 0.9;
    size_t batch_size = 64;
    uint64_t seed = 0;  // per-epoch shuffle seeds derive from this
    int threads = 1;    // 1 = fully serial reference path
};

/// Forward pass to logits. Input [N,C,H,W]; activations are flattened
/// automatically at the first fc layer.
Tensor forward(const NetworkArch& net, const Tensor& input);

/// In-place SGD training. Masked synapses stay exactly zero throughout.
/// With threads > 1 each batch is split into `threads` contiguous chunks
/// whose gradients are reduced in chunk order, so a fixed thread count gives
/// bit-identical runs; threads == 1 is the deterministic reference.
void train(NetworkArch& net, const Dataset& train_set, const TrainOptions& options);

/// Top-1 accuracy on a dataset (argmax of logits, ties to the lowest class).
double evaluate(const NetworkArch& net, const Dataset& test_set,
                size_t batch_size = 256, int threads = 1);

}  // namespace evosynth
