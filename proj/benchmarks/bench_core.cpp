// Microbenchmarks for the hot paths: the masked conv/fc kernels that dominate
// training time, and the per-generation heredity pipeline (encode, calibrate,
// sample). Run with --benchmark_min_time=2 for stable numbers.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "evosynth/data.hpp"
#include "evosynth/dna.hpp"
#include "evosynth/network.hpp"
#include "evosynth/ops.hpp"
#include "evosynth/rng.hpp"
#include "evosynth/synthesis.hpp"
#include "evosynth/tensor.hpp"
#include "evosynth/trainer.hpp"

namespace {

using namespace evosynth;

Tensor random_tensor(Rng& rng, const std::vector<size_t>& shape, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(shape);
    for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

/// Desk-scale default network, trained weights simulated by random draws.
NetworkArch default_net(uint64_t seed) {
    NetworkArch net = build_network(ArchConfig::lenet_default(), 1);
    Rng rng(seed);
    for (size_t l = 0; l < net.weights.size(); ++l)
        if (net.layers[l].parametric())
            for (size_t i = 0; i < net.weights[l].numel(); ++i)
                net.weights[l][i] = rng.uniform(-0.5, 0.5);
    return net;
}

Dataset synthetic_batch(size_t n, uint64_t seed) {
    Rng rng(seed);
    Dataset set;
    set.images = random_tensor(rng, {n, 1, 28, 28}, 0.0, 1.0);
    set.labels.resize(n);
    for (size_t i = 0; i < n; ++i)
        set.labels[i] = static_cast<int>(rng.next_index(10));
    return set;
}

void BM_Conv2dForward(benchmark::State& state) {
    const size_t batch = static_cast<size_t>(state.range(0));
    Rng rng(11);
    const Tensor input = random_tensor(rng, {batch, 8, 12, 12});
    const Tensor weights = random_tensor(rng, {16, 8, 5, 5});
    const Tensor bias = random_tensor(rng, {16});
    const Tensor mask = Tensor::ones({16, 8, 5, 5});
    for (auto _ : state)
        benchmark::DoNotOptimize(conv2d_forward(input, weights, bias, mask));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch));
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
    const size_t batch = static_cast<size_t>(state.range(0));
    Rng rng(13);
    const Tensor input = random_tensor(rng, {batch, 8, 12, 12});
    const Tensor weights = random_tensor(rng, {16, 8, 5, 5});
    const Tensor bias = random_tensor(rng, {16});
    const Tensor mask = Tensor::ones({16, 8, 5, 5});
    const Tensor out = conv2d_forward(input, weights, bias, mask);
    const Tensor cotangent = random_tensor(rng, out.shape());
    for (auto _ : state)
        benchmark::DoNotOptimize(conv2d_backward(input, weights, mask, cotangent));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch));
}
BENCHMARK(BM_Conv2dBackward)->Arg(16)->Arg(64);

void BM_FcForward(benchmark::State& state) {
    const size_t batch = static_cast<size_t>(state.range(0));
    Rng rng(17);
    const Tensor input = random_tensor(rng, {batch, 256});
    const Tensor weights = random_tensor(rng, {128, 256});
    const Tensor bias = random_tensor(rng, {128});
    const Tensor mask = Tensor::ones({128, 256});
    for (auto _ : state)
        benchmark::DoNotOptimize(fc_forward(input, weights, bias, mask));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch));
}
BENCHMARK(BM_FcForward)->Arg(16)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
    NetworkArch net = default_net(19);
    const Dataset batch = synthetic_batch(64, 23);
    TrainOptions options;
    options.epochs = 1;
    options.batch_size = 64;
    options.seed = 5;
    for (auto _ : state) {
        train(net, batch, options);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TrainStep);

void BM_EncodeDna(benchmark::State& state) {
    const NetworkArch net = default_net(29);
    const ClusterPartition partition = cluster_partition(net);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            encode_dna(net, partition, TauPolicy::percentile(0.5)));
}
BENCHMARK(BM_EncodeDna);

void BM_Calibrate(benchmark::State& state) {
    const NetworkArch net = default_net(31);
    const DnaModel dna =
        encode_dna(net, cluster_partition(net), TauPolicy::percentile(0.5));
    EnvFactors base;
    std::vector<size_t> live(net.num_parametric());
    for (size_t l = 0, p = 0; l < net.layers.size(); ++l)
        if (net.layers[l].parametric()) live[p++] = net.masks[l].numel();
    for (auto _ : state) benchmark::DoNotOptimize(calibrate(dna, base, live));
}
BENCHMARK(BM_Calibrate);

void BM_SampleOffspring(benchmark::State& state) {
    const NetworkArch net = default_net(37);
    const DnaModel dna =
        encode_dna(net, cluster_partition(net), TauPolicy::percentile(0.5));
    EnvFactors env;
    Rng rng(41);
    for (auto _ : state) benchmark::DoNotOptimize(sample_offspring(dna, env, rng));
}
BENCHMARK(BM_SampleOffspring);

}  // namespace

BENCHMARK_MAIN();
