#include "evosynth/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "evosynth/dna.hpp"
#include "evosynth/error.hpp"
#include "evosynth/metrics.hpp"
#include "evosynth/rng.hpp"
#include "evosynth/synthesis.hpp"
#include "evosynth/trainer.hpp"

namespace evosynth {

namespace {

// Seed streams: every random decision draws from its own derived stream so
// that, e.g., adding a retraining epoch cannot shift the sampling draws of a
// later generation. Stream index = generation * 4 + tag.
enum SeedTag : uint64_t { TagInit = 0, TagSample = 1, TagTrain = 2, TagColdInit = 3 };

uint64_t stream_seed(uint64_t master, uint64_t generation, SeedTag tag) {
    return derive_seed(master, generation * 4 + tag);
}

size_t min_live_synapses(const std::vector<Tensor>& masks) {
    size_t min_live = SIZE_MAX;
    for (const Tensor& mask : masks) {
        size_t live = 0;
        for (size_t i = 0; i < mask.numel(); ++i)
            if (mask[i] != 0.0) ++live;
        min_live = std::min(min_live, live);
    }
    return min_live;
}

/// Draws offspring masks, retrying with a re-derived seed if sampling happens
/// to kill a whole layer (possible but rare at the default budget). A layer
/// with zero live synapses cannot be trained or re-encoded, so it is treated
/// as a failed draw rather than a valid offspring.
std::vector<Tensor> sample_viable_offspring(const DnaModel& dna, const EnvFactors& env,
                                            uint64_t sample_seed, uint64_t generation) {
    constexpr int kMaxAttempts = 16;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(sample_seed, static_cast<uint64_t>(attempt)));
        std::vector<Tensor> masks = sample_offspring(dna, env, rng);
        if (min_live_synapses(masks) > 0) return masks;
    }
    fail("evolve: generation ", generation, " sampling produced a dead layer in ",
         kMaxAttempts, " consecutive draws; the budget has starved the network");
}

/// Assembles the offspring network for the sampled masks. Warm inheritance
/// keeps the parent's weights and biases at surviving synapses; cold draws
/// fresh initial weights (masked) and zero biases.
NetworkArch make_offspring(const NetworkArch& parent, std::vector<Tensor> masks,
                           Inheritance inheritance, uint64_t cold_seed,
                           uint64_t generation) {
    NetworkArch child = parent;
    child.generation = generation;
    child.masks = std::move(masks);
    if (inheritance == Inheritance::Cold) {
        NetworkArch fresh = build_network(parent.config, cold_seed);
        child.weights = std::move(fresh.weights);
        child.biases = std::move(fresh.biases);
    }
    for (size_t p = 0; p < child.num_parametric(); ++p)
        for (size_t i = 0; i < child.weights[p].numel(); ++i)
            if (child.masks[p][i] == 0.0) child.weights[p][i] = 0.0;
    child.check_consistency();
    return child;
}

}  // namespace

EvolveResult evolve(const RunConfig& config, const Dataset& train_set,
                    const Dataset& test_set, const EvolveHooks& hooks) {
    config.validate();

    auto eval_net = [&](const NetworkArch& net, uint64_t generation) {
        if (hooks.eval_override) return hooks.eval_override(net, generation);
        return evaluate(net, test_set, 256, config.threads);
    };
    auto train_options = [&](size_t epochs, uint64_t generation) {
        TrainOptions opt;
        opt.epochs = epochs;
        opt.lr = config.lr;
        opt.momentum = config.momentum;
        opt.batch_size = config.batch_size;
        opt.seed = stream_seed(config.seed, generation, TagTrain);
        opt.threads = config.threads;
        return opt;
    };

    EvolveResult result;

    // Generation 1: the densely connected ancestor.
    NetworkArch net = build_network(config.arch, stream_seed(config.seed, 1, TagInit));
    train(net, train_set, train_options(config.ancestor_epochs, 1));
    const ClusterPartition partition = cluster_partition(net);
    const SynapseCounts ancestor_synapses = count_synapses(net);
    const std::vector<size_t> ancestor_clusters = partition.cluster_count;

    GenerationRecord first;
    first.generation = 1;
    first.test_accuracy = eval_net(net, 1);
    first.synapses_per_layer = ancestor_synapses.per_layer;
    first.total_synapses = ancestor_synapses.total;
    first.live_clusters_per_layer = count_live_clusters(net, partition).per_layer;
    first.architectural_efficiency = 1.0;
    first.cluster_efficiency_per_layer.assign(net.num_parametric(), 1.0);
    first.overall_cluster_efficiency = 1.0;
    first.rng_seed = stream_seed(config.seed, 1, TagTrain);
    first.expected_synapses_per_layer.assign(net.num_parametric(), 0.0);
    result.records.push_back(first);
    if (hooks.on_generation) hooks.on_generation(result.records.back());

    result.ancestor = net;
    const double ancestor_accuracy = first.test_accuracy;

    for (uint64_t g = 2; g <= config.max_generations; ++g) {
        // Encode the parent, press the environment down to the budget, sample.
        const DnaModel dna = encode_dna(net, partition, config.tau);
        EnvFactors base;
        base.budget = config.budget;
        base.mode = config.mode;
        const EnvFactors env = calibrate(dna, base, dna.parent_live_synapses);
        const ExpectedCount expected = expected_synapse_count(dna, env);

        const uint64_t sample_seed = stream_seed(config.seed, g, TagSample);
        std::vector<Tensor> masks = sample_viable_offspring(dna, env, sample_seed, g);
        net = make_offspring(net, std::move(masks), config.inheritance,
                             stream_seed(config.seed, g, TagColdInit), g);
        train(net, train_set, train_options(config.generation_epochs, g));

        GenerationRecord record;
        record.generation = g;
        record.test_accuracy = eval_net(net, g);
        const SynapseCounts synapses = count_synapses(net);
        record.synapses_per_layer = synapses.per_layer;
        record.total_synapses = synapses.total;
        record.live_clusters_per_layer = count_live_clusters(net, partition).per_layer;
        record.architectural_efficiency =
            architectural_efficiency(ancestor_synapses.total, synapses.total);
        const ClusterEfficiency ceff =
            cluster_efficiency(ancestor_clusters, record.live_clusters_per_layer);
        record.cluster_efficiency_per_layer = ceff.per_layer;
        record.overall_cluster_efficiency = ceff.overall;
        record.rng_seed = sample_seed;
        record.expected_synapses_per_layer = expected.per_layer;
        record.expected_synapses = expected.total;
        record.expected_std = std::sqrt(expected.variance_total);
        result.records.push_back(record);
        if (hooks.on_generation) hooks.on_generation(result.records.back());

        // Environmental stop: a drop beyond the threshold ends the lineage;
        // the violating generation stays in the record.
        if (ancestor_accuracy - record.test_accuracy > config.accuracy_drop_threshold)
            break;
    }

    result.final_net = net;
    return result;
}

}  // namespace evosynth
