#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "evosynth/config.hpp"
#include "evosynth/data.hpp"
#include "evosynth/network.hpp"

namespace evosynth {

/// Everything recorded about one generation.
struct GenerationRecord {
    uint64_t generation = 1;
    double test_accuracy = 0.0;
    std::vector<size_t> synapses_per_layer;
    size_t total_synapses = 0;
    std::vector<size_t> live_clusters_per_layer;
    double architectural_efficiency = 1.0;
    std::vector<double> cluster_efficiency_per_layer;
    double overall_cluster_efficiency = 1.0;
    uint64_t rng_seed = 0;  // sampling stream of this generation (training stream for gen 1)
    // Synthesis bookkeeping, zero for generation 1.
    std::vector<double> expected_synapses_per_layer;
    double expected_synapses = 0.0;
    double expected_std = 0.0;
};

struct EvolveHooks {
    /// Replaces test-set evaluation when set (used to script accuracies).
    std::function<double(const NetworkArch& net, uint64_t generation)> eval_override;
    /// Called after each generation is recorded.
    std::function<void(const GenerationRecord&)> on_generation;
};

struct EvolveResult {
    std::vector<GenerationRecord> records;
    NetworkArch ancestor;  // trained generation 1
    NetworkArch final_net; // last recorded generation
};

/// The evolution loop: trains the generation-1 ancestor, then repeatedly
/// encodes the parent as a DnaModel, calibrates the environment to the
/// synapse budget, samples an offspring mask set, retrains the offspring and
/// records it. Stops when the accuracy drop versus generation 1 exceeds the
/// configured threshold (that generation is still recorded) or at
/// max_generations. Fixed seed and threads=1 give bit-identical record lists.
EvolveResult evolve(const RunConfig& config, const Dataset& train_set,
                    const Dataset& test_set, const EvolveHooks& hooks = {});

}  // namespace evosynth
