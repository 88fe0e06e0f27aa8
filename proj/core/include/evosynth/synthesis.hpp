#pragma once

#include <cstdint>
#include <vector>

#include "evosynth/dna.hpp"
#include "evosynth/rng.hpp"

namespace evosynth {

enum class EncodingMode { ClusterDriven, SynapseOnly };

const char* encoding_mode_name(EncodingMode mode);

/// Environmental selection pressure. The effective probability of a cluster is
/// min(1, cluster_scale * P(cluster)), of a synapse min(1, synapse_scale *
/// P(synapse)); in SynapseOnly mode the cluster factor is identically 1.
struct EnvFactors {
    double budget = 0.8;  // offspring expected synapse count <= budget * parent live count
    EncodingMode mode = EncodingMode::ClusterDriven;
    // Per parametric layer; empty means uncalibrated (treated as all ones).
    std::vector<double> cluster_scale;
    std::vector<double> synapse_scale;
};

struct ExpectedCount {
    std::vector<double> per_layer;
    std::vector<double> variance_per_layer;
    double total = 0.0;
    double variance_total = 0.0;
};

/// Expected number of live synapses an offspring sampled from (dna, env)
/// carries, with exact variance: per cluster the count is
/// Bernoulli(q_c) * sum_i Bernoulli(q_i), clusters independent.
ExpectedCount expected_synapse_count(const DnaModel& dna, const EnvFactors& env);

/// Finds per-layer scales so the expected synapse count meets
/// budget * parent_live(layer) to relative tolerance 1e-6. One multiplier is
/// bisected per layer and split evenly across the cluster and synapse factors
/// (cluster_scale == synapse_scale in ClusterDriven mode); if expectation at
/// scale 1 is already below target the scales clamp at 1, so effective
/// probabilities never exceed their encoded values.
EnvFactors calibrate(const DnaModel& dna, const EnvFactors& base,
                     const std::vector<size_t>& parent_live_per_layer);

/// Draws one offspring mask set. Per cluster (ascending id): Bernoulli(q_c);
/// a dead cluster zeroes all members, a live one draws Bernoulli(q_i) per
/// member in ascending coordinate order. SynapseOnly mode skips the cluster
/// draw. The result is always a subset of the parent mask.
std::vector<Tensor> sample_offspring(const DnaModel& dna, const EnvFactors& env, Rng& rng);

}  // namespace evosynth
