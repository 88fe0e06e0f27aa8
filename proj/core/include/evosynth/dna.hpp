#pragma once

#include <string>
#include <vector>

#include "evosynth/network.hpp"
#include "evosynth/tensor.hpp"

namespace evosynth {

/// How the truncation threshold tau is chosen per layer.
struct TauPolicy {
    enum class Kind { Fixed, Percentile };
    Kind kind = Kind::Percentile;
    double value = 0.5;  // Fixed: tau itself; Percentile: p in [0,1]

    static TauPolicy fixed(double tau);
    static TauPolicy percentile(double p);

    bool operator==(const TauPolicy& other) const = default;
};

/// Per-layer slice of the genetic encoding.
struct DnaLayer {
    std::string name;
    LayerKind kind = LayerKind::Conv;
    std::vector<double> cluster_prob;  // per cluster, 0 for clusters with no live synapse
    Tensor synapse_prob;               // weight-shaped, exactly 0 where the parent mask is 0
    double Z = 0.0;                    // cluster normalizer: max truncated cluster sum
    double z = 0.0;                    // synapse normalizer: max live |w|
    double tau = 0.0;                  // truncation threshold actually used
};

/// The probabilistic encoding of one generation: synthesis probabilities for
/// every cluster and every synapse, conditioned on the parent's weights.
struct DnaModel {
    std::vector<DnaLayer> layers;
    ClusterPartition partition;
    std::vector<size_t> parent_live_synapses;  // per parametric layer
};

/// Magnitude truncation: |w| if |w| >= tau, else 0.
double truncate_weight(double w, double tau);

/// exp(sum/Z - 1) for a cluster's truncated magnitude sum. Requires
/// 0 <= sum <= Z; sum above the normalizer is a misuse and throws.
double cluster_synthesis_prob(double truncated_sum, double Z);

/// exp(|w|/z - 1) for a single synapse. Requires |w| <= z.
double synapse_synthesis_prob(double w, double z);

/// Builds the DnaModel of a trained parent. Per layer: z is the max live
/// synapse magnitude, Z the max truncated cluster sum, so the strongest
/// synapse and the strongest cluster get probability exactly 1. Synapses the
/// parent pruned get probability exactly 0, as do clusters with no live
/// member — pruned lineages never come back.
DnaModel encode_dna(const NetworkArch& net, const ClusterPartition& partition,
                    const TauPolicy& tau_policy);

/// Writes the model as a structured-text (JSON) file for inspection and test
/// fixtures: per layer the normalizers, tau, and both probability tables.
void write_dna_text(const DnaModel& dna, const std::string& path);

}  // namespace evosynth
