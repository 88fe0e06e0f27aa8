#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evosynth/tensor.hpp"

namespace evosynth {

enum class LayerKind { Conv, Pool, Fc, Relu, Softmax };

const char* layer_kind_name(LayerKind kind);

/// One entry of the architecture description the user writes.
struct ArchLayerConfig {
    LayerKind kind = LayerKind::Conv;
    size_t out = 0;     // conv: out_channels, fc: out_features
    size_t kernel = 0;  // conv only, square kernels

    bool operator==(const ArchLayerConfig& other) const = default;
};

struct ArchConfig {
    size_t input_channels = 1;
    size_t input_h = 28;
    size_t input_w = 28;
    std::vector<ArchLayerConfig> layers;

    /// conv(8@5x5)-relu-pool-conv(16@5x5)-relu-pool-fc(128)-relu-fc(10).
    static ArchConfig lenet_default();

    bool operator==(const ArchConfig& other) const = default;
};

/// Fully resolved layer: dimensions filled in by shape propagation.
struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    std::string name;  // conv1, conv2, ..., fc1, ... (parametric layers only)
    // conv
    size_t out_channels = 0, in_channels = 0, kernel_h = 0, kernel_w = 0;
    // fc
    size_t out_features = 0, in_features = 0;

    bool parametric() const { return kind == LayerKind::Conv || kind == LayerKind::Fc; }
};

/// A network generation: layer specs plus, per parametric layer, the weight
/// tensor, bias vector, and {0,1} synapse mask.
///
/// Invariants kept by every operation that produces one of these:
///  - mask shape equals weight shape,
///  - weights are exactly 0.0 wherever the mask is 0,
///  - generation >= 1, and a generation-1 network has all-ones masks.
struct NetworkArch {
    ArchConfig config;
    std::vector<LayerSpec> layers;
    // Indexed by parametric layer (order of appearance).
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    std::vector<Tensor> masks;
    uint64_t generation = 1;

    size_t num_parametric() const { return weights.size(); }
    std::vector<std::string> parametric_names() const;
    /// Indices into `layers` of the parametric layers, in order.
    std::vector<size_t> parametric_layer_indices() const;

    /// Throws if any of the struct invariants is violated.
    void check_consistency() const;
};

/// Builds the generation-1 ancestor: all-ones masks, zero biases, weights
/// uniform in [-b, b] with b = sqrt(6 / (fan_in + fan_out)).
NetworkArch build_network(const ArchConfig& config, uint64_t seed);

struct SynapseCounts {
    std::vector<size_t> per_layer;  // live (mask==1) synapses per parametric layer
    size_t total = 0;
};

/// Exact live-synapse counts (non-zero mask entries).
SynapseCounts count_synapses(const NetworkArch& net);

/// Partition of every weight coordinate into synaptic clusters.
/// Conv layer: one cluster per (out_channel, in_channel) pair — the 2D kernel
/// slice. Fc layer: one cluster per output neuron (its fan-in row).
struct ClusterPartition {
    // All vectors indexed by parametric layer.
    std::vector<size_t> cluster_count;
    std::vector<std::vector<uint32_t>> assignment;      // flat coord -> cluster id
    std::vector<std::vector<uint32_t>> member_offsets;  // CSR: cluster -> members range
    std::vector<std::vector<uint32_t>> members;         // flat coords, cluster-major

    size_t total_clusters() const;
};

ClusterPartition cluster_partition(const NetworkArch& net);

struct ClusterCounts {
    std::vector<size_t> per_layer;  // clusters with >= 1 live synapse
    size_t total = 0;
};

ClusterCounts count_live_clusters(const NetworkArch& net, const ClusterPartition& partition);

// Versioned binary checkpoint holding arch config, generation, weights,
// biases and masks. Round-trips exactly.
void save_checkpoint(const NetworkArch& net, const std::string& path);
NetworkArch load_checkpoint(const std::string& path);

}  // namespace evosynth
