#include "evosynth/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "evosynth/error.hpp"
#include "evosynth/rng.hpp"

namespace evosynth {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Pool: return "pool";
        case LayerKind::Fc: return "fc";
        case LayerKind::Relu: return "relu";
        case LayerKind::Softmax: return "softmax";
    }
    fail("layer_kind_name: unknown layer kind ", static_cast<int>(kind));
}

ArchConfig ArchConfig::lenet_default() {
    ArchConfig c;
    c.input_channels = 1;
    c.input_h = 28;
    c.input_w = 28;
    c.layers = {
        {LayerKind::Conv, 8, 5},  {LayerKind::Relu, 0, 0}, {LayerKind::Pool, 0, 0},
        {LayerKind::Conv, 16, 5}, {LayerKind::Relu, 0, 0}, {LayerKind::Pool, 0, 0},
        {LayerKind::Fc, 128, 0},  {LayerKind::Relu, 0, 0}, {LayerKind::Fc, 10, 0},
    };
    return c;
}

std::vector<std::string> NetworkArch::parametric_names() const {
    std::vector<std::string> names;
    for (const LayerSpec& l : layers)
        if (l.parametric()) names.push_back(l.name);
    return names;
}

std::vector<size_t> NetworkArch::parametric_layer_indices() const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < layers.size(); ++i)
        if (layers[i].parametric()) idx.push_back(i);
    return idx;
}

void NetworkArch::check_consistency() const {
    require(generation >= 1, "network: generation must be >= 1, got ", generation);
    const std::vector<size_t> pidx = parametric_layer_indices();
    require(pidx.size() == weights.size() && weights.size() == biases.size() &&
                biases.size() == masks.size(),
            "network: ", pidx.size(), " parametric layers but ", weights.size(),
            " weight tensors, ", biases.size(), " bias tensors, ", masks.size(),
            " mask tensors");
    for (size_t p = 0; p < pidx.size(); ++p) {
        const LayerSpec& l = layers[pidx[p]];
        const std::vector<size_t> expect =
            l.kind == LayerKind::Conv
                ? std::vector<size_t>{l.out_channels, l.in_channels, l.kernel_h, l.kernel_w}
                : std::vector<size_t>{l.out_features, l.in_features};
        require(weights[p].shape() == expect, "network: layer ", l.name,
                " weight shape ", shape_str(weights[p].shape()), ", expected ",
                shape_str(expect));
        require(masks[p].same_shape(weights[p]), "network: layer ", l.name,
                " mask shape ", shape_str(masks[p].shape()),
                " does not match weight shape ", shape_str(weights[p].shape()));
        const size_t bias_n = l.kind == LayerKind::Conv ? l.out_channels : l.out_features;
        require(biases[p].numel() == bias_n, "network: layer ", l.name, " bias size ",
                biases[p].numel(), ", expected ", bias_n);
        if (!masks[p].is_binary())
            fail("network: layer ", l.name, " mask has entries other than 0 and 1");
        for (size_t i = 0; i < weights[p].numel(); ++i)
            if (masks[p][i] == 0.0 && weights[p][i] != 0.0)
                fail("network: layer ", l.name, " weight at flat index ", i, " is ",
                     weights[p][i], " under a zero mask; pruned synapses must be 0");
        if (generation == 1)
            for (size_t i = 0; i < masks[p].numel(); ++i)
                if (masks[p][i] != 1.0)
                    fail("network: generation-1 layer ", l.name,
                         " has a pruned synapse at flat index ", i);
        require(weights[p].all_finite(), "network: layer ", l.name,
                " has non-finite weights");
        require(biases[p].all_finite(), "network: layer ", l.name,
                " has non-finite biases");
    }
}

namespace {

/// Shape propagation: resolves each config entry to a LayerSpec, checking that
/// spatial dims stay positive and that an fc layer sees a flattened input.
std::vector<LayerSpec> resolve_layers(const ArchConfig& config) {
    require(!config.layers.empty(), "arch: layer list is empty");
    require(config.input_channels > 0 && config.input_h > 0 && config.input_w > 0,
            "arch: input dims must be positive, got ", config.input_channels, "x",
            config.input_h, "x", config.input_w);

    std::vector<LayerSpec> out;
    size_t c = config.input_channels, h = config.input_h, w = config.input_w;
    bool spatial = true;  // false once an fc layer flattened the activations
    size_t features = 0;
    int conv_seq = 0, fc_seq = 0;

    for (size_t i = 0; i < config.layers.size(); ++i) {
        const ArchLayerConfig& lc = config.layers[i];
        LayerSpec spec;
        spec.kind = lc.kind;
        switch (lc.kind) {
            case LayerKind::Conv: {
                require(spatial, "arch: layer ", i, " is conv after an fc layer");
                require(lc.out > 0, "arch: conv layer ", i, " has out_channels 0");
                require(lc.kernel > 0, "arch: conv layer ", i, " has kernel 0");
                require(lc.kernel <= h && lc.kernel <= w, "arch: conv layer ", i,
                        " kernel ", lc.kernel, " exceeds input ", h, "x", w);
                spec.name = "conv" + std::to_string(++conv_seq);
                spec.out_channels = lc.out;
                spec.in_channels = c;
                spec.kernel_h = spec.kernel_w = lc.kernel;
                c = lc.out;
                h = h - lc.kernel + 1;
                w = w - lc.kernel + 1;
                break;
            }
            case LayerKind::Pool: {
                require(spatial, "arch: layer ", i, " is pool after an fc layer");
                require(h >= 2 && w >= 2, "arch: pool layer ", i, " input ", h, "x", w,
                        " too small for a 2x2 window");
                h /= 2;
                w /= 2;
                break;
            }
            case LayerKind::Fc: {
                require(lc.out > 0, "arch: fc layer ", i, " has out_features 0");
                const size_t in = spatial ? c * h * w : features;
                spec.name = "fc" + std::to_string(++fc_seq);
                spec.out_features = lc.out;
                spec.in_features = in;
                spatial = false;
                features = lc.out;
                break;
            }
            case LayerKind::Relu:
                break;
            case LayerKind::Softmax:
                fail("arch: layer ", i,
                     ": softmax is applied by the loss, not listed as a layer");
        }
        out.push_back(spec);
    }
    require(!spatial, "arch: network has no fc layer; the head must be fully connected");
    return out;
}

}  // namespace

NetworkArch build_network(const ArchConfig& config, uint64_t seed) {
    NetworkArch net;
    net.config = config;
    net.layers = resolve_layers(config);
    net.generation = 1;

    Rng rng(seed);
    for (const LayerSpec& l : net.layers) {
        if (!l.parametric()) continue;
        size_t fan_in, fan_out;
        std::vector<size_t> shape;
        size_t bias_n;
        if (l.kind == LayerKind::Conv) {
            fan_in = l.in_channels * l.kernel_h * l.kernel_w;
            fan_out = l.out_channels * l.kernel_h * l.kernel_w;
            shape = {l.out_channels, l.in_channels, l.kernel_h, l.kernel_w};
            bias_n = l.out_channels;
        } else {
            fan_in = l.in_features;
            fan_out = l.out_features;
            shape = {l.out_features, l.in_features};
            bias_n = l.out_features;
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor w(shape);
        for (size_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Tensor::zeros({bias_n}));
        net.masks.push_back(Tensor::ones(shape));
    }
    net.check_consistency();
    return net;
}

SynapseCounts count_synapses(const NetworkArch& net) {
    SynapseCounts counts;
    for (const Tensor& mask : net.masks) {
        size_t live = 0;
        for (size_t i = 0; i < mask.numel(); ++i)
            if (mask[i] != 0.0) ++live;
        counts.per_layer.push_back(live);
        counts.total += live;
    }
    return counts;
}

size_t ClusterPartition::total_clusters() const {
    size_t total = 0;
    for (size_t n : cluster_count) total += n;
    return total;
}

ClusterPartition cluster_partition(const NetworkArch& net) {
    ClusterPartition part;
    const std::vector<size_t> pidx = net.parametric_layer_indices();
    for (size_t p = 0; p < pidx.size(); ++p) {
        const LayerSpec& l = net.layers[pidx[p]];
        const size_t numel = net.weights[p].numel();
        size_t clusters, cluster_size;
        if (l.kind == LayerKind::Conv) {
            // one cluster per (out_channel, in_channel) kernel slice
            clusters = l.out_channels * l.in_channels;
            cluster_size = l.kernel_h * l.kernel_w;
        } else {
            // one cluster per output neuron: its fan-in row
            clusters = l.out_features;
            cluster_size = l.in_features;
        }
        std::vector<uint32_t> assign(numel);
        std::vector<uint32_t> offsets(clusters + 1);
        std::vector<uint32_t> members(numel);
        // row-major weight layout puts each cluster's coordinates contiguous,
        // so CSR membership is just the identity walk
        for (size_t i = 0; i < numel; ++i) {
            assign[i] = static_cast<uint32_t>(i / cluster_size);
            members[i] = static_cast<uint32_t>(i);
        }
        for (size_t cidx = 0; cidx <= clusters; ++cidx)
            offsets[cidx] = static_cast<uint32_t>(cidx * cluster_size);
        part.cluster_count.push_back(clusters);
        part.assignment.push_back(std::move(assign));
        part.member_offsets.push_back(std::move(offsets));
        part.members.push_back(std::move(members));
    }
    return part;
}

ClusterCounts count_live_clusters(const NetworkArch& net, const ClusterPartition& partition) {
    require(partition.cluster_count.size() == net.num_parametric(),
            "count_live_clusters: partition has ", partition.cluster_count.size(),
            " layers, network has ", net.num_parametric());
    ClusterCounts counts;
    for (size_t p = 0; p < net.num_parametric(); ++p) {
        const Tensor& mask = net.masks[p];
        const std::vector<uint32_t>& offsets = partition.member_offsets[p];
        const std::vector<uint32_t>& members = partition.members[p];
        size_t live = 0;
        for (size_t c = 0; c + 1 < offsets.size(); ++c) {
            for (uint32_t m = offsets[c]; m < offsets[c + 1]; ++m) {
                if (mask[members[m]] != 0.0) {
                    ++live;
                    break;
                }
            }
        }
        counts.per_layer.push_back(live);
        counts.total += live;
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Checkpoint format (little-endian):
//   magic "EVOS", u32 version=1, u64 generation,
//   u64 input_channels, u64 input_h, u64 input_w,
//   u64 layer_count, then per config layer: u32 kind, u64 out, u64 kernel,
//   u64 parametric_count, then per parametric layer:
//     u64 ndim, u64 dims[ndim], f64 weights[numel],
//     u64 bias_n, f64 biases[bias_n], f64 masks[numel].
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'E', 'V', 'O', 'S'};
constexpr uint32_t kCkptVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::ifstream& f, const std::string& path, const char* what) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!f) fail("checkpoint ", path, ": truncated while reading ", what);
    return v;
}

void write_doubles(std::ofstream& f, const Tensor& t) {
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

void read_doubles(std::ifstream& f, const std::string& path, Tensor& t, const char* what) {
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!f) fail("checkpoint ", path, ": truncated while reading ", what);
}

}  // namespace

void save_checkpoint(const NetworkArch& net, const std::string& path) {
    net.check_consistency();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail("checkpoint: cannot open ", path, " for writing");

    f.write(kCkptMagic, 4);
    write_pod(f, kCkptVersion);
    write_pod(f, net.generation);
    write_pod(f, static_cast<uint64_t>(net.config.input_channels));
    write_pod(f, static_cast<uint64_t>(net.config.input_h));
    write_pod(f, static_cast<uint64_t>(net.config.input_w));
    write_pod(f, static_cast<uint64_t>(net.config.layers.size()));
    for (const ArchLayerConfig& lc : net.config.layers) {
        write_pod(f, static_cast<uint32_t>(lc.kind));
        write_pod(f, static_cast<uint64_t>(lc.out));
        write_pod(f, static_cast<uint64_t>(lc.kernel));
    }
    write_pod(f, static_cast<uint64_t>(net.num_parametric()));
    for (size_t p = 0; p < net.num_parametric(); ++p) {
        const Tensor& w = net.weights[p];
        write_pod(f, static_cast<uint64_t>(w.ndim()));
        for (size_t d = 0; d < w.ndim(); ++d) write_pod(f, static_cast<uint64_t>(w.dim(d)));
        write_doubles(f, w);
        write_pod(f, static_cast<uint64_t>(net.biases[p].numel()));
        write_doubles(f, net.biases[p]);
        write_doubles(f, net.masks[p]);
    }
    f.flush();
    if (!f) fail("checkpoint: write to ", path, " failed");
}

NetworkArch load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("checkpoint: cannot open ", path);

    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kCkptMagic, 4) != 0)
        fail("checkpoint ", path, ": bad magic; not a checkpoint file");
    const uint32_t version = read_pod<uint32_t>(f, path, "version");
    if (version != kCkptVersion)
        fail("checkpoint ", path, ": version ", version, " not supported (expected ",
             kCkptVersion, ")");

    ArchConfig config;
    const uint64_t generation = read_pod<uint64_t>(f, path, "generation");
    config.input_channels = read_pod<uint64_t>(f, path, "input_channels");
    config.input_h = read_pod<uint64_t>(f, path, "input_h");
    config.input_w = read_pod<uint64_t>(f, path, "input_w");
    const uint64_t layer_count = read_pod<uint64_t>(f, path, "layer count");
    require(layer_count <= 1024, "checkpoint ", path, ": implausible layer count ",
            layer_count);
    for (uint64_t i = 0; i < layer_count; ++i) {
        ArchLayerConfig lc;
        const uint32_t kind = read_pod<uint32_t>(f, path, "layer kind");
        require(kind <= static_cast<uint32_t>(LayerKind::Softmax), "checkpoint ", path,
                ": bad layer kind ", kind);
        lc.kind = static_cast<LayerKind>(kind);
        lc.out = read_pod<uint64_t>(f, path, "layer out");
        lc.kernel = read_pod<uint64_t>(f, path, "layer kernel");
        config.layers.push_back(lc);
    }

    NetworkArch net;
    net.config = config;
    net.layers = resolve_layers(config);
    net.generation = generation;

    const uint64_t parametric = read_pod<uint64_t>(f, path, "parametric count");
    const size_t expected = net.parametric_layer_indices().size();
    require(parametric == expected, "checkpoint ", path, ": ", parametric,
            " parametric layers stored, architecture has ", expected);
    for (uint64_t p = 0; p < parametric; ++p) {
        const uint64_t ndim = read_pod<uint64_t>(f, path, "tensor rank");
        require(ndim >= 1 && ndim <= 4, "checkpoint ", path, ": bad tensor rank ", ndim);
        std::vector<size_t> shape(ndim);
        for (uint64_t d = 0; d < ndim; ++d)
            shape[d] = read_pod<uint64_t>(f, path, "tensor dim");
        Tensor w(shape);
        read_doubles(f, path, w, "weights");
        const uint64_t bias_n = read_pod<uint64_t>(f, path, "bias size");
        Tensor b({bias_n});
        read_doubles(f, path, b, "biases");
        Tensor m(shape);
        read_doubles(f, path, m, "masks");
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
        net.masks.push_back(std::move(m));
    }
    net.check_consistency();
    return net;
}

}  // namespace evosynth
