#include "evosynth/dna.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "evosynth/error.hpp"

namespace evosynth {

TauPolicy TauPolicy::fixed(double tau) {
    require(tau >= 0.0, "tau policy: fixed threshold must be >= 0, got ", tau);
    return TauPolicy{Kind::Fixed, tau};
}

TauPolicy TauPolicy::percentile(double p) {
    require(p >= 0.0 && p <= 1.0, "tau policy: percentile must be in [0,1], got ", p);
    return TauPolicy{Kind::Percentile, p};
}

double truncate_weight(double w, double tau) {
    const double mag = std::fabs(w);
    return mag >= tau ? mag : 0.0;
}

double cluster_synthesis_prob(double truncated_sum, double Z) {
    require(Z > 0.0, "cluster probability: normalizer Z must be positive, got ", Z);
    require(truncated_sum >= 0.0, "cluster probability: truncated sum ", truncated_sum,
            " is negative");
    require(truncated_sum <= Z, "cluster probability: truncated sum ", truncated_sum,
            " exceeds normalizer ", Z);
    return std::exp(truncated_sum / Z - 1.0);
}

double synapse_synthesis_prob(double w, double z) {
    require(z > 0.0, "synapse probability: normalizer z must be positive, got ", z);
    const double mag = std::fabs(w);
    require(mag <= z, "synapse probability: |w| = ", mag, " exceeds normalizer ", z);
    return std::exp(mag / z - 1.0);
}

namespace {

/// tau for one layer under the given policy. Percentile: the p-th order
/// statistic of live synapse magnitudes, index floor(p*n) clamped to n-1.
double resolve_tau(const TauPolicy& policy, const Tensor& weights, const Tensor& mask) {
    if (policy.kind == TauPolicy::Kind::Fixed) return policy.value;
    std::vector<double> mags;
    mags.reserve(weights.numel());
    for (size_t i = 0; i < weights.numel(); ++i)
        if (mask[i] != 0.0) mags.push_back(std::fabs(weights[i]));
    require(!mags.empty(), "encode: cannot take a magnitude percentile of a layer "
                           "with no live synapses");
    std::sort(mags.begin(), mags.end());
    size_t idx = static_cast<size_t>(policy.value * static_cast<double>(mags.size()));
    if (idx >= mags.size()) idx = mags.size() - 1;
    return mags[idx];
}

}  // namespace

DnaModel encode_dna(const NetworkArch& net, const ClusterPartition& partition,
                    const TauPolicy& tau_policy) {
    net.check_consistency();
    require(partition.cluster_count.size() == net.num_parametric(),
            "encode: partition has ", partition.cluster_count.size(),
            " layers, network has ", net.num_parametric());

    DnaModel dna;
    dna.partition = partition;
    const std::vector<size_t> pidx = net.parametric_layer_indices();

    for (size_t p = 0; p < net.num_parametric(); ++p) {
        const LayerSpec& spec = net.layers[pidx[p]];
        const Tensor& w = net.weights[p];
        const Tensor& mask = net.masks[p];
        const std::vector<uint32_t>& offsets = partition.member_offsets[p];
        const std::vector<uint32_t>& members = partition.members[p];
        const size_t clusters = partition.cluster_count[p];

        DnaLayer layer;
        layer.name = spec.name;
        layer.kind = spec.kind;
        layer.tau = resolve_tau(tau_policy, w, mask);

        // Normalizers first: z over live synapses, Z over truncated cluster sums.
        size_t live = 0;
        double z = 0.0;
        for (size_t i = 0; i < w.numel(); ++i) {
            if (mask[i] == 0.0) continue;
            ++live;
            z = std::max(z, std::fabs(w[i]));
        }
        require(live > 0, "encode: layer ", spec.name, " has no live synapses");
        require(z > 0.0, "encode: layer ", spec.name,
                " has all-zero live weights; synapse normalizer is degenerate");

        std::vector<double> sums(clusters, 0.0);
        double Z = 0.0;
        for (size_t c = 0; c < clusters; ++c) {
            double s = 0.0;
            for (uint32_t m = offsets[c]; m < offsets[c + 1]; ++m) {
                const uint32_t coord = members[m];
                if (mask[coord] != 0.0) s += truncate_weight(w[coord], layer.tau);
            }
            sums[c] = s;
            Z = std::max(Z, s);
        }
        require(Z > 0.0, "encode: layer ", spec.name,
                " has truncated sum 0 in every cluster; raise-or-lower tau (",
                layer.tau, ") leaves nothing to encode");
        layer.Z = Z;
        layer.z = z;

        layer.cluster_prob.resize(clusters);
        for (size_t c = 0; c < clusters; ++c) {
            bool any_live = false;
            for (uint32_t m = offsets[c]; m < offsets[c + 1]; ++m)
                if (mask[members[m]] != 0.0) {
                    any_live = true;
                    break;
                }
            layer.cluster_prob[c] = any_live ? cluster_synthesis_prob(sums[c], Z) : 0.0;
        }

        layer.synapse_prob = Tensor(w.shape());
        for (size_t i = 0; i < w.numel(); ++i)
            layer.synapse_prob[i] = mask[i] == 0.0 ? 0.0 : synapse_synthesis_prob(w[i], z);

        dna.parent_live_synapses.push_back(live);
        dna.layers.push_back(std::move(layer));
    }
    return dna;
}

void write_dna_text(const DnaModel& dna, const std::string& path) {
    nlohmann::json doc;
    doc["layers"] = nlohmann::json::array();
    for (const DnaLayer& layer : dna.layers) {
        nlohmann::json jl;
        jl["name"] = layer.name;
        jl["kind"] = layer_kind_name(layer.kind);
        jl["tau"] = layer.tau;
        jl["Z"] = layer.Z;
        jl["z"] = layer.z;
        jl["cluster_prob"] = layer.cluster_prob;
        jl["synapse_prob_shape"] = layer.synapse_prob.shape();
        std::vector<double> flat(layer.synapse_prob.data(),
                                 layer.synapse_prob.data() + layer.synapse_prob.numel());
        jl["synapse_prob"] = flat;
        doc["layers"].push_back(std::move(jl));
    }
    doc["parent_live_synapses"] = dna.parent_live_synapses;

    std::ofstream f(path, std::ios::trunc);
    if (!f) fail("dna: cannot open ", path, " for writing");
    f << doc.dump(2) << "\n";
    if (!f) fail("dna: write to ", path, " failed");
}

}  // namespace evosynth
