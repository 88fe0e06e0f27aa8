#include "evosynth/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "evosynth/error.hpp"

namespace evosynth {

const char* encoding_mode_name(EncodingMode mode) {
    switch (mode) {
        case EncodingMode::ClusterDriven: return "cluster_driven";
        case EncodingMode::SynapseOnly: return "synapse_only";
    }
    fail("encoding_mode_name: unknown mode ", static_cast<int>(mode));
}

namespace {

double clamp_prob(double scale, double p) {
    return std::min(1.0, scale * p);
}

void check_env(const DnaModel& dna, const EnvFactors& env) {
    require(env.budget > 0.0 && env.budget <= 1.0,
            "environment: budget must be in (0,1], got ", env.budget);
    const size_t L = dna.layers.size();
    require(env.cluster_scale.empty() || env.cluster_scale.size() == L,
            "environment: ", env.cluster_scale.size(), " cluster scales for ", L,
            " layers");
    require(env.synapse_scale.empty() || env.synapse_scale.size() == L,
            "environment: ", env.synapse_scale.size(), " synapse scales for ", L,
            " layers");
    for (double s : env.cluster_scale)
        require(s >= 0.0, "environment: cluster scale ", s, " is negative");
    for (double s : env.synapse_scale)
        require(s >= 0.0, "environment: synapse scale ", s, " is negative");
}

double scale_at(const std::vector<double>& scales, size_t layer) {
    return scales.empty() ? 1.0 : scales[layer];
}

}  // namespace

ExpectedCount expected_synapse_count(const DnaModel& dna, const EnvFactors& env) {
    check_env(dna, env);
    ExpectedCount out;
    for (size_t p = 0; p < dna.layers.size(); ++p) {
        const DnaLayer& layer = dna.layers[p];
        const std::vector<uint32_t>& offsets = dna.partition.member_offsets[p];
        const std::vector<uint32_t>& members = dna.partition.members[p];
        const double cs = scale_at(env.cluster_scale, p);
        const double ss = scale_at(env.synapse_scale, p);
        const bool cluster_draw = env.mode == EncodingMode::ClusterDriven;

        double mean = 0.0, var = 0.0;
        for (size_t c = 0; c < layer.cluster_prob.size(); ++c) {
            const double qc = cluster_draw ? clamp_prob(cs, layer.cluster_prob[c]) : 1.0;
            // conditional (on the cluster being synthesized) mean and variance
            // of the member count: sum of independent Bernoulli(q_i)
            double mu = 0.0, sigma2 = 0.0;
            for (uint32_t m = offsets[c]; m < offsets[c + 1]; ++m) {
                const double qi = clamp_prob(ss, layer.synapse_prob[members[m]]);
                mu += qi;
                sigma2 += qi * (1.0 - qi);
            }
            mean += qc * mu;
            // law of total variance for N = B_c * sum_i B_i
            var += qc * (sigma2 + mu * mu) - qc * qc * mu * mu;
        }
        out.per_layer.push_back(mean);
        out.variance_per_layer.push_back(var);
        out.total += mean;
        out.variance_total += var;
    }
    return out;
}

EnvFactors calibrate(const DnaModel& dna, const EnvFactors& base,
                     const std::vector<size_t>& parent_live_per_layer) {
    check_env(dna, base);
    require(parent_live_per_layer.size() == dna.layers.size(), "calibrate: ",
            parent_live_per_layer.size(), " live counts for ", dna.layers.size(),
            " layers");

    EnvFactors env = base;
    env.cluster_scale.assign(dna.layers.size(), 1.0);
    env.synapse_scale.assign(dna.layers.size(), 1.0);

    // Expectation restricted to one layer under multiplier s. In ClusterDriven
    // mode s applies to both factors, in SynapseOnly to the synapse factor only.
    auto layer_expectation = [&](size_t p, double s) {
        EnvFactors probe = env;
        if (base.mode == EncodingMode::ClusterDriven) probe.cluster_scale[p] = s;
        probe.synapse_scale[p] = s;
        return expected_synapse_count(dna, probe).per_layer[p];
    };

    for (size_t p = 0; p < dna.layers.size(); ++p) {
        const double target =
            env.budget * static_cast<double>(parent_live_per_layer[p]);
        require(target > 0.0, "calibrate: layer ", dna.layers[p].name,
                " has no live parent synapses to budget against");

        if (layer_expectation(p, 1.0) <= target) continue;  // scales stay clamped at 1

        // E(s) is continuous and increasing in s with E(0) = 0, so bisection
        // on [0,1] converges to the budget crossing.
        double lo = 0.0, hi = 1.0;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            const double e = layer_expectation(p, mid);
            if (std::fabs(e - target) <= 1e-6 * target) {
                lo = hi = mid;
                break;
            }
            (e > target ? hi : lo) = mid;
        }
        const double s = 0.5 * (lo + hi);
        if (base.mode == EncodingMode::ClusterDriven) env.cluster_scale[p] = s;
        env.synapse_scale[p] = s;
    }
    return env;
}

std::vector<Tensor> sample_offspring(const DnaModel& dna, const EnvFactors& env, Rng& rng) {
    check_env(dna, env);
    std::vector<Tensor> masks;
    for (size_t p = 0; p < dna.layers.size(); ++p) {
        const DnaLayer& layer = dna.layers[p];
        const std::vector<uint32_t>& offsets = dna.partition.member_offsets[p];
        const std::vector<uint32_t>& members = dna.partition.members[p];
        const double cs = scale_at(env.cluster_scale, p);
        const double ss = scale_at(env.synapse_scale, p);
        const bool cluster_draw = env.mode == EncodingMode::ClusterDriven;

        Tensor mask = Tensor::zeros(layer.synapse_prob.shape());
        for (size_t c = 0; c < layer.cluster_prob.size(); ++c) {
            if (cluster_draw) {
                const double qc = clamp_prob(cs, layer.cluster_prob[c]);
                if (!rng.bernoulli(qc)) continue;  // cluster dies with all members
            }
            for (uint32_t m = offsets[c]; m < offsets[c + 1]; ++m) {
                const uint32_t coord = members[m];
                const double qi = clamp_prob(ss, layer.synapse_prob[coord]);
                // qi is exactly 0 for synapses the parent pruned, and a
                // Bernoulli(0) draw never fires: offspring stay subsets.
                if (rng.bernoulli(qi)) mask[coord] = 1.0;
            }
        }
        masks.push_back(std::move(mask));
    }
    return masks;
}

}  // namespace evosynth
