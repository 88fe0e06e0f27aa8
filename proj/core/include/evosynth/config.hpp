#pragma once

#include <cstdint>
#include <string>

#include "evosynth/dna.hpp"
#include "evosynth/network.hpp"
#include "evosynth/synthesis.hpp"

namespace evosynth {

enum class Inheritance { Warm, Cold };

const char* inheritance_name(Inheritance inheritance);

/// Everything one experiment run needs. Defaults reproduce the standard
/// desk-scale MNIST run; see README for the config file keys.
struct RunConfig {
    // dataset
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;

    ArchConfig arch = ArchConfig::lenet_default();
    TauPolicy tau = TauPolicy::percentile(0.5);
    double budget = 0.8;
    EncodingMode mode = EncodingMode::ClusterDriven;
    size_t ancestor_epochs = 3;
    size_t generation_epochs = 2;
    double lr = 0.01;
    double momentum = 0.9;
    size_t batch_size = 64;
    size_t max_generations = 6;
    double accuracy_drop_threshold = 0.03;
    uint64_t seed = 42;
    Inheritance inheritance = Inheritance::Warm;
    std::string out_dir = "runs/out";
    int threads = 1;  // resolved from EVOSYNTH_THREADS by the CLI

    /// Throws on out-of-range values (budget, threshold, epochs, batch size).
    void validate() const;
};

/// Parses a JSON config file. Unknown keys and malformed values throw.
RunConfig load_run_config(const std::string& path);

/// Canonical JSON echo of a config (used for the run directory and digest).
std::string run_config_to_json(const RunConfig& config);

/// FNV-1a hash of the canonical config JSON, as 16 hex chars.
std::string config_digest(const RunConfig& config);

}  // namespace evosynth
