#include "evosynth/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evosynth/error.hpp"

namespace evosynth {

const char* inheritance_name(Inheritance inheritance) {
    switch (inheritance) {
        case Inheritance::Warm: return "warm";
        case Inheritance::Cold: return "cold";
    }
    fail("inheritance_name: unknown mode ", static_cast<int>(inheritance));
}

void RunConfig::validate() const {
    require(budget > 0.0 && budget <= 1.0, "config: budget must be in (0,1], got ",
            budget);
    require(accuracy_drop_threshold > 0.0 && accuracy_drop_threshold < 1.0,
            "config: accuracy_drop_threshold must be in (0,1), got ",
            accuracy_drop_threshold);
    require(ancestor_epochs >= 1, "config: ancestor_epochs must be >= 1, got ",
            ancestor_epochs);
    require(generation_epochs >= 1, "config: generation_epochs must be >= 1, got ",
            generation_epochs);
    require(lr > 0.0, "config: lr must be positive, got ", lr);
    require(momentum >= 0.0 && momentum < 1.0, "config: momentum must be in [0,1), got ",
            momentum);
    require(batch_size >= 1, "config: batch_size must be >= 1, got ", batch_size);
    require(max_generations >= 1, "config: max_generations must be >= 1, got ",
            max_generations);
    require(threads >= 1, "config: thread count must be >= 1, got ", threads);
    require(tau.kind == TauPolicy::Kind::Fixed ||
                (tau.value >= 0.0 && tau.value <= 1.0),
            "config: tau percentile must be in [0,1], got ", tau.value);
    require(tau.value >= 0.0, "config: tau value must be >= 0, got ", tau.value);
    require(!out_dir.empty(), "config: out_dir is empty");
}

namespace {

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv") return LayerKind::Conv;
    if (name == "pool") return LayerKind::Pool;
    if (name == "fc") return LayerKind::Fc;
    if (name == "relu") return LayerKind::Relu;
    fail("config: unknown layer kind \"", name, "\" (want conv, pool, fc or relu)");
}

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                         const char* where) {
    for (const auto& [key, value] : obj.items())
        if (known.find(key) == known.end())
            fail("config: unknown key \"", key, "\" in ", where);
}

ArchConfig arch_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"input_channels", "input_h", "input_w", "layers"}, "arch");
    ArchConfig arch;
    arch.layers.clear();
    arch.input_channels = j.value("input_channels", size_t{1});
    arch.input_h = j.value("input_h", size_t{28});
    arch.input_w = j.value("input_w", size_t{28});
    if (!j.contains("layers")) fail("config: arch is missing \"layers\"");
    for (const nlohmann::json& jl : j.at("layers")) {
        reject_unknown_keys(jl, {"kind", "out", "kernel"}, "arch layer");
        ArchLayerConfig lc;
        lc.kind = layer_kind_from_name(jl.at("kind").get<std::string>());
        lc.out = jl.value("out", size_t{0});
        lc.kernel = jl.value("kernel", size_t{0});
        arch.layers.push_back(lc);
    }
    return arch;
}

nlohmann::json arch_to_json(const ArchConfig& arch) {
    nlohmann::json j;
    j["input_channels"] = arch.input_channels;
    j["input_h"] = arch.input_h;
    j["input_w"] = arch.input_w;
    j["layers"] = nlohmann::json::array();
    for (const ArchLayerConfig& lc : arch.layers) {
        nlohmann::json jl;
        jl["kind"] = layer_kind_name(lc.kind);
        if (lc.kind == LayerKind::Conv || lc.kind == LayerKind::Fc) jl["out"] = lc.out;
        if (lc.kind == LayerKind::Conv) jl["kernel"] = lc.kernel;
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("config not found: ", path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        fail("config ", path, ": not valid JSON: ", e.what());
    }
    require(doc.is_object(), "config ", path, ": top level must be an object");

    static const std::set<std::string> known = {
        "train_images", "train_labels", "test_images", "test_labels",
        "arch", "tau", "budget", "mode",
        "ancestor_epochs", "generation_epochs", "lr", "momentum", "batch_size",
        "max_generations", "accuracy_drop_threshold", "seed", "inheritance",
        "out_dir",
    };
    reject_unknown_keys(doc, known, "config");

    RunConfig config;
    try {
        config.train_images = doc.value("train_images", config.train_images);
        config.train_labels = doc.value("train_labels", config.train_labels);
        config.test_images = doc.value("test_images", config.test_images);
        config.test_labels = doc.value("test_labels", config.test_labels);
        if (doc.contains("arch")) config.arch = arch_from_json(doc.at("arch"));
        if (doc.contains("tau")) {
            const nlohmann::json& jt = doc.at("tau");
            reject_unknown_keys(jt, {"kind", "value"}, "tau");
            const std::string kind = jt.at("kind").get<std::string>();
            const double value = jt.at("value").get<double>();
            if (kind == "fixed")
                config.tau = TauPolicy::fixed(value);
            else if (kind == "percentile")
                config.tau = TauPolicy::percentile(value);
            else
                fail("config: unknown tau kind \"", kind,
                     "\" (want fixed or percentile)");
        }
        config.budget = doc.value("budget", config.budget);
        if (doc.contains("mode")) {
            const std::string mode = doc.at("mode").get<std::string>();
            if (mode == "cluster_driven")
                config.mode = EncodingMode::ClusterDriven;
            else if (mode == "synapse_only")
                config.mode = EncodingMode::SynapseOnly;
            else
                fail("config: unknown mode \"", mode,
                     "\" (want cluster_driven or synapse_only)");
        }
        config.ancestor_epochs = doc.value("ancestor_epochs", config.ancestor_epochs);
        config.generation_epochs =
            doc.value("generation_epochs", config.generation_epochs);
        config.lr = doc.value("lr", config.lr);
        config.momentum = doc.value("momentum", config.momentum);
        config.batch_size = doc.value("batch_size", config.batch_size);
        config.max_generations = doc.value("max_generations", config.max_generations);
        config.accuracy_drop_threshold =
            doc.value("accuracy_drop_threshold", config.accuracy_drop_threshold);
        config.seed = doc.value("seed", config.seed);
        if (doc.contains("inheritance")) {
            const std::string inh = doc.at("inheritance").get<std::string>();
            if (inh == "warm")
                config.inheritance = Inheritance::Warm;
            else if (inh == "cold")
                config.inheritance = Inheritance::Cold;
            else
                fail("config: unknown inheritance \"", inh, "\" (want warm or cold)");
        }
        config.out_dir = doc.value("out_dir", config.out_dir);
    } catch (const nlohmann::json::exception& e) {
        fail("config ", path, ": ", e.what());
    }
    config.validate();
    return config;
}

std::string run_config_to_json(const RunConfig& config) {
    nlohmann::json doc;
    doc["train_images"] = config.train_images;
    doc["train_labels"] = config.train_labels;
    doc["test_images"] = config.test_images;
    doc["test_labels"] = config.test_labels;
    doc["arch"] = arch_to_json(config.arch);
    doc["tau"]["kind"] =
        config.tau.kind == TauPolicy::Kind::Fixed ? "fixed" : "percentile";
    doc["tau"]["value"] = config.tau.value;
    doc["budget"] = config.budget;
    doc["mode"] = encoding_mode_name(config.mode);
    doc["ancestor_epochs"] = config.ancestor_epochs;
    doc["generation_epochs"] = config.generation_epochs;
    doc["lr"] = config.lr;
    doc["momentum"] = config.momentum;
    doc["batch_size"] = config.batch_size;
    doc["max_generations"] = config.max_generations;
    doc["accuracy_drop_threshold"] = config.accuracy_drop_threshold;
    doc["seed"] = config.seed;
    doc["inheritance"] = inheritance_name(config.inheritance);
    doc["out_dir"] = config.out_dir;
    return doc.dump(2) + "\n";
}

std::string config_digest(const RunConfig& config) {
    const std::string text = run_config_to_json(config);
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;  // FNV prime
    }
    std::ostringstream out;
    out << std::hex;
    for (int shift = 60; shift >= 0; shift -= 4) out << ((h >> shift) & 0xF);
    return out.str();
}

}  // namespace evosynth
