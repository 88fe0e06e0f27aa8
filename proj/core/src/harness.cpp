#include "evosynth/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "evosynth/config.hpp"
#include "evosynth/error.hpp"
#include "evosynth/evolve.hpp"
#include "evosynth/metrics.hpp"
#include "evosynth/trainer.hpp"

namespace evosynth {

namespace {

/// EVOSYNTH_THREADS caps the worker count; absent, empty, 0 or unparsable
/// means the deterministic single-thread path.
int env_thread_cap() {
    const char* v = std::getenv("EVOSYNTH_THREADS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n <= 0) return 1;
    return n > 256 ? 256 : static_cast<int>(n);
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) fail("cannot open ", path, " for writing");
    f << text;
    f.flush();
    if (!f) fail("write to ", path, " failed");
}

RunConfig load_cli_config(const std::string& config_path, uint64_t* seed_override,
                          const std::string& out_override) {
    if (!std::filesystem::exists(config_path))
        fail("config not found: ", config_path);
    RunConfig config = load_run_config(config_path);
    if (seed_override) config.seed = *seed_override;
    if (!out_override.empty()) config.out_dir = out_override;
    config.threads = env_thread_cap();
    config.validate();
    return config;
}

Dataset load_split(const std::string& images, const std::string& labels,
                   const char* which) {
    require(!images.empty() && !labels.empty(), "config: ", which,
            " dataset paths are empty");
    return load_dataset(images, labels);
}

void print_generation(const GenerationRecord& r) {
    std::printf("gen %llu: accuracy %.4f, synapses %zu (%.2fX), clusters %zu (%.2fX)\n",
                static_cast<unsigned long long>(r.generation), r.test_accuracy,
                r.total_synapses, r.architectural_efficiency,
                [&] {
                    size_t total = 0;
                    for (size_t c : r.live_clusters_per_layer) total += c;
                    return total;
                }(),
                r.overall_cluster_efficiency);
    std::fflush(stdout);
}

int run_command(const std::string& config_path, uint64_t* seed_override,
                const std::string& out_override) {
    const RunConfig config = load_cli_config(config_path, seed_override, out_override);
    const Dataset train_set =
        load_split(config.train_images, config.train_labels, "train");
    const Dataset test_set = load_split(config.test_images, config.test_labels, "test");
    std::printf("loaded %zu train / %zu test samples; %d worker(s)\n",
                train_set.size(), test_set.size(), config.threads);
    std::fflush(stdout);

    Report report;
    report.meta.seed = config.seed;
    report.meta.config_digest = config_digest(config);
    report.meta.config_json = run_config_to_json(config);
    report.meta.started_at = utc_now();
    report.meta.mode = encoding_mode_name(config.mode);
    report.meta.inheritance = inheritance_name(config.inheritance);
    report.meta.budget = config.budget;

    EvolveHooks hooks;
    hooks.on_generation = print_generation;
    const EvolveResult result = evolve(config, train_set, test_set, hooks);

    report.meta.finished_at = utc_now();
    report.layer_names = result.ancestor.parametric_names();
    report.ancestor_clusters_per_layer =
        cluster_partition(result.ancestor).cluster_count;
    report.records = result.records;

    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) fail("cannot create directory ", config.out_dir, ": ", ec.message());
    write_report(report, config.out_dir);
    write_text_file(config.out_dir + "/config.json", run_config_to_json(config));
    save_checkpoint(result.ancestor, config.out_dir + "/ancestor.ckpt");
    save_checkpoint(result.final_net, config.out_dir + "/final.ckpt");
    std::printf("run complete: %zu generation(s) written to %s\n",
                report.records.size(), config.out_dir.c_str());
    return 0;
}

int train_ancestor_command(const std::string& config_path, uint64_t* seed_override,
                           const std::string& out_override) {
    RunConfig config = load_cli_config(config_path, seed_override, out_override);
    // A one-generation run trains the ancestor, evaluates and stops before
    // any synthesis.
    config.max_generations = 1;
    const Dataset train_set =
        load_split(config.train_images, config.train_labels, "train");
    const Dataset test_set = load_split(config.test_images, config.test_labels, "test");

    EvolveHooks hooks;
    hooks.on_generation = print_generation;
    const EvolveResult result = evolve(config, train_set, test_set, hooks);

    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) fail("cannot create directory ", config.out_dir, ": ", ec.message());
    save_checkpoint(result.ancestor, config.out_dir + "/ancestor.ckpt");
    std::printf("ancestor accuracy %.4f; checkpoint written to %s/ancestor.ckpt\n",
                result.records.front().test_accuracy, config.out_dir.c_str());
    return 0;
}

int report_command(const std::string& run_dir) {
    const std::string summary_path = run_dir + "/summary.json";
    if (!std::filesystem::exists(summary_path))
        fail("no summary.json in ", run_dir, "; not a finished run directory");
    const Report report = read_summary(summary_path);
    write_report(report, run_dir);
    std::printf("regenerated generations.csv and clusters.csv in %s\n", run_dir.c_str());
    return 0;
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
    CLI::App app{"evolutionary synthesis of progressively sparser networks"};
    app.require_subcommand(1);

    std::string config_path, out_override, run_dir;
    uint64_t seed_value = 0;
    bool seed_set = false;

    CLI::App* run = app.add_subcommand("run", "full evolution run: train, synthesize, report");
    run->add_option("--config", config_path, "run configuration file (JSON)")->required();
    run->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--out", out_override, "override the config output directory");

    CLI::App* anc = app.add_subcommand("train-ancestor",
                                       "train and checkpoint only the generation-1 network");
    anc->add_option("--config", config_path, "run configuration file (JSON)")->required();
    anc->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    anc->add_option("--out", out_override, "override the config output directory");

    CLI::App* rep = app.add_subcommand("report", "regenerate CSV tables from a run directory");
    rep->add_option("run_dir", run_dir, "directory holding summary.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the diagnostic
        return 2;
    }

    try {
        uint64_t* seed_override = seed_set ? &seed_value : nullptr;
        if (run->parsed()) return run_command(config_path, seed_override, out_override);
        if (anc->parsed())
            return train_ancestor_command(config_path, seed_override, out_override);
        return report_command(run_dir);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        // configuration problems are usage errors; anything else is runtime
        const std::string what = e.what();
        const bool config_error = what.rfind("config", 0) == 0;
        return config_error ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace evosynth
