#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evosynth/evolve.hpp"

namespace evosynth {

/// Ancestor synapse count divided by the current network's count.
double architectural_efficiency(size_t ancestor_count, size_t current_count);

struct ClusterEfficiency {
    std::vector<double> per_layer;
    double overall = 0.0;  // total ancestor clusters / total live clusters
};

/// Per-layer ancestor-to-live cluster count ratios plus the overall ratio.
/// Every layer must still have at least one live cluster.
ClusterEfficiency cluster_efficiency(const std::vector<size_t>& ancestor_clusters_per_layer,
                                     const std::vector<size_t>& live_clusters_per_layer);

struct ReportMeta {
    uint64_t seed = 0;
    std::string config_digest;
    std::string config_json;   // canonical echo of the resolved RunConfig
    std::string started_at;    // ISO-8601 UTC, empty for synthetic reports
    std::string finished_at;
    std::string mode;
    std::string inheritance;
    double budget = 0.8;
};

/// A full run: metadata plus the ordered generation records.
struct Report {
    ReportMeta meta;
    std::vector<std::string> layer_names;            // parametric layers, in order
    std::vector<size_t> ancestor_clusters_per_layer;
    std::vector<GenerationRecord> records;           // generation 1 first
};

/// Writes generations.csv, clusters.csv and summary.json into out_dir.
/// Output is byte-stable for a fixed Report.
void write_report(const Report& report, const std::string& out_dir);

/// Reads the summary.json produced by write_report back into a Report.
Report read_summary(const std::string& path);

/// Serialize / parse the summary JSON without touching the filesystem.
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);

/// Minimal RFC-4180 reader (quoted fields, doubled quotes, CRLF or LF).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace evosynth
