#include "evosynth/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evosynth/error.hpp"

namespace evosynth {

double architectural_efficiency(size_t ancestor_count, size_t current_count) {
    require(ancestor_count > 0, "architectural efficiency: ancestor synapse count is 0");
    require(current_count > 0,
            "architectural efficiency: current network has no live synapses");
    return static_cast<double>(ancestor_count) / static_cast<double>(current_count);
}

ClusterEfficiency cluster_efficiency(const std::vector<size_t>& ancestor_clusters_per_layer,
                                     const std::vector<size_t>& live_clusters_per_layer) {
    require(ancestor_clusters_per_layer.size() == live_clusters_per_layer.size(),
            "cluster efficiency: ", ancestor_clusters_per_layer.size(),
            " ancestor layers vs ", live_clusters_per_layer.size(), " live layers");
    require(!ancestor_clusters_per_layer.empty(), "cluster efficiency: no layers");

    ClusterEfficiency eff;
    size_t anc_total = 0, live_total = 0;
    for (size_t p = 0; p < ancestor_clusters_per_layer.size(); ++p) {
        const size_t anc = ancestor_clusters_per_layer[p];
        const size_t live = live_clusters_per_layer[p];
        require(anc > 0, "cluster efficiency: layer ", p, " has 0 ancestor clusters");
        require(live > 0, "cluster efficiency: layer ", p,
                " has no live clusters; the network is degenerate");
        eff.per_layer.push_back(static_cast<double>(anc) / static_cast<double>(live));
        anc_total += anc;
        live_total += live;
    }
    eff.overall = static_cast<double>(anc_total) / static_cast<double>(live_total);
    return eff;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

/// RFC-4180 quoting: wrap in quotes when the field contains a comma, quote,
/// or newline; embedded quotes double.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) fail("report: cannot open ", path, " for writing");
    f << text;
    f.flush();
    if (!f) fail("report: write to ", path, " failed");
}

void check_report(const Report& report) {
    require(!report.records.empty(), "report: record list is empty; generation 1 required");
    require(report.records.front().generation == 1,
            "report: first record is generation ", report.records.front().generation,
            ", generation 1 required");
    for (size_t i = 1; i < report.records.size(); ++i)
        require(report.records[i].generation > report.records[i - 1].generation,
                "report: records out of order at index ", i);
    const size_t L = report.layer_names.size();
    require(report.ancestor_clusters_per_layer.size() == L, "report: ",
            report.ancestor_clusters_per_layer.size(), " ancestor cluster counts for ",
            L, " layers");
    for (const GenerationRecord& r : report.records) {
        require(r.synapses_per_layer.size() == L, "report: generation ", r.generation,
                " has ", r.synapses_per_layer.size(), " synapse counts for ", L,
                " layers");
        require(r.live_clusters_per_layer.size() == L, "report: generation ",
                r.generation, " has ", r.live_clusters_per_layer.size(),
                " cluster counts for ", L, " layers");
    }
}

std::string generations_csv(const Report& report) {
    std::ostringstream out;
    out << "generation,accuracy,total_synapses,architectural_efficiency";
    for (const std::string& name : report.layer_names)
        out << "," << csv_field("synapses_" + name);
    out << "\n";
    for (const GenerationRecord& r : report.records) {
        out << r.generation << "," << fmt_double(r.test_accuracy) << ","
            << r.total_synapses << "," << fmt_double(r.architectural_efficiency);
        for (size_t count : r.synapses_per_layer) out << "," << count;
        out << "\n";
    }
    return out.str();
}

std::string clusters_csv(const Report& report) {
    const GenerationRecord& first = report.records.front();
    const GenerationRecord& last = report.records.back();
    std::ostringstream out;
    out << "layer,ancestor_clusters,live_first,efficiency_first,live_last,"
           "efficiency_last\n";
    size_t anc_total = 0, first_total = 0, last_total = 0;
    for (size_t p = 0; p < report.layer_names.size(); ++p) {
        const size_t anc = report.ancestor_clusters_per_layer[p];
        const size_t lf = first.live_clusters_per_layer[p];
        const size_t ll = last.live_clusters_per_layer[p];
        out << csv_field(report.layer_names[p]) << "," << anc << "," << lf << ","
            << fmt_double(static_cast<double>(anc) / static_cast<double>(lf)) << ","
            << ll << ","
            << fmt_double(static_cast<double>(anc) / static_cast<double>(ll)) << "\n";
        anc_total += anc;
        first_total += lf;
        last_total += ll;
    }
    out << "overall," << anc_total << "," << first_total << ","
        << fmt_double(static_cast<double>(anc_total) / static_cast<double>(first_total))
        << "," << last_total << ","
        << fmt_double(static_cast<double>(anc_total) / static_cast<double>(last_total))
        << "\n";
    return out.str();
}

nlohmann::json record_to_json(const GenerationRecord& r) {
    nlohmann::json j;
    j["generation"] = r.generation;
    j["test_accuracy"] = r.test_accuracy;
    j["synapses_per_layer"] = r.synapses_per_layer;
    j["total_synapses"] = r.total_synapses;
    j["live_clusters_per_layer"] = r.live_clusters_per_layer;
    j["architectural_efficiency"] = r.architectural_efficiency;
    j["cluster_efficiency_per_layer"] = r.cluster_efficiency_per_layer;
    j["overall_cluster_efficiency"] = r.overall_cluster_efficiency;
    j["rng_seed"] = r.rng_seed;
    j["expected_synapses_per_layer"] = r.expected_synapses_per_layer;
    j["expected_synapses"] = r.expected_synapses;
    j["expected_std"] = r.expected_std;
    return j;
}

GenerationRecord record_from_json(const nlohmann::json& j) {
    GenerationRecord r;
    r.generation = j.at("generation").get<uint64_t>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    r.synapses_per_layer = j.at("synapses_per_layer").get<std::vector<size_t>>();
    r.total_synapses = j.at("total_synapses").get<size_t>();
    r.live_clusters_per_layer = j.at("live_clusters_per_layer").get<std::vector<size_t>>();
    r.architectural_efficiency = j.at("architectural_efficiency").get<double>();
    r.cluster_efficiency_per_layer =
        j.at("cluster_efficiency_per_layer").get<std::vector<double>>();
    r.overall_cluster_efficiency = j.at("overall_cluster_efficiency").get<double>();
    r.rng_seed = j.at("rng_seed").get<uint64_t>();
    r.expected_synapses_per_layer =
        j.at("expected_synapses_per_layer").get<std::vector<double>>();
    r.expected_synapses = j.at("expected_synapses").get<double>();
    r.expected_std = j.at("expected_std").get<double>();
    return r;
}

}  // namespace

std::string report_to_json(const Report& report) {
    check_report(report);
    nlohmann::json doc;
    doc["meta"]["seed"] = report.meta.seed;
    doc["meta"]["config_digest"] = report.meta.config_digest;
    doc["meta"]["config_json"] = report.meta.config_json;
    doc["meta"]["started_at"] = report.meta.started_at;
    doc["meta"]["finished_at"] = report.meta.finished_at;
    doc["meta"]["mode"] = report.meta.mode;
    doc["meta"]["inheritance"] = report.meta.inheritance;
    doc["meta"]["budget"] = report.meta.budget;
    doc["layer_names"] = report.layer_names;
    doc["ancestor_clusters_per_layer"] = report.ancestor_clusters_per_layer;
    doc["records"] = nlohmann::json::array();
    for (const GenerationRecord& r : report.records)
        doc["records"].push_back(record_to_json(r));
    return doc.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail("report: summary is not valid JSON: ", e.what());
    }
    Report report;
    try {
        const nlohmann::json& meta = doc.at("meta");
        report.meta.seed = meta.at("seed").get<uint64_t>();
        report.meta.config_digest = meta.at("config_digest").get<std::string>();
        report.meta.config_json = meta.at("config_json").get<std::string>();
        report.meta.started_at = meta.at("started_at").get<std::string>();
        report.meta.finished_at = meta.at("finished_at").get<std::string>();
        report.meta.mode = meta.at("mode").get<std::string>();
        report.meta.inheritance = meta.at("inheritance").get<std::string>();
        report.meta.budget = meta.at("budget").get<double>();
        report.layer_names = doc.at("layer_names").get<std::vector<std::string>>();
        report.ancestor_clusters_per_layer =
            doc.at("ancestor_clusters_per_layer").get<std::vector<size_t>>();
        for (const nlohmann::json& j : doc.at("records"))
            report.records.push_back(record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
        fail("report: summary field missing or mistyped: ", e.what());
    }
    check_report(report);
    return report;
}

void write_report(const Report& report, const std::string& out_dir) {
    check_report(report);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail("report: cannot create directory ", out_dir, ": ", ec.message());

    write_text_file(out_dir + "/generations.csv", generations_csv(report));
    write_text_file(out_dir + "/clusters.csv", clusters_csv(report));
    write_text_file(out_dir + "/summary.json", report_to_json(report));
}

Report read_summary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("report: cannot open ", path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return report_from_json(buf.str());
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;  // row has content even if the field is empty

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                field_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (field_started || !field.empty() || !row.empty()) {
                    row.push_back(std::move(field));
                    field.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                    field_started = false;
                }
                break;
            default:
                field += c;
                field_started = true;
                break;
        }
    }
    require(!quoted, "csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace evosynth
