// vista: batch driver for masking, graph construction, imputation,
// evaluation and DOT export.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vista.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCoverage = 3;

int exit_code(vista_status st) {
    switch (st) {
        case VISTA_OK: return kExitOk;
        case VISTA_E_INVALID_PARAMETER:
        case VISTA_E_CONFIG:
        case VISTA_E_UNKNOWN_NODE:
        case VISTA_E_INCOMPATIBLE_SNAPSHOT:
        case VISTA_E_TEMPLATE: return kExitConfig;
        case VISTA_E_MISSING_OUTCOME: return kExitCoverage;
        default: return kExitIo;
    }
}

// Thrown to unwind a command with a status already reported.
struct Abort {
    int code;
};

void check(vista_status st, const std::string& what) {
    if (st == VISTA_OK) return;
    std::cerr << "vista: " << what << ": " << vista_last_error() << '\n';
    throw Abort{exit_code(st)};
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(p); }
    T** out() { return &p; }
};

using Config = Handle<vista_config, vista_config_free>;
using Dataset = Handle<vista_dataset, vista_dataset_free>;
using Masks = Handle<vista_masks, vista_masks_free>;
using Kg = Handle<vista_kg, vista_kg_free>;

struct OwnedString {
    char* s = nullptr;
    ~OwnedString() { vista_string_free(s); }
    std::string str() const { return s ? s : ""; }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) {
        std::cerr << "vista: cannot write " << path << '\n';
        throw Abort{kExitIo};
    }
}

struct ConfigFlags {
    std::string path;
    std::vector<std::string> overrides;
    std::size_t batch = 0;
    std::string oracle;
    std::size_t m = 0;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_batch) {
    cmd->add_option("--config", f.path, "key = value configuration file");
    cmd->add_option("--set", f.overrides, "override one configuration key (key=value), repeatable");
    cmd->add_option("--m", f.m, "records per minimal segment (default 20)");
    if (with_batch) {
        cmd->add_option("--batch", f.batch, "micro-batch size b (default 8)");
        cmd->add_option("--oracle", f.oracle, "oracle backend: stub or http");
    }
}

void load_config(const ConfigFlags& f, Config& cfg) {
    if (f.path.empty())
        check(vista_config_new(cfg.out()), "config");
    else
        check(vista_config_load(f.path.c_str(), cfg.out()), "config " + f.path);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "vista: --set expects key=value, got '" << kv << "'\n";
            throw Abort{kExitConfig};
        }
        check(vista_config_set(cfg.p, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set " + kv);
    }
    if (f.batch) check(vista_config_set(cfg.p, "batch_size", std::to_string(f.batch).c_str()), "--batch");
    if (f.m) check(vista_config_set(cfg.p, "m", std::to_string(f.m).c_str()), "--m");
    if (!f.oracle.empty()) check(vista_config_set(cfg.p, "oracle", f.oracle.c_str()), "--oracle");
    check(vista_config_validate(cfg.p), "config");
}

// --- commands ---------------------------------------------------------------

struct MaskArgs {
    std::string input, out, masked;
    double prob = 0.2;
    std::uint64_t seed = 7;
    std::size_t m = 20;
};

int cmd_mask(const MaskArgs& a) {
    Dataset data;
    check(vista_dataset_read_csv(a.input.c_str(), data.out()), "read " + a.input);
    Dataset masked;
    Masks masks;
    check(vista_mask_apply(data.p, a.m, a.prob, a.seed, masked.out(), masks.out()), "mask");
    check(vista_masks_write(masks.p, a.out.c_str()), "write " + a.out);
    const std::string masked_path = a.masked.empty() ? a.out + ".csv" : a.masked;
    check(vista_dataset_write_csv(masked.p, masked_path.c_str()), "write " + masked_path);
    std::cout << "masked " << vista_masks_gap_count(masks.p) << " segments across "
              << vista_dataset_vessel_count(data.p) << " vessels\n";
    return kExitOk;
}

struct BuildArgs {
    std::string input, kg, base, stats = "stats.json", quarantine = "quarantine.jsonl";
    ConfigFlags config;
};

int cmd_build(const BuildArgs& a) {
    Config cfg;
    load_config(a.config, cfg);
    Dataset data;
    check(vista_dataset_read_csv(a.input.c_str(), data.out()), "read " + a.input);
    Kg kg;
    if (a.base.empty())
        check(vista_kg_new(kg.out()), "graph");
    else
        check(vista_kg_load(a.base.c_str(), kg.out()), "load " + a.base);
    OwnedString stats;
    const vista_status st = vista_build(data.p, kg.p, cfg.p, a.quarantine.c_str(), &stats.s);
    write_text(a.stats, stats.str());
    check(st, "build");
    check(vista_kg_save(kg.p, a.kg.c_str()), "save " + a.kg);
    const auto j = nlohmann::json::parse(stats.str());
    std::cout << "committed " << j.value("committed", 0) << " units, quarantined " << j.value("quarantined", 0)
              << "; graph has " << vista_kg_node_count(kg.p) << " nodes and " << vista_kg_edge_count(kg.p)
              << " edges\n";
    return kExitOk;
}

struct ImputeArgs {
    std::string input, mask, kg, out, stats = "stats.json", quarantine = "quarantine.jsonl";
    ConfigFlags config;
};

int cmd_impute(const ImputeArgs& a) {
    Config cfg;
    load_config(a.config, cfg);
    Dataset data;
    check(vista_dataset_read_csv(a.input.c_str(), data.out()), "read " + a.input);
    Masks masks;
    check(vista_masks_read(a.mask.c_str(), masks.out()), "read " + a.mask);
    Kg kg;
    check(vista_kg_load(a.kg.c_str(), kg.out()), "load " + a.kg);
    OwnedString stats;
    const vista_status st = vista_impute(data.p, masks.p, kg.p, cfg.p, a.out.c_str(), a.quarantine.c_str(), &stats.s);
    write_text(a.stats, stats.str());
    check(st, "impute");
    const auto j = nlohmann::json::parse(stats.str());
    std::cout << "imputed " << j.value("committed", 0) << " gaps (" << j.value("fallbacks", 0)
              << " fallbacks), quarantined " << j.value("quarantined", 0) << '\n';
    return kExitOk;
}

struct EvalArgs {
    std::string truth, outcomes, mask, report = "report.json";
    bool baselines = false;
    ConfigFlags config;
};

void print_table(const nlohmann::json& rows) {
    std::printf("%-8s %12s %12s %12s %12s %12s %8s\n", "method", "mae_lat", "mae_lon", "rmse_lat", "rmse_lon",
                "mhd_km", "n");
    for (const auto& r : rows)
        std::printf("%-8s %12.6g %12.6g %12.6g %12.6g %12.6g %8zu\n", r.at("method").get<std::string>().c_str(),
                    r.at("mae_lat").get<double>(), r.at("mae_lon").get<double>(), r.at("rmse_lat").get<double>(),
                    r.at("rmse_lon").get<double>(), r.at("mhd_km").get<double>(), r.at("n").get<std::size_t>());
}

int cmd_eval(const EvalArgs& a) {
    Config cfg;
    load_config(a.config, cfg);
    Dataset truth;
    check(vista_dataset_read_csv(a.truth.c_str(), truth.out()), "read " + a.truth);
    Masks masks;
    check(vista_masks_read(a.mask.c_str(), masks.out()), "read " + a.mask);
    OwnedString report;
    check(vista_evaluate(truth.p, nullptr, masks.p, a.outcomes.c_str(), cfg.p, a.baselines ? 1 : 0, &report.s),
          "evaluate");
    write_text(a.report, report.str());
    const auto j = nlohmann::json::parse(report.str());
    if (j.contains("comparison"))
        print_table(j.at("comparison"));
    else
        std::printf("n=%zu mae_lat=%.6g mae_lon=%.6g rmse_lat=%.6g rmse_lon=%.6g mhd_km=%.6g\n",
                    j.at("n").get<std::size_t>(), j.at("mae_lat").get<double>(), j.at("mae_lon").get<double>(),
                    j.at("rmse_lat").get<double>(), j.at("rmse_lon").get<double>(), j.at("mhd_km").get<double>());
    return kExitOk;
}

struct DotArgs {
    std::string kg, nodes, out;
};

std::vector<std::uint64_t> parse_ids(const std::string& text) {
    std::vector<std::uint64_t> ids;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(item.substr(b), &used);
            if (item.find_first_not_of(' ', b + used) != std::string::npos) throw std::invalid_argument(item);
            ids.push_back(v);
        } catch (const std::exception&) {
            std::cerr << "vista: --nodes expects comma-separated node ids, got '" << item << "'\n";
            throw Abort{kExitConfig};
        }
    }
    return ids;
}

int cmd_export_dot(const DotArgs& a) {
    Kg kg;
    check(vista_kg_load(a.kg.c_str(), kg.out()), "load " + a.kg);
    const auto ids = parse_ids(a.nodes);
    OwnedString dot;
    check(vista_kg_export_dot(kg.p, ids.data(), ids.size(), &dot.s), "export");
    if (a.out.empty() || a.out == "-")
        std::cout << dot.str();
    else
        write_text(a.out, dot.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vista: knowledge-driven AIS trajectory imputation"};
    app.require_subcommand(1);

    MaskArgs mask;
    auto* c_mask = app.add_subcommand("mask", "apply block missingness to a CSV and write the mask");
    c_mask->add_option("--input", mask.input, "complete AIS CSV")->required();
    c_mask->add_option("--prob", mask.prob, "removal probability per minimal segment")->capture_default_str();
    c_mask->add_option("--seed", mask.seed, "random seed")->capture_default_str();
    c_mask->add_option("--m", mask.m, "records per minimal segment")->capture_default_str();
    c_mask->add_option("--out", mask.out, "mask JSON output")->required();
    c_mask->add_option("--masked", mask.masked, "masked CSV output (default <out>.csv)");

    BuildArgs build;
    auto* c_build = app.add_subcommand("build-kg", "extract knowledge units and write a graph snapshot");
    c_build->add_option("--input", build.input, "AIS CSV")->required();
    c_build->add_option("--kg", build.kg, "graph snapshot output")->required();
    c_build->add_option("--base", build.base, "existing snapshot to extend");
    c_build->add_option("--stats", build.stats, "run statistics output")->capture_default_str();
    c_build->add_option("--quarantine", build.quarantine, "quarantine JSONL output")->capture_default_str();
    add_config_flags(c_build, build.config, true);

    ImputeArgs impute;
    auto* c_impute = app.add_subcommand("impute", "impute every masked gap");
    c_impute->add_option("--input", impute.input, "masked AIS CSV")->required();
    c_impute->add_option("--mask", impute.mask, "mask JSON")->required();
    c_impute->add_option("--kg", impute.kg, "graph snapshot")->required();
    c_impute->add_option("--out", impute.out, "outcomes JSONL output")->required();
    c_impute->add_option("--stats", impute.stats, "run statistics output")->capture_default_str();
    c_impute->add_option("--quarantine", impute.quarantine, "quarantine JSONL output")->capture_default_str();
    add_config_flags(c_impute, impute.config, true);

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "score outcomes on the masked records");
    c_eval->add_option("--truth", eval.truth, "unmasked AIS CSV")->required();
    c_eval->add_option("--outcomes", eval.outcomes, "outcomes JSONL")->required();
    c_eval->add_option("--mask", eval.mask, "mask JSON")->required();
    c_eval->add_option("--report", eval.report, "report JSON output")->capture_default_str();
    c_eval->add_flag("--with-baselines", eval.baselines, "also score Lin-ITP, Akima and Kalman on the same gaps");
    add_config_flags(c_eval, eval.config, false);

    DotArgs dot;
    auto* c_dot = app.add_subcommand("export-dot", "write the DOT text of an induced subgraph");
    c_dot->add_option("--kg", dot.kg, "graph snapshot")->required();
    c_dot->add_option("--nodes", dot.nodes, "comma-separated node ids (empty for an empty graph)");
    c_dot->add_option("--out", dot.out, "DOT output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (c_mask->parsed()) return cmd_mask(mask);
        if (c_build->parsed()) return cmd_build(build);
        if (c_impute->parsed()) return cmd_impute(impute);
        if (c_eval->parsed()) return cmd_eval(eval);
        if (c_dot->parsed()) return cmd_export_dot(dot);
    } catch (const Abort& a) {
        return a.code;
    } catch (const std::exception& e) {
        std::cerr << "vista: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitConfig;
}
