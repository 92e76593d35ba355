#include "vista.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "json.hpp"

#include "vista/ais.hpp"
#include "vista/config.hpp"
#include "vista/encoder.hpp"
#include "vista/error.hpp"
#include "vista/imputation.hpp"
#include "vista/metrics.hpp"
#include "vista/sdkg.hpp"
#include "vista/workflow.hpp"

struct vista_config {
    vista::RunConfig value;
};
struct vista_dataset {
    std::vector<vista::VesselSequence> value;
};
struct vista_masks {
    std::vector<vista::ObservationMask> value;
};
struct vista_kg {
    vista::SdKg value;
};

namespace {

thread_local std::string g_last_error;

vista_status status_of(vista::ErrorCode code) {
    return static_cast<vista_status>(static_cast<int>(code) + 1);
}

template <class Fn>
vista_status guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return VISTA_OK;
    } catch (const vista::Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return VISTA_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return VISTA_E_INTERNAL;
    }
}

void require_arg(const void* p, const char* name) {
    if (!p) vista::fail(vista::ErrorCode::InvalidParameter, std::string(name) + " is null");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// FNV-1a over the vessel id, mixed into the run seed.
std::uint64_t vessel_stream_seed(std::uint64_t seed, const std::string& vessel_id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : vessel_id) h = (h ^ c) * 0x100000001b3ULL;
    return seed ^ h;
}

std::unique_ptr<vista::ContextProvider> make_context(const vista::RunConfig& cfg) {
    if (!cfg.geofence_path.empty())
        return std::make_unique<vista::GeofenceIndex>(vista::GeofenceIndex::load(cfg.geofence_path, cfg.context_priority));
    if (cfg.overpass_enabled) return std::make_unique<vista::OverpassProvider>(cfg.overpass_url, cfg.overpass_timeout);
    return std::make_unique<vista::OpenWaterProvider>();
}

std::unique_ptr<vista::JsonlWriter> open_sink(const char* path) {
    if (!path || !*path) return nullptr;
    return std::make_unique<vista::JsonlWriter>(path);
}

nlohmann::json report_json(const vista::MetricReport& r) {
    return {{"mae_lat", r.mae_lat}, {"mae_lon", r.mae_lon}, {"rmse_lat", r.rmse_lat},
            {"rmse_lon", r.rmse_lon}, {"mhd_km", r.mhd},   {"n", r.n}};
}

nlohmann::json config_echo(const vista::RunConfig& c) {
    return {{"m", c.m},
            {"akima_window", c.akima_window},
            {"kalman_process_noise", c.kalman_process_noise},
            {"kalman_obs_noise", c.kalman_obs_noise}};
}

std::vector<vista::GapPoints> read_outcomes(const std::string& path) {
    std::ifstream in(path);
    if (!in) vista::fail(vista::ErrorCode::IoError, "cannot read outcomes file " + path);
    std::vector<vista::GapPoints> gaps;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            vista::fail(vista::ErrorCode::EvaluationError,
                        "outcomes line " + std::to_string(lineno) + " is not JSON: " + e.what());
        }
        gaps.push_back(vista::to_gap_points(vista::outcome_from_json(j)));
    }
    return gaps;
}

// Truth with the gap segments of each mask cleared back to id and time.
std::vector<vista::VesselSequence> derive_masked(const std::vector<vista::VesselSequence>& truth,
                                                 const std::vector<vista::ObservationMask>& masks) {
    std::vector<vista::VesselSequence> out = truth;
    for (const auto& mask : masks) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.vessel_id == mask.vessel_id; });
        if (it == out.end())
            vista::fail(vista::ErrorCode::MissingOutcome, "vessel " + mask.vessel_id + " of the mask is not in the truth");
        for (std::size_t k : mask.gap_indices())
            for (std::size_t i = k * mask.m; i < (k + 1) * mask.m && i < it->records.size(); ++i) {
                vista::AisRecord cleared;
                cleared.vessel_id = it->records[i].vessel_id;
                cleared.timestamp = it->records[i].timestamp;
                it->records[i] = std::move(cleared);
            }
    }
    return out;
}

}  // namespace

extern "C" {

const char* vista_last_error(void) { return g_last_error.c_str(); }

const char* vista_status_name(vista_status status) {
    if (status == VISTA_OK) return "OK";
    if (status == VISTA_E_INTERNAL) return "Internal";
    if (status < VISTA_OK || status > VISTA_E_INTERNAL) return "Unknown";
    return vista::to_string(static_cast<vista::ErrorCode>(static_cast<int>(status) - 1)).data();
}

void vista_string_free(char* s) { std::free(s); }

vista_status vista_config_new(vista_config** out) {
    return guarded([&] {
        require_arg(out, "out");
        *out = new vista_config{};
    });
}

vista_status vista_config_load(const char* path, vista_config** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        *out = new vista_config{vista::RunConfig::load(path)};
    });
}

vista_status vista_config_set(vista_config* config, const char* key, const char* value) {
    return guarded([&] {
        require_arg(config, "config");
        require_arg(key, "key");
        require_arg(value, "value");
        config->value.set(key, value);
    });
}

vista_status vista_config_validate(const vista_config* config) {
    return guarded([&] {
        require_arg(config, "config");
        config->value.validate();
    });
}

void vista_config_free(vista_config* config) { delete config; }

vista_status vista_dataset_read_csv(const char* path, vista_dataset** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        *out = new vista_dataset{vista::read_ais_csv_file(path)};
    });
}

vista_status vista_dataset_write_csv(const vista_dataset* dataset, const char* path) {
    return guarded([&] {
        require_arg(dataset, "dataset");
        require_arg(path, "path");
        vista::write_ais_csv_file(path, dataset->value);
    });
}

size_t vista_dataset_vessel_count(const vista_dataset* dataset) { return dataset ? dataset->value.size() : 0; }

size_t vista_dataset_record_count(const vista_dataset* dataset) {
    if (!dataset) return 0;
    size_t n = 0;
    for (const auto& s : dataset->value) n += s.records.size();
    return n;
}

void vista_dataset_free(vista_dataset* dataset) { delete dataset; }

vista_status vista_mask_apply(const vista_dataset* dataset, size_t m, double removal_prob, uint64_t seed,
                              vista_dataset** masked_out, vista_masks** masks_out) {
    return guarded([&] {
        require_arg(dataset, "dataset");
        require_arg(masked_out, "masked_out");
        require_arg(masks_out, "masks_out");
        if (m == 0) vista::fail(vista::ErrorCode::InvalidParameter, "segment length m must be positive");
        if (!(removal_prob >= 0.0 && removal_prob <= 1.0))
            vista::fail(vista::ErrorCode::InvalidParameter, "removal probability must lie in [0,1]");
        auto masked = std::make_unique<vista_dataset>();
        auto masks = std::make_unique<vista_masks>();
        // Each vessel draws from its own stream so results do not depend on file order.
        for (const auto& seq : dataset->value) {
            const vista::Partition part = vista::partition(seq, m);
            const std::uint64_t vessel_seed = vessel_stream_seed(seed, seq.vessel_id);
            vista::MaskedSegments ms = vista::apply_block_missingness(part.segments, removal_prob, vessel_seed);
            ms.mask.vessel_id = seq.vessel_id;
            ms.mask.m = m;
            ms.mask.seed = seed;
            ms.mask.removal_prob = removal_prob;
            vista::VesselSequence out{seq.vessel_id, {}};
            for (auto& s : ms.segments)
                for (auto& r : s.records) out.records.push_back(std::move(r));
            const std::size_t covered = part.segments.size() * m;
            for (std::size_t i = covered; i < seq.records.size(); ++i) out.records.push_back(seq.records[i]);
            masked->value.push_back(std::move(out));
            masks->value.push_back(std::move(ms.mask));
        }
        *masked_out = masked.release();
        *masks_out = masks.release();
    });
}

vista_status vista_masks_read(const char* path, vista_masks** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        *out = new vista_masks{vista::read_masks_file(path)};
    });
}

vista_status vista_masks_write(const vista_masks* masks, const char* path) {
    return guarded([&] {
        require_arg(masks, "masks");
        require_arg(path, "path");
        vista::write_masks_file(path, masks->value);
    });
}

size_t vista_masks_gap_count(const vista_masks* masks) {
    if (!masks) return 0;
    size_t n = 0;
    for (const auto& m : masks->value) n += m.gap_indices().size();
    return n;
}

void vista_masks_free(vista_masks* masks) { delete masks; }

vista_status vista_kg_new(vista_kg** out) {
    return guarded([&] {
        require_arg(out, "out");
        *out = new vista_kg{};
    });
}

vista_status vista_kg_load(const char* path, vista_kg** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        *out = new vista_kg{vista::SdKg::load(path)};
    });
}

vista_status vista_kg_save(const vista_kg* kg, const char* path) {
    return guarded([&] {
        require_arg(kg, "kg");
        require_arg(path, "path");
        kg->value.save(path);
    });
}

size_t vista_kg_node_count(const vista_kg* kg) { return kg ? kg->value.node_count() : 0; }
size_t vista_kg_edge_count(const vista_kg* kg) { return kg ? kg->value.edge_count() : 0; }

vista_status vista_kg_export_dot(const vista_kg* kg, const uint64_t* node_ids, size_t count, char** dot_out) {
    return guarded([&] {
        require_arg(kg, "kg");
        require_arg(dot_out, "dot_out");
        if (count > 0) require_arg(node_ids, "node_ids");
        std::vector<vista::NodeId> ids(node_ids, node_ids + count);
        *dot_out = dup_string(kg->value.induced_subgraph(ids).to_dot());
    });
}

void vista_kg_free(vista_kg* kg) { delete kg; }

vista_status vista_build(const vista_dataset* dataset, vista_kg* kg, const vista_config* config,
                         const char* quarantine_path, char** stats_json_out) {
    nlohmann::json stats = nlohmann::json::object();
    const vista_status st = guarded([&] {
        require_arg(dataset, "dataset");
        require_arg(kg, "kg");
        require_arg(config, "config");
        const vista::RunConfig& cfg = config->value;
        cfg.validate();
        auto oracle = vista::make_oracle(cfg);
        auto context = make_context(cfg);
        auto sink = open_sink(quarantine_path);
        vista::BuildSinks sinks{sink.get()};
        vista::BuildResult r = vista::run_build(dataset->value, kg->value, cfg, *oracle, *context, sinks);
        if (sink) sink->close();
        stats = r.stats.to_json();
        stats["token_merges"] = r.dedup.token_merges;
        stats["function_merges"] = r.dedup.function_merges;
        if (!r.dedup.warning.empty()) stats["warning"] = r.dedup.warning;
    });
    if (st != VISTA_OK) stats["error"] = g_last_error;
    if (stats_json_out) *stats_json_out = dup_string(stats.dump(2));
    return st;
}

vista_status vista_impute(const vista_dataset* masked, const vista_masks* masks, const vista_kg* kg,
                          const vista_config* config, const char* outcomes_path, const char* quarantine_path,
                          char** stats_json_out) {
    nlohmann::json stats = nlohmann::json::object();
    const vista_status st = guarded([&] {
        require_arg(masked, "masked");
        require_arg(masks, "masks");
        require_arg(kg, "kg");
        require_arg(config, "config");
        const vista::RunConfig& cfg = config->value;
        cfg.validate();
        auto oracle = vista::make_oracle(cfg);
        auto context = make_context(cfg);
        auto outcomes = open_sink(outcomes_path);
        auto quarantine = open_sink(quarantine_path);
        vista::ImputeSinks sinks{outcomes.get(), quarantine.get()};
        vista::ImputeResult r = vista::run_impute(masked->value, masks->value, kg->value, cfg, *oracle, *context, sinks);
        if (outcomes) outcomes->close();
        if (quarantine) quarantine->close();
        stats = r.stats.to_json();
    });
    if (st != VISTA_OK) stats["error"] = g_last_error;
    if (stats_json_out) *stats_json_out = dup_string(stats.dump(2));
    return st;
}

vista_status vista_evaluate(const vista_dataset* truth, const vista_dataset* masked, const vista_masks* masks,
                            const char* outcomes_path, const vista_config* config, int with_baselines,
                            char** report_json_out) {
    return guarded([&] {
        require_arg(truth, "truth");
        require_arg(masks, "masks");
        require_arg(outcomes_path, "outcomes_path");
        require_arg(report_json_out, "report_json_out");
        vista::RunConfig defaults;
        const vista::RunConfig& cfg = config ? config->value : defaults;
        const auto gaps = read_outcomes(outcomes_path);
        nlohmann::json report = report_json(vista::evaluate(truth->value, gaps, masks->value));
        report["config"] = config_echo(cfg);
        if (with_baselines) {
            const auto derived = masked ? masked->value : derive_masked(truth->value, masks->value);
            vista::BaselineOptions bo;
            bo.akima_window = cfg.akima_window;
            bo.kalman.process_noise = cfg.kalman_process_noise;
            bo.kalman.obs_noise = cfg.kalman_obs_noise;
            nlohmann::json rows = nlohmann::json::array();
            auto row = [&](const char* method, const vista::MetricReport& r) {
                nlohmann::json j = report_json(r);
                j["method"] = method;
                rows.push_back(std::move(j));
            };
            row("lin-itp", vista::evaluate(truth->value,
                                           vista::run_baseline(vista::Baseline::LinItp, derived, masks->value, bo),
                                           masks->value));
            row("akima", vista::evaluate(truth->value,
                                         vista::run_baseline(vista::Baseline::Akima, derived, masks->value, bo),
                                         masks->value));
            row("kalman", vista::evaluate(truth->value,
                                          vista::run_baseline(vista::Baseline::Kalman, derived, masks->value, bo),
                                          masks->value));
            row("vista", vista::evaluate(truth->value, gaps, masks->value));
            report["comparison"] = rows;
        }
        *report_json_out = dup_string(report.dump(2));
    });
}

}  // extern "C"
