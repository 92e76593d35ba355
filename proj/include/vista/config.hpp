#pragma once

// Run configuration: a key=value file ('#' comments) overridden by flags.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vista/oracle.hpp"

namespace vista {

struct RunConfig {
    // scheduler
    std::size_t batch_size = 8;
    int retry_extract = 3;
    int retry_impute = 3;
    int retry_refine = 3;
    double fit_threshold = 3e-3;
    std::size_t m = 20;
    std::size_t top_k = 5;
    bool include_vessel_id_in_query = false;
    bool deredundancy = true;

    // spatial context
    std::string geofence_path;
    std::vector<std::string> context_priority;
    bool overpass_enabled = false;
    std::string overpass_url = "https://overpass-api.de/api/interpreter";
    std::chrono::milliseconds overpass_timeout{10'000};

    // oracle
    std::string oracle_backend = "stub";                 // stub | http
    std::map<TemplateId, std::string> oracle_routes;     // per-template override
    std::chrono::milliseconds oracle_timeout{60'000};
    int oracle_max_inflight = 8;
    std::string oracle_model;  // empty = VISTA_ORACLE_MODEL or "default"
    bool oracle_thinking = false;

    // baselines and masking
    double kalman_process_noise = 1e-6;
    double kalman_obs_noise = 1e-4;
    std::size_t akima_window = 5;
    std::uint64_t seed = 7;
    double removal_prob = 0.2;

    /// Applies one key=value pair. Unknown key or bad value -> ConfigError.
    void set(const std::string& key, const std::string& value);
    /// Range checks across fields -> ConfigError.
    void validate() const;

    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
};

/// Oracle for the configured backends. HTTP settings come from the
/// environment; a missing endpoint -> ConfigError.
std::shared_ptr<Oracle> make_oracle(const RunConfig& config);

}  // namespace vista
