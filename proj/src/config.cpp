#include "vista/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vista/error.hpp"

namespace vista {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* expected) {
    fail(ErrorCode::ConfigError, fmt::format("{} = '{}': expected {}", key, value, expected));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t used = 0;
            out = static_cast<T>(std::stod(value, &used));
            if (used != value.size()) bad(key, value, "a number");
        } catch (const std::logic_error&) {
            bad(key, value, "a number");
        }
    } else {
        auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last) bad(key, value, "an integer");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad(key, value, "true or false");
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

std::string backend(const std::string& key, const std::string& value) {
    if (value != "stub" && value != "http") bad(key, value, "stub or http");
    return value;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "batch_size") batch_size = parse_number<std::size_t>(key, value);
    else if (key == "retry_extract") retry_extract = parse_number<int>(key, value);
    else if (key == "retry_impute") retry_impute = parse_number<int>(key, value);
    else if (key == "retry_refine") retry_refine = parse_number<int>(key, value);
    else if (key == "fit_threshold") fit_threshold = parse_number<double>(key, value);
    else if (key == "m") m = parse_number<std::size_t>(key, value);
    else if (key == "top_k") top_k = parse_number<std::size_t>(key, value);
    else if (key == "include_vessel_id_in_query") include_vessel_id_in_query = parse_bool(key, value);
    else if (key == "deredundancy") deredundancy = parse_bool(key, value);
    else if (key == "geofence_path") geofence_path = value;
    else if (key == "context_priority") context_priority = parse_list(value);
    else if (key == "overpass_enabled") overpass_enabled = parse_bool(key, value);
    else if (key == "overpass_url") overpass_url = value;
    else if (key == "overpass_timeout_ms") overpass_timeout = std::chrono::milliseconds(parse_number<long>(key, value));
    else if (key == "oracle") oracle_backend = backend(key, value);
    else if (key.rfind("oracle.", 0) == 0) {
        TemplateId id;
        try {
            id = template_id_from_string(key.substr(7));
        } catch (const Error&) {
            fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
        }
        oracle_routes[id] = backend(key, value);
    }
    else if (key == "oracle_timeout_ms") oracle_timeout = std::chrono::milliseconds(parse_number<long>(key, value));
    else if (key == "oracle_max_inflight") oracle_max_inflight = parse_number<int>(key, value);
    else if (key == "oracle_model") oracle_model = value;
    else if (key == "oracle_thinking") oracle_thinking = parse_bool(key, value);
    else if (key == "kalman_process_noise") kalman_process_noise = parse_number<double>(key, value);
    else if (key == "kalman_obs_noise") kalman_obs_noise = parse_number<double>(key, value);
    else if (key == "akima_window") akima_window = parse_number<std::size_t>(key, value);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else if (key == "removal_prob") removal_prob = parse_number<double>(key, value);
    else fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

void RunConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(ErrorCode::ConfigError, what);
    };
    require(batch_size >= 1, "batch_size must be positive");
    require(retry_extract >= 0 && retry_impute >= 0, "retry limits must be nonnegative");
    require(retry_refine >= 1, "retry_refine must be positive");
    require(fit_threshold > 0.0, "fit_threshold must be positive");
    require(m >= 2, "m must be at least 2");
    require(top_k >= 1, "top_k must be positive");
    require(oracle_timeout.count() > 0, "oracle_timeout_ms must be positive");
    require(oracle_max_inflight >= 1 && oracle_max_inflight <= 1024, "oracle_max_inflight must be in [1,1024]");
    require(kalman_process_noise > 0.0 && kalman_obs_noise > 0.0, "kalman noises must be positive");
    require(akima_window >= 3, "akima_window must be at least 3");
    require(removal_prob >= 0.0 && removal_prob <= 1.0, "removal_prob must be in [0,1]");
    require(overpass_timeout.count() > 0, "overpass_timeout_ms must be positive");
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::ConfigError, fmt::format("line {}: expected key = value", lineno));
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::shared_ptr<Oracle> make_oracle(const RunConfig& config) {
    std::shared_ptr<Oracle> stub = std::make_shared<StubOracle>();
    std::shared_ptr<Oracle> http;
    auto get = [&](const std::string& name) -> std::shared_ptr<Oracle> {
        if (name == "stub") return stub;
        if (!http) {
            HttpOracleOptions opts = HttpOracleOptions::from_env();
            opts.timeout = config.oracle_timeout;
            opts.max_in_flight = config.oracle_max_inflight;
            opts.thinking = config.oracle_thinking;
            if (!config.oracle_model.empty()) opts.model = config.oracle_model;
            http = std::make_shared<HttpOracle>(opts);
        }
        return http;
    };
    if (config.oracle_routes.empty()) return get(config.oracle_backend);
    auto routing = std::make_shared<RoutingOracle>(get(config.oracle_backend));
    for (const auto& [id, name] : config.oracle_routes) routing->route(id, get(name));
    return routing;
}

}  // namespace vista
