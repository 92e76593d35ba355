#include <chrono>
#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

#include "vista/error.hpp"
#include "vista/oracle.hpp"

namespace vista {

namespace {

std::string env(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

class SemaphoreGuard {
public:
    explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
    ~SemaphoreGuard() { s_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    std::counting_semaphore<1024>& s_;
};

}  // namespace

HttpOracleOptions HttpOracleOptions::from_env() {
    HttpOracleOptions o;
    o.url = env("VISTA_ORACLE_URL");
    if (o.url.empty()) fail(ErrorCode::ConfigError, "VISTA_ORACLE_URL is not set");
    o.api_key = env("VISTA_ORACLE_KEY");
    if (auto m = env("VISTA_ORACLE_MODEL"); !m.empty()) o.model = m;
    return o;
}

HttpOracle::HttpOracle(HttpOracleOptions options)
    : opts_(std::move(options)), in_flight_(std::clamp(opts_.max_in_flight, 1, 1024)) {
    const auto scheme_end = opts_.url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::ConfigError, "oracle url lacks a scheme: " + opts_.url);
    const auto path_start = opts_.url.find('/', scheme_end + 3);
    scheme_host_port_ = opts_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/v1/chat/completions" : opts_.url.substr(path_start);
    if (opts_.timeout.count() <= 0) fail(ErrorCode::ConfigError, "oracle timeout must be positive");
}

OracleResponse HttpOracle::call(const OracleRequest& request) {
    const std::string prompt = render(request.id, request.variables);
    nlohmann::json body = {
        {"model", opts_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    if (request.deterministic) body["temperature"] = 0;
    if (opts_.thinking) body["enable_thinking"] = true;

    SemaphoreGuard guard(in_flight_);
    const auto started = std::chrono::steady_clock::now();
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

    auto result = client.Post(path_, headers, body.dump(), "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const double latency_ms = std::chrono::duration<double, std::milli>(elapsed).count();
    if (!result) {
        if (elapsed >= opts_.timeout)
            fail(ErrorCode::OracleTimeout, "no response within " + std::to_string(opts_.timeout.count()) + " ms");
        fail(ErrorCode::OracleUnavailable, httplib::to_string(result.error()));
    }
    if (result->status != 200)
        fail(ErrorCode::OracleUnavailable, "HTTP status " + std::to_string(result->status));

    OracleResponse resp;
    resp.latency_ms = latency_ms;
    try {
        const auto json = nlohmann::json::parse(result->body);
        const auto& content = json.at("choices").at(0).at("message").at("content");
        resp.raw = content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedOracleOutput, std::string("unexpected completion payload: ") + e.what());
    }
    return resp;
}

}  // namespace vista
