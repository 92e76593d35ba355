#include "doctest.h"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"

#include "../support/test_support.hpp"
#include "vista/oracle.hpp"

using namespace vista;
using vista::testing::code_of;

namespace {

Variables abstraction_vars() {
    return {{"trajectory_data", "rows"},
            {"speed_dict", "stable"},
            {"course_dict", ""},
            {"heading_dict", ""},
            {"intent_dict", ""}};
}

/// Local chat-completions endpoint with one route per behavior.
class FakeEndpoint {
public:
    FakeEndpoint() {
        server_.Post("/ok", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            last_body_ = body;
            last_auth_ = req.get_header_value("Authorization");
            const std::string prompt = body["messages"][0]["content"];
            nlohmann::json reply = {{"choices", {{{"message", {{"content", "echo:" + prompt.substr(0, 12)}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        server_.Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
        server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(std::chrono::milliseconds(600));
            res.set_content("{}", "application/json");
        });
        server_.Post("/odd", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"result": "no choices here"})", "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

    nlohmann::json last_body_;
    std::string last_auth_;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

HttpOracle client(const std::string& url, int timeout_ms = 2000) {
    HttpOracleOptions o;
    o.url = url;
    o.api_key = "secret";
    o.model = "test-model";
    o.timeout = std::chrono::milliseconds(timeout_ms);
    return HttpOracle(o);
}

}  // namespace

TEST_CASE("templates render every placeholder once") {
    for (auto id : {TemplateId::BehaviorAbstraction, TemplateId::MethodBuilder, TemplateId::BehaviorSelect,
                    TemplateId::MethodSelect, TemplateId::Explain, TemplateId::Dedup,
                    TemplateId::FunctionDescription}) {
        Variables vars;
        for (const auto& name : template_placeholders(id)) vars[name] = "<" + name + ">";
        const auto text = render(id, vars);
        for (const auto& name : template_placeholders(id)) {
            CHECK(text.find("<" + name + ">") != std::string::npos);
            CHECK(text.find("{" + name + "}") == std::string::npos);
        }
        CHECK(template_id_from_string(to_string(id)) == id);
    }
    // Values are not re-scanned for placeholders.
    auto vars = abstraction_vars();
    vars["trajectory_data"] = "{speed_dict}";
    CHECK(render(TemplateId::BehaviorAbstraction, vars).find("{speed_dict}") != std::string::npos);
}

TEST_CASE("render rejects unbound and unknown variables") {
    auto vars = abstraction_vars();
    vars.erase("speed_dict");
    CHECK(code_of([&] { render(TemplateId::BehaviorAbstraction, vars); }) == ErrorCode::TemplateError);
    vars = abstraction_vars();
    vars["colour"] = "blue";
    CHECK(code_of([&] { render(TemplateId::BehaviorAbstraction, vars); }) == ErrorCode::TemplateError);
    CHECK(code_of([] { template_id_from_string("poetry"); }) == ErrorCode::ConfigError);
}

TEST_CASE("extract_block") {
    CHECK(extract_block("before\n'''\nbody\n'''\nafter") == "\nbody\n");
    CHECK(extract_block("```\nx\n```").find('x') != std::string::npos);
    CHECK(code_of([] { extract_block("no fences at all"); }) == ErrorCode::MalformedOracleOutput);
    CHECK(code_of([] { extract_block("'''\nunterminated"); }) == ErrorCode::MalformedOracleOutput);
    CHECK(code_of([] { extract_block("   \n\t"); }) == ErrorCode::EmptyOracleOutput);
}

TEST_CASE("response formats round-trip through the parsers") {
    const ParsedPattern p{"stable", "gradual turn", "stable", "port approach", "a", "b", "", "d"};
    const auto back = parse_behavior_abstraction(format_behavior_abstraction(p));
    CHECK(back.speed == p.speed);
    CHECK(back.course == p.course);
    CHECK(back.intent == p.intent);
    CHECK(back.speed_note == "a");
    CHECK(back.heading_note.empty());

    ParsedFunction f{builtin_function(kConstantTurn, {{"omega", 0.0125}}), "a steady turn"};
    const auto fb = parse_method_builder(format_method_builder(f));
    CHECK(fb.func.key() == f.func.key());
    CHECK(fb.description == "a steady turn");

    const ParsedBehaviorSelection bs{42, "w=6 from status", "matches context"};
    CHECK(parse_behavior_selection(format_behavior_selection(bs)) == bs);
    const ParsedMethodSelection ms{7, "prior 0.9", "straight path"};
    CHECK(parse_method_selection(format_method_selection(ms)) == ms);
    const ParsedExplanation ex{"Rule 10", "keeps to the lane"};
    CHECK(parse_explanation(format_explanation(ex)) == ex);

    ParsedDedup d;
    d.behavior["speed"] = {{"stable", {"steady", "constant"}}};
    d.behavior_keep = {"increasing"};
    d.functions = {{"Function_3", {"candidate_1"}}};
    d.function_keep = {"Function_4"};
    CHECK(parse_dedup(format_dedup(d)) == d);
}

TEST_CASE("parsers reject malformed responses") {
    CHECK(code_of([] { parse_behavior_abstraction("'''\nPattern:\n- speed_pattern: stable\n'''"); }) ==
          ErrorCode::MalformedOracleOutput);
    CHECK(code_of([] { parse_method_builder("Function:\n'''\nlat = lat0\n'''"); }) ==
          ErrorCode::MalformedOracleOutput);
    CHECK(code_of([] { parse_method_builder("Function:\n'''\nlat: lat0 + exec(1)\nlon: lon0\n'''"); }) ==
          ErrorCode::UnsupportedConstruct);
    CHECK(code_of([] { parse_behavior_selection("'''\nSelected Movement ID: something\n'''"); }) ==
          ErrorCode::MalformedOracleOutput);
    CHECK(code_of([] { parse_explanation("plain prose without any block"); }) == ErrorCode::MalformedOracleOutput);
    CHECK(code_of([] { parse_function_description(""); }) == ErrorCode::EmptyOracleOutput);

    // Malformed errors carry the byte offset of the problem.
    try {
        parse_behavior_selection("'''\nSelected Movement ID: x\n'''");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("at byte") != std::string::npos);
    }
}

TEST_CASE("stub oracle is deterministic") {
    StubOracle stub;
    OracleRequest req{TemplateId::BehaviorAbstraction, abstraction_vars(), true};
    req.variables["trajectory_data"] =
        "vessel_id: 1\nnav_status: at anchor\ntimestamp,lat,lon,speed,course,heading\n";
    const auto a = stub.call(req).raw;
    CHECK(a == stub.call(req).raw);
    CHECK(parse_behavior_abstraction(a).intent == "anchoring");
}

TEST_CASE("routing oracle sends templates to their backend") {
    auto fallback = std::make_shared<vista::testing::ScriptedOracle>();
    auto special = std::make_shared<vista::testing::ScriptedOracle>();
    RoutingOracle router(fallback);
    router.route(TemplateId::Explain, special);
    OracleRequest explain{TemplateId::Explain, {}, true};
    special->script[TemplateId::Explain].push_back([](const OracleRequest&) { return std::string("x"); });
    CHECK(router.call(explain).raw == "x");
    OracleRequest other{TemplateId::BehaviorAbstraction, abstraction_vars(), true};
    router.call(other);
    CHECK(special->calls(TemplateId::Explain) == 1);
    CHECK(fallback->calls(TemplateId::BehaviorAbstraction) == 1);
    CHECK(fallback->calls(TemplateId::Explain) == 0);
}

TEST_CASE("call_oracle rejects blank output") {
    vista::testing::ScriptedOracle blank;
    blank.script[TemplateId::Explain].push_back([](const OracleRequest&) { return std::string(" \n"); });
    CHECK(code_of([&] { call_oracle(blank, TemplateId::Explain, {}); }) == ErrorCode::EmptyOracleOutput);
}

TEST_CASE("HTTP oracle against a local endpoint") {
    FakeEndpoint endpoint;
    const OracleRequest req{TemplateId::BehaviorAbstraction, abstraction_vars(), true};

    auto ok = client(endpoint.url("/ok"));
    const auto resp = ok.call(req);
    CHECK(resp.raw.rfind("echo:", 0) == 0);
    CHECK(resp.latency_ms >= 0.0);
    CHECK(endpoint.last_body_["model"] == "test-model");
    CHECK(endpoint.last_body_["temperature"] == 0);
    CHECK_FALSE(endpoint.last_body_.contains("enable_thinking"));
    CHECK(endpoint.last_auth_ == "Bearer secret");
    CHECK(endpoint.last_body_["messages"][0]["content"] == render(req.id, req.variables));

    auto down = client(endpoint.url("/down"));
    CHECK(code_of([&] { down.call(req); }) == ErrorCode::OracleUnavailable);
    auto slow = client(endpoint.url("/slow"), 150);
    CHECK(code_of([&] { slow.call(req); }) == ErrorCode::OracleTimeout);
    auto odd = client(endpoint.url("/odd"));
    CHECK(code_of([&] { odd.call(req); }) == ErrorCode::MalformedOracleOutput);

    // Unbound variables fail before any request is sent.
    OracleRequest bad{TemplateId::BehaviorAbstraction, {}, true};
    CHECK(code_of([&] { ok.call(bad); }) == ErrorCode::TemplateError);
}

TEST_CASE("HTTP oracle with nothing listening is unavailable") {
    // Take a free port and release it again.
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    const int port = ntohs(addr.sin_port);
    ::close(fd);
    auto c = client("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", 1000);
    const OracleRequest req{TemplateId::BehaviorAbstraction, abstraction_vars(), true};
    CHECK(code_of([&] { c.call(req); }) == ErrorCode::OracleUnavailable);
}

TEST_CASE("HTTP oracle settings from the environment") {
    ::unsetenv("VISTA_ORACLE_URL");
    CHECK(code_of([] { HttpOracleOptions::from_env(); }) == ErrorCode::ConfigError);
    ::setenv("VISTA_ORACLE_URL", "http://127.0.0.1:1/v1/chat/completions", 1);
    ::setenv("VISTA_ORACLE_MODEL", "m1", 1);
    const auto o = HttpOracleOptions::from_env();
    CHECK(o.model == "m1");
    ::unsetenv("VISTA_ORACLE_URL");
    ::unsetenv("VISTA_ORACLE_MODEL");

    HttpOracleOptions no_scheme;
    no_scheme.url = "localhost:8080";
    CHECK(code_of([&] { HttpOracle h(no_scheme); }) == ErrorCode::ConfigError);
}
