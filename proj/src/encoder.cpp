#include "vista/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <fmt/format.h>

#include "httplib.h"
#include "json.hpp"

#include "vista/error.hpp"
#include "vista/prompt_data.hpp"

namespace vista {

namespace bg = boost::geometry;

namespace {

std::string bin_label(double value, double width, double open_from, const char* what) {
    if (!std::isfinite(value) || value < 0.0)
        fail(ErrorCode::InvalidParameter, fmt::format("{} must be a nonnegative number, got {}", what, value));
    if (value >= open_from) return fmt::format("[{},inf)", static_cast<long long>(open_from));
    const auto lo = static_cast<long long>(std::floor(value / width) * width);
    return fmt::format("[{},{})", lo, lo + static_cast<long long>(width));
}

}  // namespace

std::string draught_bin(double metres) { return bin_label(metres, 2.0, 12.0, "draught"); }
std::string length_bin(double metres) { return bin_label(metres, 50.0, 300.0, "length"); }
std::string width_bin(double metres) { return bin_label(metres, 5.0, 30.0, "width"); }

std::int64_t duration_bin(const MinimalSegment& segment) {
    if (segment.records.size() < 2)
        fail(ErrorCode::InvalidParameter, "duration needs at least two records");
    const std::int64_t span = segment.last_timestamp() - segment.first_timestamp();
    if (span < 0) fail(ErrorCode::InvalidParameter, "segment timestamps decrease");
    if (span >= kDurationOpenBin) return kDurationOpenBin;
    return span / kDurationBinWidth * kDurationBinWidth;
}

std::string duration_token(const MinimalSegment& segment) { return duration_label(duration_bin(segment)); }

std::string mode(const std::vector<std::string>& values) {
    if (values.empty()) fail(ErrorCode::EmptyInput, "mode of an empty list");
    std::map<std::string, std::size_t> counts;
    for (const auto& v : values) ++counts[v];
    const std::string* best = &values.front();
    std::size_t best_count = counts[*best];
    for (const auto& v : values) {
        if (counts[v] > best_count) {
            best = &v;
            best_count = counts[v];
        }
    }
    return *best;
}

// --- geofences ---------------------------------------------------------------

using Point = bg::model::d2::point_xy<double>;  // x = lon, y = lat
using Polygon = bg::model::polygon<Point>;
using MultiPolygon = bg::model::multi_polygon<Polygon>;
using Box = bg::model::box<Point>;

struct GeofenceIndex::Impl {
    struct Fence {
        std::size_t rank = 0;
        MultiPolygon shape;
        Box bounds;
    };
    std::vector<Fence> fences;  // sorted by rank, then file order
};

GeofenceIndex::GeofenceIndex() : impl_(std::make_unique<Impl>()) {}
GeofenceIndex::GeofenceIndex(GeofenceIndex&&) noexcept = default;
GeofenceIndex& GeofenceIndex::operator=(GeofenceIndex&&) noexcept = default;
GeofenceIndex::~GeofenceIndex() = default;

std::size_t GeofenceIndex::size() const { return impl_->fences.size(); }

namespace {

Polygon polygon_from(const nlohmann::json& rings) {
    if (!rings.is_array() || rings.empty()) fail(ErrorCode::ConfigError, "polygon without rings");
    Polygon poly;
    for (std::size_t r = 0; r < rings.size(); ++r) {
        auto& ring = r == 0 ? poly.outer() : (poly.inners().emplace_back(), poly.inners().back());
        for (const auto& pos : rings[r]) {
            if (!pos.is_array() || pos.size() < 2) fail(ErrorCode::ConfigError, "bad polygon position");
            ring.emplace_back(pos[0].get<double>(), pos[1].get<double>());
        }
        if (ring.size() < 4) fail(ErrorCode::ConfigError, "polygon ring needs at least four positions");
    }
    bg::correct(poly);
    return poly;
}

}  // namespace

GeofenceIndex GeofenceIndex::parse(const std::string& geojson, std::vector<std::string> priority) {
    GeofenceIndex index;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(geojson);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("geofence file is not JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") || !doc["features"].is_array())
        fail(ErrorCode::ConfigError, "geofence file must be a GeoJSON FeatureCollection");

    for (auto& p : priority) p = canonical_static_value(StaticKind::SpatialContext, p);
    const bool fixed = !priority.empty();
    try {
        for (const auto& feature : doc["features"]) {
            const auto& props = feature.at("properties");
            const std::string category =
                canonical_static_value(StaticKind::SpatialContext, props.at("category").get<std::string>());
            if (category.empty()) fail(ErrorCode::ConfigError, "feature with an empty category");
            auto it = std::find(priority.begin(), priority.end(), category);
            if (it == priority.end()) {
                if (fixed) fail(ErrorCode::ConfigError, "category '" + category + "' is not in context_priority");
                priority.push_back(category);
                it = priority.end() - 1;
            }
            Impl::Fence fence;
            fence.rank = static_cast<std::size_t>(it - priority.begin());
            const auto& geom = feature.at("geometry");
            const std::string type = geom.at("type").get<std::string>();
            if (type == "Polygon") {
                fence.shape.push_back(polygon_from(geom.at("coordinates")));
            } else if (type == "MultiPolygon") {
                for (const auto& rings : geom.at("coordinates")) fence.shape.push_back(polygon_from(rings));
            } else {
                fail(ErrorCode::ConfigError, "unsupported geofence geometry '" + type + "'");
            }
            bg::envelope(fence.shape, fence.bounds);
            index.impl_->fences.push_back(std::move(fence));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("malformed geofence feature: ") + e.what());
    }
    std::stable_sort(index.impl_->fences.begin(), index.impl_->fences.end(),
                     [](const Impl::Fence& a, const Impl::Fence& b) { return a.rank < b.rank; });
    index.priority_ = std::move(priority);
    return index;
}

GeofenceIndex GeofenceIndex::load(const std::string& path, std::vector<std::string> priority) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot read geofence file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), std::move(priority));
}

std::string GeofenceIndex::lookup(double lat, double lon) const {
    const Point p(lon, lat);
    for (const auto& f : impl_->fences)
        if (bg::covered_by(p, f.bounds) && bg::covered_by(p, f.shape)) return priority_[f.rank];
    return kOpenWater;
}

// --- overpass ----------------------------------------------------------------

OverpassProvider::OverpassProvider(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
    if (url_.find("://") == std::string::npos) fail(ErrorCode::ConfigError, "overpass_url lacks a scheme");
}

std::string OverpassProvider::category_for_tags(const std::map<std::string, std::string>& tags) {
    auto get = [&](const char* k) {
        auto it = tags.find(k);
        return it == tags.end() ? std::string() : it->second;
    };
    const std::string seamark = get("seamark:type");
    if (seamark.rfind("separation_", 0) == 0) return "traffic-separation-scheme";
    if (seamark == "anchorage" || seamark == "anchor_berth") return "anchorage";
    if (seamark == "fairway" || seamark == "recommended_track") return "shipping-lane";
    if (seamark == "harbour" || get("landuse") == "port" || get("harbour") == "yes" || get("industrial") == "port")
        return "port";
    return {};
}

std::string OverpassProvider::lookup(double lat, double lon) const {
    const std::pair<std::int64_t, std::int64_t> cell{std::llround(lat * 1000.0), std::llround(lon * 1000.0)};
    {
        std::lock_guard lock(mu_);
        if (auto it = cache_.find(cell); it != cache_.end()) return it->second;
    }
    const auto scheme_end = url_.find("://");
    const auto path_start = url_.find('/', scheme_end + 3);
    httplib::Client client(url_.substr(0, path_start));
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    const std::string query =
        fmt::format("[out:json][timeout:{}];is_in({:.6f},{:.6f})->.a;area.a;out tags;", std::max<long long>(1, secs.count()),
                    lat, lon);
    const std::string path = path_start == std::string::npos ? "/api/interpreter" : url_.substr(path_start);
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, httplib::Params{{"data", query}});
    if (!res) {
        if (std::chrono::steady_clock::now() - started >= timeout_)
            fail(ErrorCode::OracleTimeout, "overpass query timed out");
        fail(ErrorCode::OracleUnavailable, "overpass: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) fail(ErrorCode::OracleUnavailable, fmt::format("overpass HTTP status {}", res->status));

    static const std::vector<std::string> rank = {"traffic-separation-scheme", "port", "anchorage", "shipping-lane"};
    std::string best = kOpenWater;
    std::size_t best_rank = rank.size();
    try {
        const auto doc = nlohmann::json::parse(res->body);
        for (const auto& el : doc.at("elements")) {
            std::map<std::string, std::string> tags;
            if (el.contains("tags"))
                for (const auto& [k, v] : el["tags"].items())
                    if (v.is_string()) tags[k] = v.get<std::string>();
            const std::string c = category_for_tags(tags);
            const auto r = static_cast<std::size_t>(std::find(rank.begin(), rank.end(), c) - rank.begin());
            if (r < best_rank) {
                best_rank = r;
                best = c;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::OracleUnavailable, std::string("overpass payload: ") + e.what());
    }
    std::lock_guard lock(mu_);
    cache_.emplace(cell, best);
    return best;
}

// --- encoding ----------------------------------------------------------------

StaticTuple encode_static(const MinimalSegment& segment, const ContextProvider& context) {
    if (segment.records.empty()) fail(ErrorCode::EmptyInput, "empty segment");
    if (!segment.complete())
        fail(ErrorCode::IncompleteSegment,
             fmt::format("segment {} of vessel {} has missing attributes", segment.index, segment.vessel_id));
    std::vector<std::string> ids, nav, cargo, draught, length, width, ship, ctx;
    for (const auto& r : segment.records) {
        ids.push_back(r.vessel_id);
        nav.push_back(*r.nav_status);
        cargo.push_back(*r.cargo_type);
        draught.push_back(draught_bin(*r.draught));
        length.push_back(length_bin(*r.length));
        width.push_back(width_bin(*r.width));
        ship.push_back(*r.ship_type);
        ctx.push_back(context.lookup(*r.lat, *r.lon));
    }
    StaticTuple s;
    s.vessel_id = canonical_static_value(StaticKind::VesselId, mode(ids));
    s.nav_status = canonical_static_value(StaticKind::NavStatus, mode(nav));
    s.cargo_type = canonical_static_value(StaticKind::CargoType, mode(cargo));
    s.draught_bin = mode(draught);
    s.length_bin = mode(length);
    s.width_bin = mode(width);
    s.ship_type = canonical_static_value(StaticKind::ShipType, mode(ship));
    s.spatial_context = canonical_static_value(StaticKind::SpatialContext, mode(ctx));
    require_canonical(s);
    return s;
}

BehaviorTuple abstract_behavior(const MinimalSegment& segment, const StaticTuple& statics, VocabularyStore& vocabs,
                                Oracle& oracle) {
    if (!segment.complete())
        fail(ErrorCode::IncompleteSegment,
             fmt::format("segment {} of vessel {} has missing attributes", segment.index, segment.vessel_id));
    const std::int64_t bin = duration_bin(segment);
    const Vocabularies snap = vocabs.snapshot();
    Variables vars;
    vars["trajectory_data"] = format_trajectory_data(segment.records, &statics);
    vars["speed_dict"] = format_token_list(snap[VocabKind::Speed].tokens);
    vars["course_dict"] = format_token_list(snap[VocabKind::Course].tokens);
    vars["heading_dict"] = format_token_list(snap[VocabKind::Heading].tokens);
    vars["intent_dict"] = format_token_list(snap[VocabKind::Intent].tokens);
    const auto resp = call_oracle(oracle, TemplateId::BehaviorAbstraction, std::move(vars));
    const ParsedPattern p = parse_behavior_abstraction(resp.raw);

    auto token = [&](VocabKind kind, const std::string& raw) {
        const std::string t = canonical_token(raw);
        if (t.empty())
            fail(ErrorCode::MalformedOracleOutput, fmt::format("empty {} token after normalisation", to_string(kind)));
        return vocabs.add(kind, t);
    };
    BehaviorTuple b;
    b.speed = token(VocabKind::Speed, p.speed);
    b.course = token(VocabKind::Course, p.course);
    b.heading = token(VocabKind::Heading, p.heading);
    b.intent = token(VocabKind::Intent, p.intent);
    b.duration_bin = bin;
    return b;
}

}  // namespace vista
