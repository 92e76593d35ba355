#pragma once

// Static/spatial encoding and behavior abstraction of complete segments.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vista/ais.hpp"
#include "vista/knowledge.hpp"
#include "vista/oracle.hpp"
#include "vista/vocabulary.hpp"

namespace vista {

inline constexpr const char* kOpenWater = "open-water";

std::string draught_bin(double metres);  // 2 m up to 12
std::string length_bin(double metres);   // 50 m up to 300
std::string width_bin(double metres);    // 5 m up to 30

/// Lower bound of the duration bin of the segment span. Fewer than two
/// records -> InvalidParameter.
std::int64_t duration_bin(const MinimalSegment& segment);
std::string duration_token(const MinimalSegment& segment);

/// Majority value; ties go to the value seen first.
std::string mode(const std::vector<std::string>& values);

/// Spatial context category for a coordinate.
class ContextProvider {
public:
    virtual ~ContextProvider() = default;
    virtual std::string lookup(double lat, double lon) const = 0;
};

class OpenWaterProvider final : public ContextProvider {
public:
    std::string lookup(double, double) const override { return kOpenWater; }
};

/// Offline point-in-polygon index over a GeoJSON FeatureCollection whose
/// features carry properties.category. Polygon and MultiPolygon geometries,
/// holes honoured, boundary points count as inside.
class GeofenceIndex final : public ContextProvider {
public:
    /// `priority` orders categories when polygons overlap; categories absent
    /// from a non-empty list -> ConfigError. Empty list = file order.
    static GeofenceIndex load(const std::string& path, std::vector<std::string> priority = {});
    static GeofenceIndex parse(const std::string& geojson, std::vector<std::string> priority = {});

    std::string lookup(double lat, double lon) const override;

    const std::vector<std::string>& categories() const { return priority_; }
    std::size_t size() const;

    GeofenceIndex(GeofenceIndex&&) noexcept;
    GeofenceIndex& operator=(GeofenceIndex&&) noexcept;
    ~GeofenceIndex() override;

private:
    GeofenceIndex();
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::vector<std::string> priority_;
};

/// Online lookup through an Overpass endpoint, mapped onto the same category
/// names and cached per 1e-3 degree cell.
class OverpassProvider final : public ContextProvider {
public:
    OverpassProvider(std::string url, std::chrono::milliseconds timeout);
    std::string lookup(double lat, double lon) const override;

    /// Category for the tags of one enclosing area, or "" when unmapped.
    static std::string category_for_tags(const std::map<std::string, std::string>& tags);

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<std::int64_t, std::int64_t>, std::string> cache_;
};

/// Static tuple of a complete segment. Incomplete -> IncompleteSegment.
StaticTuple encode_static(const MinimalSegment& segment, const ContextProvider& context);

/// Renders the behavior abstraction prompt, canonicalises the four tokens
/// against the vocabularies (new tokens are added) and attaches the duration
/// bin.
BehaviorTuple abstract_behavior(const MinimalSegment& segment, const StaticTuple& statics, VocabularyStore& vocabs,
                                Oracle& oracle);

}  // namespace vista
