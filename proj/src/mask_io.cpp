#include <fstream>
#include <sstream>

#include "json.hpp"

#include "vista/ais.hpp"
#include "vista/error.hpp"

namespace vista {

std::string masks_to_json(const std::vector<ObservationMask>& masks) {
    auto arr = nlohmann::json::array();
    for (const auto& mk : masks) {
        nlohmann::json j;
        j["vessel_id"] = mk.vessel_id;
        j["m"] = mk.m;
        j["bits"] = mk.bits;
        j["seed"] = mk.seed ? nlohmann::json(*mk.seed) : nlohmann::json(nullptr);
        j["removal_prob"] = mk.removal_prob ? nlohmann::json(*mk.removal_prob) : nlohmann::json(nullptr);
        j["removed"] = mk.gap_indices();
        arr.push_back(std::move(j));
    }
    return arr.dump(1) + "\n";
}

std::vector<ObservationMask> masks_from_json(const std::string& text) {
    std::vector<ObservationMask> out;
    try {
        const auto arr = nlohmann::json::parse(text);
        if (!arr.is_array()) fail(ErrorCode::ConfigError, "mask file must hold a JSON array");
        for (const auto& j : arr) {
            ObservationMask mk;
            mk.vessel_id = j.at("vessel_id").get<std::string>();
            mk.m = j.at("m").get<std::size_t>();
            mk.bits = j.at("bits").get<std::vector<std::uint8_t>>();
            if (j.contains("seed") && !j["seed"].is_null()) mk.seed = j["seed"].get<std::uint64_t>();
            if (j.contains("removal_prob") && !j["removal_prob"].is_null())
                mk.removal_prob = j["removal_prob"].get<double>();
            mk.internal.assign(mk.bits.size(), std::vector<std::uint8_t>(mk.m, 0));
            for (auto k : j.value("removed", std::vector<std::size_t>{})) {
                if (k >= mk.bits.size() || mk.bits[k] != 0)
                    fail(ErrorCode::ConfigError, "mask for vessel " + mk.vessel_id + " removes a complete segment");
                mk.internal[k].assign(mk.m, 1);
            }
            out.push_back(std::move(mk));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("malformed mask file: ") + e.what());
    }
    return out;
}

void write_masks_file(const std::string& path, const std::vector<ObservationMask>& masks) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << masks_to_json(masks);
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

std::vector<ObservationMask> read_masks_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return masks_from_json(ss.str());
}

}  // namespace vista
