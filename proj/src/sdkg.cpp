#include "vista/sdkg.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "vista/error.hpp"

namespace vista {

using nlohmann::json;

Rational PriorTable::exact(NodeId id) const {
    for (const auto& e : entries)
        if (e.id == id) return Rational(e.support, total);
    fail(ErrorCode::UnknownNode, fmt::format("node {} is not in the prior table", id));
}

std::vector<PriorEntry> top_k(const PriorTable& priors, std::size_t k) {
    std::vector<PriorEntry> sorted = priors.entries;
    // All priors share one denominator, so ranking by support is exact.
    std::sort(sorted.begin(), sorted.end(), [](const PriorEntry& a, const PriorEntry& b) {
        if (a.support != b.support) return a.support > b.support;
        return a.id < b.id;
    });
    if (sorted.size() > k) sorted.resize(k);
    return sorted;
}

SdKg::UpsertResult SdKg::upsert_unit(const KnowledgeUnit& unit) {
    require_canonical(unit.statics);
    require_canonical(unit.behavior);

    UpsertResult res;
    for (const auto& m : unit.statics.members()) res.static_ids.push_back(upsert_static(m.kind, m.value));
    res.behavior = upsert_behavior(unit.behavior);
    if (unit.function_id && functions_.count(*unit.function_id))
        res.function = *unit.function_id;
    else
        res.function = upsert_function(unit.function, unit.function_description);

    for (NodeId s : res.static_ids) add_edge(s, res.behavior);
    add_edge(res.behavior, res.function);
    ++revision_;
    return res;
}

NodeId SdKg::upsert_static(StaticKind kind, const std::string& value) {
    if (!is_canonical_static_value(kind, value))
        fail(ErrorCode::NotCanonical, fmt::format("{} value '{}' is not canonical", to_string(kind), value));
    const StaticMember key{kind, value};
    if (auto it = static_index_.find(key); it != static_index_.end()) return it->second;
    const NodeId id = next_id_++;
    statics_[id] = StaticNode{id, kind, value};
    static_index_[key] = id;
    return id;
}

NodeId SdKg::upsert_behavior(const BehaviorTuple& tuple) {
    require_canonical(tuple);
    if (auto it = behavior_index_.find(tuple); it != behavior_index_.end()) return it->second;
    const NodeId id = next_id_++;
    behaviors_[id] = BehaviorNode{id, tuple};
    behavior_index_[tuple] = id;
    return id;
}

NodeId SdKg::upsert_function(const FunctionSpec& func, const std::string& description) {
    const std::string key = func.key();
    if (auto it = function_index_.find(key); it != function_index_.end()) {
        auto& node = functions_.at(it->second);
        if (node.description.empty()) node.description = description;
        return it->second;
    }
    const NodeId id = next_id_++;
    functions_[id] = FunctionNode{id, func, description};
    function_index_[key] = id;
    return id;
}

void SdKg::add_edge(NodeId src, NodeId dst, std::uint64_t by) {
    const NodeType ts = type_of(src);
    const NodeType td = type_of(dst);
    EdgeKind kind;
    if (ts == NodeType::Static && td == NodeType::Behavior)
        kind = EdgeKind::StaticBehavior;
    else if (ts == NodeType::Behavior && td == NodeType::Function)
        kind = EdgeKind::BehaviorFunction;
    else
        fail(ErrorCode::InvalidParameter, fmt::format("edge {} -> {} joins incompatible node types", src, dst));
    if (by == 0) fail(ErrorCode::InvalidParameter, "edge increment must be positive");
    auto [it, inserted] = edges_.try_emplace({src, dst}, Edge{src, dst, 0, kind});
    it->second.weight += by;
}

std::optional<NodeId> SdKg::find_static(StaticKind kind, const std::string& value) const {
    if (auto it = static_index_.find({kind, value}); it != static_index_.end()) return it->second;
    return std::nullopt;
}

std::optional<NodeId> SdKg::find_behavior(const BehaviorTuple& tuple) const {
    if (auto it = behavior_index_.find(tuple); it != behavior_index_.end()) return it->second;
    return std::nullopt;
}

std::optional<NodeId> SdKg::find_function(const FunctionSpec& func) const {
    if (auto it = function_index_.find(func.key()); it != function_index_.end()) return it->second;
    return std::nullopt;
}

bool SdKg::contains(NodeId id) const { return statics_.count(id) || behaviors_.count(id) || functions_.count(id); }

void SdKg::require(NodeId id) const {
    if (!contains(id)) fail(ErrorCode::UnknownNode, fmt::format("node {} is not in the graph", id));
}

NodeType SdKg::type_of(NodeId id) const {
    if (statics_.count(id)) return NodeType::Static;
    if (behaviors_.count(id)) return NodeType::Behavior;
    if (functions_.count(id)) return NodeType::Function;
    fail(ErrorCode::UnknownNode, fmt::format("node {} is not in the graph", id));
}

const StaticNode& SdKg::static_node(NodeId id) const {
    auto it = statics_.find(id);
    if (it == statics_.end()) fail(ErrorCode::UnknownNode, fmt::format("node {} is not a static node", id));
    return it->second;
}

const BehaviorNode& SdKg::behavior_node(NodeId id) const {
    auto it = behaviors_.find(id);
    if (it == behaviors_.end()) fail(ErrorCode::UnknownNode, fmt::format("node {} is not a behavior node", id));
    return it->second;
}

const FunctionNode& SdKg::function_node(NodeId id) const {
    auto it = functions_.find(id);
    if (it == functions_.end()) fail(ErrorCode::UnknownNode, fmt::format("node {} is not a function node", id));
    return it->second;
}

std::uint64_t SdKg::weight(NodeId src, NodeId dst) const {
    auto it = edges_.find({src, dst});
    return it == edges_.end() ? 0 : it->second.weight;
}

std::vector<NodeId> SdKg::candidate_behaviors(std::span<const NodeId> static_ids) const {
    std::set<NodeId> out;
    for (NodeId s : static_ids) {
        static_node(s);
        for (auto it = edges_.lower_bound({s, 0}); it != edges_.end() && it->first.first == s; ++it)
            if (it->second.weight > 0) out.insert(it->first.second);
    }
    return {out.begin(), out.end()};
}

std::vector<NodeId> SdKg::candidate_functions(NodeId behavior) const {
    behavior_node(behavior);
    std::vector<NodeId> out;
    for (auto it = edges_.lower_bound({behavior, 0}); it != edges_.end() && it->first.first == behavior; ++it)
        if (it->second.weight > 0) out.push_back(it->first.second);
    return out;
}

PriorTable SdKg::prior(std::span<const NodeId> query, std::span<const NodeId> candidates) const {
    if (candidates.empty()) fail(ErrorCode::EmptyCandidates, "prior over an empty candidate set");
    for (NodeId q : query) require(q);
    std::vector<NodeId> ids(candidates.begin(), candidates.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    PriorTable table;
    for (NodeId c : ids) {
        require(c);
        BigInt support = 1;
        for (NodeId q : query) support *= BigInt(weight(q, c)) + 1;
        table.total += support;
        table.entries.push_back({c, support, 0.0});
    }
    for (auto& e : table.entries) e.prior = Rational(e.support, table.total).convert_to<double>();
    return table;
}

PriorTable SdKg::behavior_prior(std::span<const NodeId> static_ids, std::span<const NodeId> candidates) const {
    for (NodeId c : candidates) behavior_node(c);
    return prior(static_ids, candidates);
}

PriorTable SdKg::function_prior(NodeId behavior, std::span<const NodeId> candidates) const {
    behavior_node(behavior);
    for (NodeId c : candidates) function_node(c);
    const NodeId q[] = {behavior};
    return prior(q, candidates);
}

SdKg SdKg::induced_subgraph(std::span<const NodeId> ids) const {
    SdKg sub;
    std::set<NodeId> keep;
    for (NodeId id : ids) {
        require(id);
        keep.insert(id);
    }
    for (NodeId id : keep) {
        if (auto it = statics_.find(id); it != statics_.end()) {
            sub.statics_[id] = it->second;
            sub.static_index_[{it->second.kind, it->second.value}] = id;
        } else if (auto bt = behaviors_.find(id); bt != behaviors_.end()) {
            sub.behaviors_[id] = bt->second;
            sub.behavior_index_[bt->second.tuple] = id;
        } else {
            const auto& fn = functions_.at(id);
            sub.functions_[id] = fn;
            sub.function_index_[fn.func.key()] = id;
        }
    }
    for (const auto& [key, e] : edges_)
        if (keep.count(key.first) && keep.count(key.second)) sub.edges_[key] = e;
    sub.next_id_ = keep.empty() ? 1 : *keep.rbegin() + 1;
    return sub;
}

std::string SdKg::dot_name(NodeId id) const {
    switch (type_of(id)) {
        case NodeType::Static: return fmt::format("vessel_{}", id);
        case NodeType::Behavior: return fmt::format("Movement_Pattern_{}", id);
        case NodeType::Function: return fmt::format("Function_{}", id);
    }
    return {};
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

}  // namespace

std::string SdKg::dot_label(NodeId id) const {
    switch (type_of(id)) {
        case NodeType::Static: {
            const auto& n = statics_.at(id);
            return fmt::format("{}: {}", to_string(n.kind), n.value);
        }
        case NodeType::Behavior: return behavior_label(behaviors_.at(id).tuple);
        case NodeType::Function: {
            const auto& f = functions_.at(id).func;
            std::string params;
            for (const auto& [name, value] : f.params)
                params += fmt::format("{}{}={}", params.empty() ? "" : ", ", name, value);
            if (f.family.empty()) return fmt::format("lat: {}; lon: {}", f.lat_expr, f.lon_expr);
            return params.empty() ? f.family : fmt::format("{} ({})", f.family, params);
        }
    }
    return {};
}

std::string SdKg::to_dot() const {
    if (node_count() == 0) return "digraph sdkg { }\n";
    std::set<NodeId> ids;
    for (const auto& [id, n] : statics_) ids.insert(id);
    for (const auto& [id, n] : behaviors_) ids.insert(id);
    for (const auto& [id, n] : functions_) ids.insert(id);

    std::ostringstream out;
    out << "digraph sdkg {\n";
    for (NodeId id : ids) out << "  " << dot_name(id) << " [label=\"" << dot_escape(dot_label(id)) << "\"];\n";
    for (const auto& [key, e] : edges_)
        out << "  " << dot_name(key.first) << " -> " << dot_name(key.second) << " [label=\"w=" << e.weight
            << "\"];\n";
    out << "}\n";
    return out.str();
}

void SdKg::merge_nodes(NodeId keep, NodeId drop) {
    if (keep == drop) return;
    if (type_of(keep) != type_of(drop))
        fail(ErrorCode::InvalidParameter, fmt::format("cannot merge nodes {} and {} of different types", keep, drop));

    std::vector<Edge> moved;
    for (auto it = edges_.begin(); it != edges_.end();) {
        if (it->first.first == drop || it->first.second == drop) {
            moved.push_back(it->second);
            it = edges_.erase(it);
        } else {
            ++it;
        }
    }
    for (Edge e : moved) {
        if (e.src == drop) e.src = keep;
        if (e.dst == drop) e.dst = keep;
        auto [it, inserted] = edges_.try_emplace({e.src, e.dst}, Edge{e.src, e.dst, 0, e.kind});
        it->second.weight += e.weight;
    }

    if (auto it = statics_.find(drop); it != statics_.end()) {
        static_index_.erase({it->second.kind, it->second.value});
        statics_.erase(it);
    } else if (auto bt = behaviors_.find(drop); bt != behaviors_.end()) {
        behavior_index_.erase(bt->second.tuple);
        behaviors_.erase(bt);
    } else {
        auto ft = functions_.find(drop);
        function_index_.erase(ft->second.func.key());
        auto& kept = functions_.at(keep);
        if (kept.description.empty()) kept.description = ft->second.description;
        functions_.erase(ft);
    }
    ++revision_;
}

void SdKg::canonicalize(const Vocabularies& vocabs) {
    std::vector<NodeId> ids;
    for (const auto& [id, n] : behaviors_) ids.push_back(id);
    for (NodeId id : ids) {
        auto it = behaviors_.find(id);
        if (it == behaviors_.end()) continue;
        const BehaviorTuple resolved = vocabs.resolve(it->second.tuple);
        if (resolved == it->second.tuple) continue;
        require_canonical(resolved);
        auto existing = behavior_index_.find(resolved);
        if (existing != behavior_index_.end() && existing->second != id) {
            const NodeId other = existing->second;
            const NodeId keep = std::min(id, other);
            const NodeId drop = std::max(id, other);
            behavior_index_.erase(behaviors_.at(keep).tuple);
            behaviors_.at(keep).tuple = resolved;
            merge_nodes(keep, drop);
            behavior_index_[resolved] = keep;
        } else {
            behavior_index_.erase(it->second.tuple);
            it->second.tuple = resolved;
            behavior_index_[resolved] = id;
            ++revision_;
        }
    }
}

std::size_t SdKg::node_count() const { return statics_.size() + behaviors_.size() + functions_.size(); }

bool SdKg::operator==(const SdKg& o) const {
    return next_id_ == o.next_id_ && revision_ == o.revision_ && statics_ == o.statics_ &&
           behaviors_ == o.behaviors_ && functions_ == o.functions_ && edges_ == o.edges_ && vocabs_ == o.vocabs_;
}

// --- snapshot ---------------------------------------------------------------

json SdKg::to_json() const {
    json j;
    j["schema_version"] = kSnapshotSchemaVersion;
    j["next_id"] = next_id_;
    j["revision"] = revision_;

    json statics = json::array();
    for (const auto& [id, n] : statics_)
        statics.push_back({{"id", id}, {"kind", std::string(to_string(n.kind))}, {"value", n.value}});
    j["static_nodes"] = std::move(statics);

    json behaviors = json::array();
    for (const auto& [id, n] : behaviors_)
        behaviors.push_back({{"id", id},
                             {"speed", n.tuple.speed},
                             {"course", n.tuple.course},
                             {"heading", n.tuple.heading},
                             {"intent", n.tuple.intent},
                             {"duration_bin", n.tuple.duration_bin}});
    j["behavior_nodes"] = std::move(behaviors);

    json functions = json::array();
    for (const auto& [id, n] : functions_) {
        json params = json::array();
        for (const auto& [name, value] : n.func.params) params.push_back({{"name", name}, {"value", value}});
        functions.push_back({{"id", id},
                             {"lat", n.func.lat_expr},
                             {"lon", n.func.lon_expr},
                             {"params", std::move(params)},
                             {"origin", std::string(to_string(n.func.origin))},
                             {"family", n.func.family},
                             {"description", n.description}});
    }
    j["function_nodes"] = std::move(functions);

    json edges = json::array();
    for (const auto& [key, e] : edges_) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"weight", e.weight}});
    j["edges"] = std::move(edges);

    json vocabs = json::object();
    for (VocabKind k : kVocabKinds) {
        const auto& v = vocabs_[k];
        vocabs[std::string(to_string(k))] = {{"tokens", v.tokens}, {"merge_map", v.merge_map}};
    }
    j["vocabularies"] = std::move(vocabs);
    return j;
}

SdKg SdKg::from_json(const json& j) {
    if (!j.is_object() || !j.contains("schema_version"))
        fail(ErrorCode::IncompatibleSnapshot, "snapshot has no schema_version");
    if (j.at("schema_version") != kSnapshotSchemaVersion)
        fail(ErrorCode::IncompatibleSnapshot, fmt::format("snapshot schema_version {} (expected {})",
                                                          j.at("schema_version").dump(), kSnapshotSchemaVersion));
    SdKg kg;
    try {
        for (const auto& n : j.at("static_nodes")) {
            StaticNode s{n.at("id").get<NodeId>(), static_kind_from_string(n.at("kind").get<std::string>()),
                         n.at("value").get<std::string>()};
            if (kg.contains(s.id)) fail(ErrorCode::IncompatibleSnapshot, fmt::format("duplicate node id {}", s.id));
            kg.static_index_[{s.kind, s.value}] = s.id;
            kg.statics_[s.id] = std::move(s);
        }
        for (const auto& n : j.at("behavior_nodes")) {
            BehaviorNode b;
            b.id = n.at("id").get<NodeId>();
            b.tuple = {n.at("speed").get<std::string>(), n.at("course").get<std::string>(),
                       n.at("heading").get<std::string>(), n.at("intent").get<std::string>(),
                       n.at("duration_bin").get<std::int64_t>()};
            if (kg.contains(b.id)) fail(ErrorCode::IncompatibleSnapshot, fmt::format("duplicate node id {}", b.id));
            kg.behavior_index_[b.tuple] = b.id;
            kg.behaviors_[b.id] = std::move(b);
        }
        for (const auto& n : j.at("function_nodes")) {
            FunctionNode f;
            f.id = n.at("id").get<NodeId>();
            f.func.lat_expr = n.at("lat").get<std::string>();
            f.func.lon_expr = n.at("lon").get<std::string>();
            for (const auto& p : n.at("params"))
                f.func.params.emplace_back(p.at("name").get<std::string>(), p.at("value").get<double>());
            f.func.origin = function_origin_from_string(n.at("origin").get<std::string>());
            f.func.family = n.value("family", "");
            f.description = n.value("description", "");
            if (kg.contains(f.id)) fail(ErrorCode::IncompatibleSnapshot, fmt::format("duplicate node id {}", f.id));
            kg.function_index_[f.func.key()] = f.id;
            kg.functions_[f.id] = std::move(f);
        }
        for (const auto& e : j.at("edges")) {
            const auto src = e.at("src").get<NodeId>();
            const auto dst = e.at("dst").get<NodeId>();
            const auto w = e.at("weight").get<std::uint64_t>();
            if (w == 0) fail(ErrorCode::IncompatibleSnapshot, "edge with zero weight");
            kg.add_edge(src, dst, w);
        }
        if (j.contains("vocabularies")) {
            for (VocabKind k : kVocabKinds) {
                const auto& v = j.at("vocabularies").at(std::string(to_string(k)));
                kg.vocabs_[k].tokens = v.at("tokens").get<std::vector<std::string>>();
                kg.vocabs_[k].merge_map = v.at("merge_map").get<std::map<std::string, std::string>>();
            }
        }
        kg.next_id_ = j.at("next_id").get<NodeId>();
        kg.revision_ = j.at("revision").get<std::uint64_t>();
    } catch (const json::exception& ex) {
        fail(ErrorCode::IncompatibleSnapshot, std::string("malformed snapshot: ") + ex.what());
    } catch (const Error& ex) {
        if (ex.code() == ErrorCode::IncompatibleSnapshot) throw;
        fail(ErrorCode::IncompatibleSnapshot, std::string("invalid snapshot: ") + ex.what());
    }
    NodeId max_id = 0;
    for (const auto& [id, n] : kg.statics_) max_id = std::max(max_id, id);
    for (const auto& [id, n] : kg.behaviors_) max_id = std::max(max_id, id);
    for (const auto& [id, n] : kg.functions_) max_id = std::max(max_id, id);
    if (kg.next_id_ <= max_id) fail(ErrorCode::IncompatibleSnapshot, "next_id does not exceed the largest node id");
    return kg;
}

void SdKg::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << to_json().dump(1) << '\n';
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

SdKg SdKg::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot read " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& ex) {
        fail(ErrorCode::IncompatibleSnapshot, path + " is not valid JSON: " + ex.what());
    }
    return from_json(j);
}

}  // namespace vista
