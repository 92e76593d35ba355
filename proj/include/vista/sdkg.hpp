#pragma once

// Weighted knowledge graph: static attribute, behavior and function nodes;
// static->behavior and behavior->function edges counting co-occurrences.
//
// Not internally synchronised. Concurrent const access is safe; mutation must
// be serialised by the caller (the workflow commit queue).

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"

#include "vista/function_spec.hpp"
#include "vista/knowledge.hpp"
#include "vista/vocabulary.hpp"

namespace vista {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class NodeType { Static, Behavior, Function };
enum class EdgeKind { StaticBehavior, BehaviorFunction };

struct StaticNode {
    NodeId id = 0;
    StaticKind kind = StaticKind::VesselId;
    std::string value;
    bool operator==(const StaticNode&) const = default;
};

struct BehaviorNode {
    NodeId id = 0;
    BehaviorTuple tuple;
    bool operator==(const BehaviorNode&) const = default;
};

struct FunctionNode {
    NodeId id = 0;
    FunctionSpec func;
    std::string description;
    bool operator==(const FunctionNode&) const = default;
};

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    std::uint64_t weight = 0;
    EdgeKind kind = EdgeKind::StaticBehavior;
    bool operator==(const Edge&) const = default;
};

struct PriorEntry {
    NodeId id = 0;
    BigInt support;  // product of (w+1) over the query nodes
    double prior = 0.0;
};

struct PriorTable {
    std::vector<PriorEntry> entries;  // ascending node id
    BigInt total;                     // sum of supports

    Rational exact(NodeId id) const;
};

/// Highest prior first; ties by ascending node id. At most k entries.
std::vector<PriorEntry> top_k(const PriorTable& priors, std::size_t k);

inline constexpr int kSnapshotSchemaVersion = 1;

class SdKg {
public:
    struct UpsertResult {
        std::vector<NodeId> static_ids;
        NodeId behavior = 0;
        NodeId function = 0;
    };

    /// Inserts absent nodes and bumps every static->behavior edge and the
    /// behavior->function edge by one. One revision per unit.
    UpsertResult upsert_unit(const KnowledgeUnit& unit);

    NodeId upsert_static(StaticKind kind, const std::string& value);
    NodeId upsert_behavior(const BehaviorTuple& tuple);
    /// Dedups on exact expression text and parameters only.
    NodeId upsert_function(const FunctionSpec& func, const std::string& description);
    /// Adds `by` to the edge weight, creating it when absent.
    void add_edge(NodeId src, NodeId dst, std::uint64_t by = 1);

    std::optional<NodeId> find_static(StaticKind kind, const std::string& value) const;
    std::optional<NodeId> find_behavior(const BehaviorTuple& tuple) const;
    std::optional<NodeId> find_function(const FunctionSpec& func) const;

    bool contains(NodeId id) const;
    NodeType type_of(NodeId id) const;  // UnknownNode if absent
    const StaticNode& static_node(NodeId id) const;
    const BehaviorNode& behavior_node(NodeId id) const;
    const FunctionNode& function_node(NodeId id) const;
    std::uint64_t weight(NodeId src, NodeId dst) const;  // 0 when absent

    /// Behaviors reachable from at least one query node, ascending id.
    std::vector<NodeId> candidate_behaviors(std::span<const NodeId> static_ids) const;
    PriorTable behavior_prior(std::span<const NodeId> static_ids, std::span<const NodeId> candidates) const;
    std::vector<NodeId> candidate_functions(NodeId behavior) const;
    PriorTable function_prior(NodeId behavior, std::span<const NodeId> candidates) const;

    SdKg induced_subgraph(std::span<const NodeId> ids) const;
    std::string to_dot() const;

    /// Folds `drop` into `keep` (same node type): edges are redirected and
    /// weights summed.
    void merge_nodes(NodeId keep, NodeId drop);
    /// Rewrites behavior tokens through the vocabulary merge maps, merging
    /// behavior nodes whose tuples collide into the lowest id.
    void canonicalize(const Vocabularies& vocabs);

    std::size_t node_count() const;
    std::size_t edge_count() const { return edges_.size(); }
    std::uint64_t revision() const noexcept { return revision_; }

    const std::map<NodeId, StaticNode>& static_nodes() const { return statics_; }
    const std::map<NodeId, BehaviorNode>& behavior_nodes() const { return behaviors_; }
    const std::map<NodeId, FunctionNode>& function_nodes() const { return functions_; }
    const std::map<std::pair<NodeId, NodeId>, Edge>& edges() const { return edges_; }

    Vocabularies& vocabularies() { return vocabs_; }
    const Vocabularies& vocabularies() const { return vocabs_; }

    nlohmann::json to_json() const;
    static SdKg from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static SdKg load(const std::string& path);

    /// DOT node name: vessel_<id>, Movement_Pattern_<id> or Function_<id>.
    std::string dot_name(NodeId id) const;

    bool operator==(const SdKg& other) const;

private:
    NodeId next_id_ = 1;
    std::uint64_t revision_ = 0;
    std::map<NodeId, StaticNode> statics_;
    std::map<NodeId, BehaviorNode> behaviors_;
    std::map<NodeId, FunctionNode> functions_;
    std::map<std::pair<NodeId, NodeId>, Edge> edges_;
    std::map<StaticMember, NodeId> static_index_;
    std::map<BehaviorTuple, NodeId> behavior_index_;
    std::map<std::string, NodeId> function_index_;
    Vocabularies vocabs_;

    void require(NodeId id) const;
    std::string dot_label(NodeId id) const;
    PriorTable prior(std::span<const NodeId> query, std::span<const NodeId> candidates) const;
};

/// Regex matched by DOT node names; explanations must not contain them.
inline constexpr const char* kNodeNamePattern = R"((Movement_Pattern|vessel|Function)_\d+)";

}  // namespace vista
