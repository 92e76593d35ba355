#pragma once

// Controlled vocabularies for the four behavior token kinds.

#include <array>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "vista/knowledge.hpp"

namespace vista {

enum class VocabKind { Speed, Course, Heading, Intent };

inline constexpr std::array<VocabKind, 4> kVocabKinds = {VocabKind::Speed, VocabKind::Course, VocabKind::Heading,
                                                         VocabKind::Intent};

std::string_view to_string(VocabKind kind) noexcept;
VocabKind vocab_kind_from_string(std::string_view text);

struct Vocabulary {
    std::vector<std::string> tokens;               // insertion order
    std::map<std::string, std::string> merge_map;  // redundant -> canonical

    bool contains(std::string_view token) const;
    /// Follows the merge map; unknown tokens come back unchanged.
    std::string resolve(std::string_view token) const;
    /// Adds a canonical token unless it is already known (directly or as a
    /// merged alias). Returns the resolved token.
    std::string add(std::string_view token);
    /// Records redundant -> canonical and drops the redundant token. The
    /// canonical token is added if absent. Chains are flattened.
    void merge(std::string_view redundant, std::string_view canonical);

    bool operator==(const Vocabulary&) const = default;
};

struct Vocabularies {
    std::array<Vocabulary, 4> by_kind;

    Vocabulary& operator[](VocabKind k) { return by_kind[static_cast<std::size_t>(k)]; }
    const Vocabulary& operator[](VocabKind k) const { return by_kind[static_cast<std::size_t>(k)]; }

    /// Maps every token of `b` through the merge maps.
    BehaviorTuple resolve(const BehaviorTuple& b) const;

    bool operator==(const Vocabularies&) const = default;
};

/// Mutex-guarded vocabularies shared by concurrent extraction workers.
class VocabularyStore {
public:
    VocabularyStore() = default;
    explicit VocabularyStore(Vocabularies initial) : data_(std::move(initial)) {}

    Vocabularies snapshot() const;
    std::string add(VocabKind kind, std::string_view token);
    void merge(VocabKind kind, std::string_view redundant, std::string_view canonical);
    std::string resolve(VocabKind kind, std::string_view token) const;

private:
    mutable std::mutex mu_;
    Vocabularies data_;
};

}  // namespace vista
