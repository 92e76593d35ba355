#include "vista/vocabulary.hpp"

#include <algorithm>

#include "vista/error.hpp"

namespace vista {

std::string_view to_string(VocabKind kind) noexcept {
    switch (kind) {
        case VocabKind::Speed: return "speed";
        case VocabKind::Course: return "course";
        case VocabKind::Heading: return "heading";
        case VocabKind::Intent: return "intent";
    }
    return "unknown";
}

VocabKind vocab_kind_from_string(std::string_view text) {
    for (VocabKind k : kVocabKinds)
        if (to_string(k) == text) return k;
    fail(ErrorCode::InvalidParameter, "unknown vocabulary kind '" + std::string(text) + "'");
}

bool Vocabulary::contains(std::string_view token) const {
    return std::find(tokens.begin(), tokens.end(), token) != tokens.end();
}

std::string Vocabulary::resolve(std::string_view token) const {
    std::string cur(token);
    // merge() keeps the map flat, but tolerate chains from hand-edited snapshots.
    for (std::size_t guard = 0; guard <= merge_map.size(); ++guard) {
        auto it = merge_map.find(cur);
        if (it == merge_map.end()) break;
        cur = it->second;
    }
    return cur;
}

std::string Vocabulary::add(std::string_view token) {
    if (!is_canonical_token(token)) fail(ErrorCode::NotCanonical, "token '" + std::string(token) + "' is not canonical");
    std::string resolved = resolve(token);
    if (!contains(resolved)) tokens.push_back(resolved);
    return resolved;
}

void Vocabulary::merge(std::string_view redundant, std::string_view canonical) {
    const std::string target = resolve(canonical);
    const std::string source(redundant);
    if (source == target) return;
    if (!is_canonical_token(source) || !is_canonical_token(target))
        fail(ErrorCode::NotCanonical, "merge of non-canonical tokens");
    if (!contains(target)) tokens.push_back(target);
    tokens.erase(std::remove(tokens.begin(), tokens.end(), source), tokens.end());
    merge_map[source] = target;
    for (auto& [from, to] : merge_map)
        if (to == source) to = target;
}

BehaviorTuple Vocabularies::resolve(const BehaviorTuple& b) const {
    BehaviorTuple out = b;
    out.speed = (*this)[VocabKind::Speed].resolve(b.speed);
    out.course = (*this)[VocabKind::Course].resolve(b.course);
    out.heading = (*this)[VocabKind::Heading].resolve(b.heading);
    out.intent = (*this)[VocabKind::Intent].resolve(b.intent);
    return out;
}

Vocabularies VocabularyStore::snapshot() const {
    std::lock_guard lock(mu_);
    return data_;
}

std::string VocabularyStore::add(VocabKind kind, std::string_view token) {
    std::lock_guard lock(mu_);
    return data_[kind].add(token);
}

void VocabularyStore::merge(VocabKind kind, std::string_view redundant, std::string_view canonical) {
    std::lock_guard lock(mu_);
    data_[kind].merge(redundant, canonical);
}

std::string VocabularyStore::resolve(VocabKind kind, std::string_view token) const {
    std::lock_guard lock(mu_);
    return data_[kind].resolve(token);
}

}  // namespace vista
