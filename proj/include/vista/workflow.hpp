#pragma once

// Stack-scheduled micro-batch drivers for graph construction and imputation,
// with anomaly guards, bounded retries, quarantine and de-redundancy.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "vista/ais.hpp"
#include "vista/config.hpp"
#include "vista/encoder.hpp"
#include "vista/error.hpp"
#include "vista/imputation.hpp"
#include "vista/sdkg.hpp"

namespace vista {

enum class JobKind { Extract, Impute };

struct Job {
    JobKind kind = JobKind::Extract;
    std::string vessel_id;
    std::size_t segment_index = 0;
    std::size_t sequence = 0;  // index into the dataset
    Timestamp first_timestamp = 0;
    int retry_count = 0;
    std::vector<std::pair<std::string, std::string>> attempt_log;  // (UTC time, error)
};

/// LIFO stack with atomic batch pops.
class JobStack {
public:
    void push(Job job);
    void push_all(std::vector<Job> jobs);
    /// Up to `b` jobs, most recently pushed first.
    std::vector<Job> pop_batch(std::size_t b);
    std::size_t size() const;
    bool empty() const { return size() == 0; }

private:
    mutable std::mutex mu_;
    std::vector<Job> jobs_;
};

struct QuarantineEntry {
    Job job;
    std::string final_error;
    ErrorCode code = ErrorCode::AnomalyDetected;
    int attempts = 0;
};

nlohmann::json to_json(const QuarantineEntry& q);

struct WorkflowStats {
    std::size_t scheduled = 0;
    std::size_t committed = 0;
    std::size_t retried = 0;
    std::size_t quarantined = 0;
    std::size_t fallbacks = 0;
    double wall_ms = 0.0;
    std::size_t kg_nodes = 0;
    std::size_t kg_edges = 0;
    std::map<std::string, double> stage_ms;
    std::size_t max_concurrency = 0;

    nlohmann::json to_json() const;
};

/// Single-writer JSON Lines sink fed through a queue.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path);
    ~JsonlWriter();
    JsonlWriter(const JsonlWriter&) = delete;
    JsonlWriter& operator=(const JsonlWriter&) = delete;

    void write(const nlohmann::json& record);
    /// Drains the queue and closes the file. Write failure -> IoError.
    void close();

private:
    void run();

    std::ofstream out_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    bool closing_ = false;
    bool failed_ = false;
    std::thread thread_;
};

/// Caches probe-equivalence verdicts by function key.
class ProbeCache {
public:
    bool equivalent(const FunctionSpec& a, const FunctionSpec& b);

private:
    std::mutex mu_;
    std::map<std::pair<std::string, std::string>, bool> verdicts_;
};

struct DedupReport {
    std::size_t token_merges = 0;
    std::size_t function_merges = 0;
    bool oracle_skipped = false;
    std::string warning;
};

/// Token canonicalisation through the dedup prompt and probe-based function
/// merging. Rewrites units' behaviors and functions to canonical forms,
/// updates the vocabularies and folds merged behavior nodes in `kg`.
DedupReport deredundancy(std::vector<KnowledgeUnit>& units, VocabularyStore& vocabs, SdKg& kg, Oracle& oracle,
                         ProbeCache* cache = nullptr);

/// Extraction of one complete segment into a knowledge unit.
KnowledgeUnit extract_unit(const MinimalSegment& segment, const SdKg& kg, VocabularyStore& vocabs, Oracle& oracle,
                           const ContextProvider& context, const RunConfig& config);

struct BuildResult {
    std::vector<KnowledgeUnit> units;  // committed, sorted by (vessel, segment)
    std::vector<QuarantineEntry> quarantine;
    WorkflowStats stats;
    DedupReport dedup;
};

struct BuildSinks {
    JsonlWriter* quarantine = nullptr;
};

BuildResult run_build(const std::vector<VesselSequence>& dataset, SdKg& kg, const RunConfig& config, Oracle& oracle,
                      const ContextProvider& context, const BuildSinks& sinks = {});

struct ImputeResult {
    std::vector<ImputationOutcome> outcomes;  // sorted by (vessel, segment)
    std::vector<QuarantineEntry> quarantine;
    WorkflowStats stats;
};

struct ImputeSinks {
    JsonlWriter* outcomes = nullptr;
    JsonlWriter* quarantine = nullptr;
};

ImputeResult run_impute(const std::vector<VesselSequence>& masked, const std::vector<ObservationMask>& masks,
                        const SdKg& kg, const RunConfig& config, Oracle& oracle, const ContextProvider& context,
                        const ImputeSinks& sinks = {});

}  // namespace vista
