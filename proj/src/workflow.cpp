#include "vista/workflow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "vista/method_builder.hpp"
#include "vista/prompt_data.hpp"

namespace vista {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Failure {
    ErrorCode code;
    std::string message;
};

// Runs fn, mapping exceptions onto an error code.
template <class Fn>
std::optional<Failure> capture(Fn&& fn) {
    try {
        fn();
        return std::nullopt;
    } catch (const Error& e) {
        return Failure{e.code(), e.what()};
    } catch (const std::exception& e) {
        return Failure{ErrorCode::AnomalyDetected, std::string("unexpected failure: ") + e.what()};
    }
}

// Tracks how many jobs of a stage run at once.
class ConcurrencyProbe {
public:
    void enter() {
        const std::size_t now = ++active_;
        std::size_t seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
        }
    }
    void leave() { --active_; }
    std::size_t peak() const { return peak_.load(); }

private:
    std::atomic<std::size_t> active_{0};
    std::atomic<std::size_t> peak_{0};
};

// Runs fn(i) for every index of the batch on its own thread and joins.
void run_batch(std::size_t n, ConcurrencyProbe& probe, const std::function<void(std::size_t)>& fn) {
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        threads.emplace_back([&, i] {
            probe.enter();
            fn(i);
            probe.leave();
        });
    for (auto& t : threads) t.join();
}

// Retry-or-quarantine decision shared by both drivers.
void settle_failure(Job job, const Failure& f, int limit, JobStack& stack, std::vector<QuarantineEntry>& quarantine,
                    JsonlWriter* sink, WorkflowStats& stats) {
    job.attempt_log.emplace_back(utc_now(), f.message);
    if (is_retryable(f.code) && job.retry_count < limit) {
        ++job.retry_count;
        ++stats.retried;
        stack.push(std::move(job));
        return;
    }
    QuarantineEntry q;
    q.attempts = job.retry_count + 1;
    q.job = std::move(job);
    q.final_error = f.message;
    q.code = f.code;
    if (sink) sink->write(to_json(q));
    quarantine.push_back(std::move(q));
    ++stats.quarantined;
}

void guard_unit(const KnowledgeUnit& u) {
    try {
        require_canonical(u.statics);
        require_canonical(u.behavior);
        CompiledFunction check(u.function);
    } catch (const Error& e) {
        fail(ErrorCode::AnomalyDetected, std::string("unit failed schema check: ") + e.what());
    }
    if (u.function_description.empty()) fail(ErrorCode::AnomalyDetected, "unit has no function description");
    if (!u.fit.accepted) fail(ErrorCode::AnomalyDetected, "unit function was not accepted");
}

bool unit_less(const KnowledgeUnit& a, const KnowledgeUnit& b) {
    return std::tie(a.vessel_id, a.segment_index) < std::tie(b.vessel_id, b.segment_index);
}

// Pipelined stage-2 consumer of validated batches.
class BatchChannel {
public:
    void push(std::vector<KnowledgeUnit> batch) {
        {
            std::lock_guard lock(mu_);
            batches_.push_back(std::move(batch));
        }
        cv_.notify_one();
    }
    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_one();
    }
    std::optional<std::vector<KnowledgeUnit>> pop() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return closed_ || !batches_.empty(); });
        if (batches_.empty()) return std::nullopt;
        auto b = std::move(batches_.front());
        batches_.pop_front();
        return b;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::vector<KnowledgeUnit>> batches_;
    bool closed_ = false;
};

}  // namespace

// --- stack -------------------------------------------------------------------

void JobStack::push(Job job) {
    std::lock_guard lock(mu_);
    jobs_.push_back(std::move(job));
}

void JobStack::push_all(std::vector<Job> jobs) {
    std::lock_guard lock(mu_);
    for (auto& j : jobs) jobs_.push_back(std::move(j));
}

std::vector<Job> JobStack::pop_batch(std::size_t b) {
    std::lock_guard lock(mu_);
    std::vector<Job> out;
    while (out.size() < b && !jobs_.empty()) {
        out.push_back(std::move(jobs_.back()));
        jobs_.pop_back();
    }
    return out;
}

std::size_t JobStack::size() const {
    std::lock_guard lock(mu_);
    return jobs_.size();
}

nlohmann::json to_json(const QuarantineEntry& q) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& [when, err] : q.job.attempt_log) log.push_back({{"time", when}, {"error", err}});
    return {{"kind", q.job.kind == JobKind::Extract ? "extract" : "impute"},
            {"vessel_id", q.job.vessel_id},
            {"segment_index", q.job.segment_index},
            {"attempts", q.attempts},
            {"error_code", std::string(to_string(q.code))},
            {"final_error", q.final_error},
            {"attempt_log", log}};
}

nlohmann::json WorkflowStats::to_json() const {
    return {{"scheduled", scheduled},       {"committed", committed}, {"retried", retried},
            {"quarantined", quarantined},   {"fallbacks", fallbacks}, {"wall_ms", wall_ms},
            {"kg_nodes", kg_nodes},         {"kg_edges", kg_edges},   {"stage_ms", stage_ms},
            {"max_concurrency", max_concurrency}};
}

// --- JSONL writer ------------------------------------------------------------

JsonlWriter::JsonlWriter(const std::string& path) : out_(path) {
    if (!out_) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
    thread_ = std::thread([this] { run(); });
}

JsonlWriter::~JsonlWriter() {
    try {
        close();
    } catch (...) {
    }
}

void JsonlWriter::write(const nlohmann::json& record) {
    {
        std::lock_guard lock(mu_);
        queue_.push_back(record.dump());
    }
    cv_.notify_one();
}

void JsonlWriter::run() {
    std::unique_lock lock(mu_);
    for (;;) {
        cv_.wait(lock, [&] { return closing_ || !queue_.empty(); });
        while (!queue_.empty()) {
            std::string line = std::move(queue_.front());
            queue_.pop_front();
            lock.unlock();
            out_ << line << '\n';
            const bool bad = !out_;
            lock.lock();
            failed_ = failed_ || bad;
        }
        if (closing_) return;
    }
}

void JsonlWriter::close() {
    {
        std::lock_guard lock(mu_);
        if (!thread_.joinable()) return;
        closing_ = true;
    }
    cv_.notify_one();
    thread_.join();
    out_.flush();
    if (failed_ || !out_) fail(ErrorCode::IoError, "write to JSONL sink failed");
}

// --- de-redundancy -----------------------------------------------------------

bool ProbeCache::equivalent(const FunctionSpec& a, const FunctionSpec& b) {
    std::pair<std::string, std::string> key{a.key(), b.key()};
    if (key.first == key.second) return true;
    if (key.second < key.first) std::swap(key.first, key.second);
    {
        std::lock_guard lock(mu_);
        if (auto it = verdicts_.find(key); it != verdicts_.end()) return it->second;
    }
    const bool eq = probe_equivalent(a, b).equivalent;
    std::lock_guard lock(mu_);
    verdicts_.emplace(key, eq);
    return eq;
}

DedupReport deredundancy(std::vector<KnowledgeUnit>& units, VocabularyStore& vocabs, SdKg& kg, Oracle& oracle,
                         ProbeCache* cache) {
    DedupReport report;
    ProbeCache local;
    ProbeCache& probes = cache ? *cache : local;

    // Token pass.
    Vocabularies snap = vocabs.snapshot();
    for (const auto& u : units) {
        const BehaviorTuple& b = u.behavior;
        for (auto [kind, tok] : {std::pair{VocabKind::Speed, &b.speed}, std::pair{VocabKind::Course, &b.course},
                                 std::pair{VocabKind::Heading, &b.heading}, std::pair{VocabKind::Intent, &b.intent}})
            if (!snap[kind].contains(*tok) && !snap[kind].merge_map.count(*tok)) vocabs.add(kind, *tok);
    }
    snap = vocabs.snapshot();
    std::string vb;
    for (VocabKind kind : kVocabKinds) {
        auto tokens = snap[kind].tokens;
        std::sort(tokens.begin(), tokens.end());
        vb += fmt::format("[{}]: ", to_string(kind));
        for (std::size_t i = 0; i < tokens.size(); ++i) vb += (i ? ", " : "") + tokens[i];
        vb += "\n";
    }
    std::string vf;
    for (const auto& [id, node] : kg.function_nodes())
        vf += fmt::format("{} | family={} | lat: {} | lon: {}\n", kg.dot_name(id),
                          node.func.family.empty() ? "custom" : node.func.family, node.func.lat_expr,
                          node.func.lon_expr);
    {
        std::set<std::string> seen;
        std::vector<const KnowledgeUnit*> order;
        for (const auto& u : units) order.push_back(&u);
        std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return unit_less(*a, *b); });
        std::size_t n = 0;
        for (const auto* u : order)
            if (seen.insert(u->proposed_function.key()).second)
                vf += fmt::format("candidate_{} | family={} | lat: {} | lon: {}\n", ++n,
                                  u->proposed_function.family.empty() ? "custom" : u->proposed_function.family,
                                  u->proposed_function.lat_expr, u->proposed_function.lon_expr);
    }
    try {
        const auto resp = call_oracle(oracle, TemplateId::Dedup, {{"vb_data_text", vb}, {"vf_data_text", vf}});
        const ParsedDedup parsed = parse_dedup(resp.raw);
        for (const auto& [attr, groups] : parsed.behavior) {
            VocabKind kind;
            try {
                kind = vocab_kind_from_string(attr);
            } catch (const Error&) {
                continue;
            }
            for (const auto& g : groups) {
                const std::string primary = canonical_token(g.primary);
                if (primary.empty()) continue;
                for (const auto& r : g.redundant) {
                    const std::string red = canonical_token(r);
                    if (red.empty() || red == primary || !vocabs.snapshot()[kind].contains(red)) continue;
                    vocabs.merge(kind, red, primary);
                    ++report.token_merges;
                }
            }
        }
    } catch (const Error& e) {
        report.oracle_skipped = true;
        report.warning = std::string("dedup oracle merges skipped: ") + e.what();
    }
    snap = vocabs.snapshot();
    for (auto& u : units) u.behavior = snap.resolve(u.behavior);
    kg.canonicalize(snap);
    kg.vocabularies() = snap;

    // Function pass: existing graph functions first, then units in source order.
    std::vector<FunctionSpec> reps;
    std::map<std::string, std::size_t> rep_of_key;
    for (const auto& [id, node] : kg.function_nodes()) {
        rep_of_key.emplace(node.func.key(), reps.size());
        reps.push_back(node.func);
    }
    std::vector<KnowledgeUnit*> order;
    for (auto& u : units) order.push_back(&u);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return unit_less(*a, *b); });
    for (KnowledgeUnit* u : order) {
        const FunctionSpec& f = u->proposed_function;
        const std::string key = f.key();
        auto hit = rep_of_key.find(key);
        if (hit == rep_of_key.end()) {
            std::size_t found = reps.size();
            for (std::size_t i = 0; i < reps.size(); ++i)
                if (probes.equivalent(reps[i], f)) {
                    found = i;
                    break;
                }
            if (found == reps.size()) reps.push_back(f);
            hit = rep_of_key.emplace(key, found).first;
        }
        const std::string previous = u->function.key();
        u->function = reps[hit->second];
        u->function_id.reset();
        if (u->function.key() != previous) ++report.function_merges;
    }
    return report;
}

// --- extraction --------------------------------------------------------------

KnowledgeUnit extract_unit(const MinimalSegment& segment, const SdKg& kg, VocabularyStore& vocabs, Oracle& oracle,
                           const ContextProvider& context, const RunConfig& config) {
    KnowledgeUnit u;
    u.vessel_id = segment.vessel_id;
    u.segment_index = segment.index;
    u.statics = encode_static(segment, context);
    u.behavior = abstract_behavior(segment, u.statics, vocabs, oracle);
    MethodBuilderOptions mo;
    mo.fit_threshold = config.fit_threshold;
    mo.max_proposals = config.retry_refine;
    const MethodResult mr = propose(segment, u.statics, u.behavior, &kg, oracle, mo);
    u.proposed_function = mr.func;
    u.function = mr.func;
    u.fit = mr.fit;
    u.function_description = describe(mr.func, u.behavior, mr.description, oracle);
    guard_unit(u);
    return u;
}

BuildResult run_build(const std::vector<VesselSequence>& dataset, SdKg& kg, const RunConfig& config, Oracle& oracle,
                      const ContextProvider& context, const BuildSinks& sinks) {
    config.validate();
    const auto start = Clock::now();
    BuildResult result;
    WorkflowStats& stats = result.stats;

    std::vector<MinimalSegment> segments;
    for (const auto& seq : dataset) {
        if (seq.records.empty()) continue;
        for (auto& seg : partition(seq, config.m).segments)
            if (seg.complete()) segments.push_back(std::move(seg));
    }
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < segments.size(); ++i)
        jobs.push_back({JobKind::Extract, segments[i].vessel_id, segments[i].index, i,
                        segments[i].first_timestamp(), 0, {}});
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return std::tie(a.first_timestamp, a.vessel_id, a.segment_index) <
               std::tie(b.first_timestamp, b.vessel_id, b.segment_index);
    });
    stats.scheduled = jobs.size();
    JobStack compute;
    compute.push_all(std::move(jobs));

    VocabularyStore vocabs(kg.vocabularies());
    ProbeCache probes;
    BatchChannel channel;
    std::vector<KnowledgeUnit> validated;
    double stage2_ms = 0.0;

    // Stage 2 runs alongside extraction, classifying functions as they arrive.
    std::thread stage2([&] {
        std::vector<FunctionSpec> reps;
        std::set<std::string> keys;
        if (config.deredundancy)
            for (const auto& [id, node] : kg.function_nodes()) reps.push_back(node.func);
        while (auto batch = channel.pop()) {
            const auto t = Clock::now();
            if (config.deredundancy) {
                for (const auto& u : *batch) {
                    if (!keys.insert(u.proposed_function.key()).second) continue;
                    bool matched = false;
                    for (const auto& r : reps)
                        if (probes.equivalent(r, u.proposed_function)) {
                            matched = true;
                            break;
                        }
                    if (!matched) reps.push_back(u.proposed_function);
                }
            }
            validated.insert(validated.end(), std::make_move_iterator(batch->begin()),
                             std::make_move_iterator(batch->end()));
            stage2_ms += ms_since(t);
        }
    });

    ConcurrencyProbe probe;
    const auto stage1_start = Clock::now();
    try {
        while (!compute.empty()) {
            std::vector<Job> batch = compute.pop_batch(config.batch_size);
            std::vector<std::optional<KnowledgeUnit>> units(batch.size());
            std::vector<std::optional<Failure>> failures(batch.size());
            run_batch(batch.size(), probe, [&](std::size_t i) {
                failures[i] = capture([&] {
                    units[i] = extract_unit(segments[batch[i].sequence], kg, vocabs, oracle, context, config);
                });
            });
            std::vector<KnowledgeUnit> ok;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (failures[i])
                    settle_failure(std::move(batch[i]), *failures[i], config.retry_extract, compute,
                                   result.quarantine, sinks.quarantine, stats);
                else
                    ok.push_back(std::move(*units[i]));
            }
            if (!ok.empty()) channel.push(std::move(ok));
        }
    } catch (...) {
        channel.close();
        stage2.join();
        throw;
    }
    stats.stage_ms["extract"] = ms_since(stage1_start);
    channel.close();
    stage2.join();
    stats.stage_ms["deredundancy_pipelined"] = stage2_ms;

    // Barrier reached: global pass and ordered commit.
    const auto global_start = Clock::now();
    if (config.deredundancy) {
        result.dedup = deredundancy(validated, vocabs, kg, oracle, &probes);
    } else {
        kg.vocabularies() = vocabs.snapshot();
    }
    stats.stage_ms["deredundancy_global"] = ms_since(global_start);

    const auto commit_start = Clock::now();
    std::sort(validated.begin(), validated.end(), unit_less);
    for (auto& u : validated) u.function_id = kg.upsert_unit(u).function;
    stats.stage_ms["commit"] = ms_since(commit_start);

    result.units = std::move(validated);
    std::sort(result.quarantine.begin(), result.quarantine.end(), [](const auto& a, const auto& b) {
        return std::tie(a.job.vessel_id, a.job.segment_index) < std::tie(b.job.vessel_id, b.job.segment_index);
    });
    stats.committed = result.units.size();
    stats.kg_nodes = kg.node_count();
    stats.kg_edges = kg.edge_count();
    stats.max_concurrency = probe.peak();
    stats.wall_ms = ms_since(start);
    return result;
}

// --- imputation --------------------------------------------------------------

namespace {

struct VesselView {
    const VesselSequence* sequence = nullptr;
    const ObservationMask* mask = nullptr;
    std::vector<MinimalSegment> segments;
};

class ContextCache {
public:
    ContextCache(const SdKg& kg, Oracle& oracle, const ContextProvider& context)
        : vocabs_(kg.vocabularies()), oracle_(oracle), context_(context) {}

    ContextUnit get(const MinimalSegment& seg) {
        const auto key = std::make_pair(seg.vessel_id, seg.index);
        {
            std::lock_guard lock(mu_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        ContextUnit u;
        u.segment_index = seg.index;
        u.statics = encode_static(seg, context_);
        u.behavior = abstract_behavior(seg, u.statics, vocabs_, oracle_);
        std::lock_guard lock(mu_);
        return cache_.emplace(key, u).first->second;
    }

private:
    VocabularyStore vocabs_;
    Oracle& oracle_;
    const ContextProvider& context_;
    std::mutex mu_;
    std::map<std::pair<std::string, std::size_t>, ContextUnit> cache_;
};

GapInput gap_input(const VesselView& v, std::size_t k, ContextCache& cache) {
    const std::size_t m = v.mask->m;
    GapInput g;
    g.vessel_id = v.mask->vessel_id;
    g.segment_index = k;
    for (const auto& r : v.segments.at(k).records) g.times.push_back(r.timestamp);

    std::optional<std::size_t> lo, hi;
    for (std::size_t i = k; i-- > 0;)
        if (v.mask->bits[i]) {
            lo = i;
            break;
        }
    for (std::size_t i = k + 1; i < v.mask->bits.size() && i < v.segments.size(); ++i)
        if (v.mask->bits[i]) {
            hi = i;
            break;
        }
    std::vector<AisRecord> rows;
    if (lo) {
        g.context.first = cache.get(v.segments[*lo]);
        rows.insert(rows.end(), v.segments[*lo].records.begin(), v.segments[*lo].records.end());
    }
    if (hi) {
        g.context.second = cache.get(v.segments[*hi]);
        rows.insert(rows.end(), v.segments[*hi].records.begin(), v.segments[*hi].records.end());
    }
    if (!rows.empty()) g.rows_text = format_trajectory_data(rows, nullptr);

    const auto& recs = v.sequence->records;
    for (std::size_t i = std::min(k * m, recs.size()); i-- > 0 && g.before.size() < 2;)
        if (recs[i].has_position()) g.before.insert(g.before.begin(), {static_cast<double>(recs[i].timestamp), recs[i].position()});
    for (std::size_t i = (k + 1) * m; i < recs.size() && g.after.size() < 2; ++i)
        if (recs[i].has_position()) g.after.push_back({static_cast<double>(recs[i].timestamp), recs[i].position()});
    return g;
}

void guard_outcome(const ImputationOutcome& o, const SdKg& kg, std::size_t m) {
    if (o.points.size() != m)
        fail(ErrorCode::AnomalyDetected, fmt::format("outcome has {} points, expected {}", o.points.size(), m));
    for (const auto& p : o.points)
        if (!std::isfinite(p.lat) || !std::isfinite(p.lon))
            fail(ErrorCode::AnomalyDetected, "outcome contains a non-finite position");
    if (o.fallback_used) return;
    if (!o.behavior_id || !kg.contains(*o.behavior_id) || kg.type_of(*o.behavior_id) != NodeType::Behavior)
        fail(ErrorCode::AnomalyDetected, "selected behavior is not in the graph");
    if (!o.function_id || !kg.contains(*o.function_id) || kg.type_of(*o.function_id) != NodeType::Function)
        fail(ErrorCode::AnomalyDetected, "selected function is not in the graph");
    if (o.explanation.regulatory_rule_cue.empty() || o.explanation.operational_protocol_rationale.empty())
        fail(ErrorCode::AnomalyDetected, "explanation is incomplete");
}

}  // namespace

ImputeResult run_impute(const std::vector<VesselSequence>& masked, const std::vector<ObservationMask>& masks,
                        const SdKg& kg, const RunConfig& config, Oracle& oracle, const ContextProvider& context,
                        const ImputeSinks& sinks) {
    config.validate();
    const auto start = Clock::now();
    ImputeResult result;
    WorkflowStats& stats = result.stats;

    std::map<std::string, const VesselSequence*> by_vessel;
    for (const auto& s : masked) by_vessel[s.vessel_id] = &s;
    std::vector<VesselView> views;
    std::vector<Job> jobs;
    for (const auto& mask : masks) {
        const auto gaps = mask.gap_indices();
        if (gaps.empty()) continue;
        auto it = by_vessel.find(mask.vessel_id);
        if (it == by_vessel.end())
            fail(ErrorCode::ConfigError, "mask refers to vessel " + mask.vessel_id + " missing from the input");
        VesselView v;
        v.sequence = it->second;
        v.mask = &mask;
        v.segments = partition(*it->second, mask.m).segments;
        if (v.segments.size() != mask.bits.size())
            fail(ErrorCode::ConfigError, "mask of vessel " + mask.vessel_id + " does not match its segment count");
        for (std::size_t k : gaps)
            jobs.push_back({JobKind::Impute, mask.vessel_id, k, views.size(), v.segments[k].first_timestamp(), 0, {}});
        views.push_back(std::move(v));
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return std::tie(a.first_timestamp, a.vessel_id, a.segment_index) <
               std::tie(b.first_timestamp, b.vessel_id, b.segment_index);
    });
    stats.scheduled = jobs.size();
    JobStack stack;
    stack.push_all(std::move(jobs));

    ContextCache cache(kg, oracle, context);
    ImputeOptions opts;
    opts.top_k = config.top_k;
    opts.include_vessel_id = config.include_vessel_id_in_query;
    ConcurrencyProbe probe;

    while (!stack.empty()) {
        std::vector<Job> batch = stack.pop_batch(config.batch_size);
        std::vector<std::optional<ImputationOutcome>> outcomes(batch.size());
        std::vector<std::optional<Failure>> failures(batch.size());
        run_batch(batch.size(), probe, [&](std::size_t i) {
            failures[i] = capture([&] {
                const VesselView& v = views[batch[i].sequence];
                const GapInput g = gap_input(v, batch[i].segment_index, cache);
                ImputationOutcome o = impute_gap(kg, g, oracle, opts);
                guard_outcome(o, kg, v.mask->m);
                outcomes[i] = std::move(o);
            });
        });
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (failures[i]) {
                settle_failure(std::move(batch[i]), *failures[i], config.retry_impute, stack, result.quarantine,
                               sinks.quarantine, stats);
                continue;
            }
            if (sinks.outcomes) sinks.outcomes->write(to_json(*outcomes[i]));
            if (outcomes[i]->fallback_used) ++stats.fallbacks;
            result.outcomes.push_back(std::move(*outcomes[i]));
        }
    }
    std::sort(result.outcomes.begin(), result.outcomes.end(), [](const auto& a, const auto& b) {
        return std::tie(a.vessel_id, a.segment_index) < std::tie(b.vessel_id, b.segment_index);
    });
    std::sort(result.quarantine.begin(), result.quarantine.end(), [](const auto& a, const auto& b) {
        return std::tie(a.job.vessel_id, a.job.segment_index) < std::tie(b.job.vessel_id, b.job.segment_index);
    });
    stats.committed = result.outcomes.size();
    stats.kg_nodes = kg.node_count();
    stats.kg_edges = kg.edge_count();
    stats.max_concurrency = probe.peak();
    stats.stage_ms["impute"] = ms_since(start);
    stats.wall_ms = ms_since(start);
    return result;
}

}  // namespace vista
