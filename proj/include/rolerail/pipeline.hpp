#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rolerail/embedding.hpp"
#include "rolerail/errors.hpp"
#include "rolerail/guardrails.hpp"
#include "rolerail/index.hpp"
#include "rolerail/llm.hpp"
#include "rolerail/policy.hpp"
#include "rolerail/responder.hpp"

namespace rolerail {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class PipelineMode { no_filter, input_only, output_only, combined, static_baseline };

inline const char* to_string(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::no_filter: return "no_filter";
        case PipelineMode::input_only: return "input_only";
        case PipelineMode::output_only: return "output_only";
        case PipelineMode::combined: return "combined";
        case PipelineMode::static_baseline: return "static_baseline";
    }
    return "unknown";
}

inline PipelineMode pipeline_mode_from_string(const std::string& s) {
    static const std::unordered_map<std::string, PipelineMode> table = {
        {"no_filter", PipelineMode::no_filter},     {"input_only", PipelineMode::input_only},
        {"output_only", PipelineMode::output_only}, {"combined", PipelineMode::combined},
        {"static_baseline", PipelineMode::static_baseline},
    };
    auto it = table.find(s);
    if (it == table.end()) throw Error(Errc::config_error, "unknown pipeline mode '" + s + "'");
    return it->second;
}

inline const std::vector<PipelineMode>& all_pipeline_modes() {
    static const std::vector<PipelineMode> modes = {PipelineMode::no_filter, PipelineMode::input_only,
                                                    PipelineMode::output_only, PipelineMode::combined,
                                                    PipelineMode::static_baseline};
    return modes;
}

struct PipelineConfig {
    PipelineMode mode = PipelineMode::combined;
    std::size_t k = 5;
    double threshold = 0.5;
    double align_threshold = 0.6;
    std::string fallback_text = kDefaultFallbackText;
    bool fallback_counts_as_block = true;
    AugmentStyle augment = AugmentStyle::name_and_description;
    std::string model_name;
    double responder_temperature = 0.0;

    void validate() const {
        if (k < 1) throw Error(Errc::config_error, "k must be at least 1");
        if (threshold < -1.0 || threshold > 1.0) throw Error(Errc::config_error, "threshold must be in [-1, 1]");
        if (align_threshold < 0.0 || align_threshold > 1.0) {
            throw Error(Errc::config_error, "align_threshold must be in [0, 1]");
        }
        if (fallback_text.empty()) throw Error(Errc::config_error, "fallback_text must be non-empty");
        if (responder_temperature < 0.0) throw Error(Errc::config_error, "temperature must be >= 0");
    }

    bool input_filter_enabled() const {
        return mode == PipelineMode::input_only || mode == PipelineMode::combined;
    }
    bool output_filter_enabled() const {
        return mode == PipelineMode::output_only || mode == PipelineMode::combined;
    }
};

// ---------------------------------------------------------------------------
// Corpus lookup
// ---------------------------------------------------------------------------

/// Documents plus an id lookup. Frozen after construction.
class Corpus {
  public:
    Corpus() = default;
    explicit Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
        for (std::size_t i = 0; i < docs_.size(); ++i) {
            if (!by_id_.emplace(docs_[i].id, i).second) {
                throw Error(Errc::duplicate_document, "duplicate document id '" + docs_[i].id + "'");
            }
        }
    }

    const Document* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &docs_[it->second];
    }

    const std::vector<Document>& docs() const { return docs_; }
    std::size_t size() const { return docs_.size(); }

  private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

/// One stage's record. Only the fields that apply to the stage are set.
struct StageRecord {
    StageId stage = StageId::input_filter;
    std::optional<Verdict> verdict;
    std::optional<bool> parsed;
    std::optional<std::string> raw_completion;
    std::optional<std::string> augmented_query;
    std::vector<ScoredDoc> retrieved;
    std::optional<std::vector<std::string>> allowed_ids;
    std::optional<double> alignment_score;
    std::optional<bool> fallback_applied;
};

/// Full per-query record of a pipeline run: every stage in execution order,
/// the final decision, and the response when one may be delivered.
struct PipelineTrace {
    std::string query_id;
    std::string user_role;
    PipelineMode mode = PipelineMode::combined;
    std::vector<StageRecord> stages;
    AccessLabel final_decision = AccessLabel::block;
    std::optional<std::string> final_response;
};

/// Serializes a trace. With redact=true every free-text field (completions,
/// responses, augmented queries) is dropped, leaving decisions, scores and
/// document ids; gateways use this for blocked requests so no generated or
/// retrieved content can leave the service.
inline json trace_to_json(const PipelineTrace& trace, bool redact = false) {
    json stages = json::array();
    for (const auto& record : trace.stages) {
        json j{{"stage", to_string(record.stage)}};
        if (record.verdict) {
            j["decision"] = to_string(record.verdict->decision);
            j["reason"] = to_string(record.verdict->reason);
        }
        if (record.parsed) j["parsed"] = *record.parsed;
        if (!record.retrieved.empty() || record.stage == StageId::retrieval) {
            json hits = json::array();
            for (const auto& hit : record.retrieved) {
                hits.push_back(json{{"id", hit.id}, {"score", hit.score}});
            }
            j["retrieved"] = std::move(hits);
        }
        if (record.allowed_ids) j["allowed_ids"] = *record.allowed_ids;
        if (record.alignment_score) j["alignment_score"] = *record.alignment_score;
        if (record.fallback_applied) j["fallback_applied"] = *record.fallback_applied;
        if (!redact) {
            if (record.augmented_query) j["augmented_query"] = *record.augmented_query;
            if (record.raw_completion) j["raw_completion"] = *record.raw_completion;
        }
        stages.push_back(std::move(j));
    }
    json out{{"query_id", trace.query_id},
             {"user_role", trace.user_role},
             {"mode", to_string(trace.mode)},
             {"stages", std::move(stages)},
             {"final_decision", to_string(trace.final_decision)}};
    if (trace.final_response && !redact) {
        out["final_response"] = *trace.final_response;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Static filter baseline
// ---------------------------------------------------------------------------

/// Keyword-RBAC baseline: keeps exactly the retrieved documents whose role
/// tags contain the user's role as an exact, case-sensitive string. An empty
/// survivor set is a block verdict; otherwise the survivors go to the
/// responder.
inline std::pair<std::vector<Document>, Verdict> static_filter(const std::string& user_role,
                                                               const std::vector<Document>& retrieved) {
    std::vector<Document> allowed;
    for (const auto& doc : retrieved) {
        for (const auto& tag : doc.role_tags) {
            if (tag == user_role) {
                allowed.push_back(doc);
                break;
            }
        }
    }
    Verdict verdict = allowed.empty()
                          ? make_verdict(AccessLabel::block, StageId::static_filter, VerdictReason::static_no_match)
                          : make_verdict(AccessLabel::allow, StageId::static_filter, VerdictReason::passed);
    return {std::move(allowed), verdict};
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Everything a pipeline run needs. The referenced objects are shared,
/// immutable state (catalog, corpus, index, templates) plus backend handles
/// that tolerate concurrent calls.
struct PipelineContext {
    const RoleCatalog* catalog = nullptr;
    const Corpus* corpus = nullptr;
    const VectorIndex* index = nullptr;
    EmbeddingProvider* embedder = nullptr;
    ChatBackend* chat = nullptr;
    AlignmentScorer* scorer = nullptr;
    const FilterPromptTemplate* input_template = nullptr;
    const FilterPromptTemplate* output_template = nullptr;

    const FilterPromptTemplate& input_tmpl() const {
        return input_template ? *input_template : default_input_filter_template();
    }
    const FilterPromptTemplate& output_tmpl() const {
        return output_template ? *output_template : default_output_filter_template();
    }
};

/// Runs one query through the configured pipeline and returns the full
/// trace.
///
/// Stage order: input filter (input_only/combined) -> role-augmented
/// retrieval -> static filter (static_baseline) -> responder -> fact checker
/// -> output filter (output_only/combined). A blocking gate verdict
/// short-circuits the run. The static filter is a document-visibility
/// filter, not a query gate: in static_baseline mode the responder still
/// runs on whatever survives (possibly nothing), which is exactly how the
/// baseline can leak internal-knowledge answers; the fact checker then
/// validates against the retrieved (pre-filter) evidence. Backend failures
/// become fail-closed block verdicts, never exceptions.
inline PipelineTrace run_pipeline(const PipelineConfig& config, const PipelineContext& ctx,
                                  const std::string& user_role, const std::string& query_text,
                                  const std::string& query_id = "") {
    config.validate();
    const Role* role = ctx.catalog->find(user_role);
    if (!role) throw Error(Errc::unknown_role, "role '" + user_role + "' is not in the catalog");
    if (query_text.empty()) throw Error(Errc::schema_error, "query text must be non-empty");

    PipelineTrace trace;
    trace.query_id = query_id;
    trace.user_role = user_role;
    trace.mode = config.mode;

    ChatParams params;
    params.model_name = config.model_name;
    params.temperature = config.responder_temperature;

    // Input filter gate.
    if (config.input_filter_enabled()) {
        FilterRun run = run_filter(*ctx.chat, ctx.input_tmpl(), *ctx.catalog, user_role, query_text, params);
        StageRecord record;
        record.stage = StageId::input_filter;
        record.verdict = run.verdict;
        record.parsed = run.outcome.parsed;
        record.raw_completion = run.outcome.raw_completion;
        trace.stages.push_back(std::move(record));
        if (run.verdict.decision == AccessLabel::block) {
            trace.final_decision = AccessLabel::block;
            return trace;
        }
    }

    // Role-augmented retrieval. An unembeddable query is a retrieval miss,
    // not a failure: the responder then runs without context.
    StageRecord retrieval_record;
    retrieval_record.stage = StageId::retrieval;
    std::string augmented = augment_query(query_text, *role, config.augment);
    retrieval_record.augmented_query = augmented;
    RetrievalResult retrieval;
    try {
        retrieval = retrieve(*ctx.index, ctx.embedder->embed(augmented), config.k, config.threshold);
    } catch (const Error& e) {
        if (e.code() != Errc::unembeddable) throw;
    }
    retrieval_record.retrieved = retrieval.hits;
    trace.stages.push_back(std::move(retrieval_record));

    std::vector<Document> retrieved_docs;
    for (const auto& hit : retrieval.hits) {
        if (const Document* doc = ctx.corpus->find(hit.id)) {
            retrieved_docs.push_back(*doc);
        }
    }

    // Static baseline: restrict the responder's context to tag-matching
    // documents. Recorded, but generation proceeds regardless.
    std::vector<Document> context_docs = retrieved_docs;
    if (config.mode == PipelineMode::static_baseline) {
        auto [allowed, verdict] = static_filter(user_role, retrieved_docs);
        StageRecord record;
        record.stage = StageId::static_filter;
        record.verdict = verdict;
        std::vector<std::string> ids;
        for (const auto& doc : allowed) ids.push_back(doc.id);
        record.allowed_ids = std::move(ids);
        trace.stages.push_back(std::move(record));
        context_docs = std::move(allowed);
    }

    // Responder.
    std::string response;
    {
        StageRecord record;
        record.stage = StageId::responder;
        try {
            response = ctx.chat->chat(render_responder_prompt(query_text, context_docs), params);
        } catch (const Error&) {
            record.verdict = fail_closed(StageId::responder);
            trace.stages.push_back(std::move(record));
            trace.final_decision = AccessLabel::block;
            return trace;
        }
        record.raw_completion = response;
        trace.stages.push_back(std::move(record));
    }

    // Fact checker: validate against the retrieved evidence.
    Evidence evidence = evidence_from_docs(retrieved_docs);
    GroundedResponse grounded;
    {
        StageRecord record;
        record.stage = StageId::fact_checker;
        try {
            grounded = fact_check(*ctx.scorer, response, evidence, config.align_threshold, config.fallback_text);
        } catch (const Error&) {
            record.verdict = fail_closed(StageId::fact_checker);
            trace.stages.push_back(std::move(record));
            trace.final_decision = AccessLabel::block;
            return trace;
        }
        record.alignment_score = grounded.alignment_score;
        record.fallback_applied = grounded.fallback_applied;
        if (grounded.fallback_applied && config.fallback_counts_as_block) {
            record.verdict = make_verdict(AccessLabel::block, StageId::fact_checker, VerdictReason::fact_check_fallback);
            trace.stages.push_back(std::move(record));
            trace.final_decision = AccessLabel::block;
            trace.final_response = grounded.text;  // the fallback statement, never generated content
            return trace;
        }
        record.verdict = make_verdict(AccessLabel::allow, StageId::fact_checker, VerdictReason::passed);
        trace.stages.push_back(std::move(record));
    }

    // Output filter gate, judging the fact-checked response.
    if (config.output_filter_enabled()) {
        FilterRun run = run_filter(*ctx.chat, ctx.output_tmpl(), *ctx.catalog, user_role, grounded.text, params);
        StageRecord record;
        record.stage = StageId::output_filter;
        record.verdict = run.verdict;
        record.parsed = run.outcome.parsed;
        record.raw_completion = run.outcome.raw_completion;
        trace.stages.push_back(std::move(record));
        if (run.verdict.decision == AccessLabel::block) {
            trace.final_decision = AccessLabel::block;
            return trace;
        }
    }

    trace.final_decision = AccessLabel::allow;
    trace.final_response = grounded.text;
    return trace;
}

}  // namespace rolerail
