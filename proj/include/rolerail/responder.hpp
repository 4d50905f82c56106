#pragma once

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include "rolerail/errors.hpp"
#include "rolerail/llm.hpp"
#include "rolerail/policy.hpp"
#include "rolerail/text.hpp"

namespace rolerail {

inline constexpr const char* kNoDocumentsMarker = "NO DOCUMENTS RETRIEVED";

inline constexpr const char* kDefaultFallbackText =
    "I cannot provide a verified answer to this question based on the available documents.";

/// Builds the responder request: a system instruction to answer from the
/// supplied context and a user message carrying the documents (in retrieval
/// rank order, labeled by title) followed by the question. An empty document
/// list yields an explicit no-context marker instead.
inline std::vector<ChatMessage> render_responder_prompt(const std::string& query, const std::vector<Document>& docs) {
    std::string body;
    body += "Context documents:\n";
    if (docs.empty()) {
        body += "\n";
        body += kNoDocumentsMarker;
        body += "\n";
    } else {
        for (const auto& doc : docs) {
            body += "\n## ";
            body += doc.title;
            body += "\n";
            body += doc.body;
            body += "\n";
        }
    }
    body += "\nQuestion: ";
    body += query;
    return {
        system_message("You are a knowledge-base assistant. Answer the question using only the provided context "
                       "documents. If the context does not cover the question, say that the available documents do "
                       "not cover it."),
        user_message(std::move(body)),
    };
}

// ---------------------------------------------------------------------------
// Alignment scoring
// ---------------------------------------------------------------------------

/// Contract: score(response, evidence) in [0, 1], higher = better supported.
class AlignmentScorer {
  public:
    virtual ~AlignmentScorer() = default;
    virtual double score(const std::string& response, const std::string& evidence) = 0;
    virtual std::string name() const = 0;
};

/// Token-overlap alignment: the fraction of the response's unique tokens
/// that also occur in the evidence. Deterministic stand-in for a learned
/// alignment model; score(x, x) = 1 for any token-bearing x.
inline double reference_align(const std::string& response, const std::string& evidence) {
    auto response_tokens = tokenize(response);
    std::unordered_set<std::string> unique(response_tokens.begin(), response_tokens.end());
    if (unique.empty()) {
        throw Error(Errc::empty_response, "response has no tokens");
    }
    auto evidence_tokens = token_set(evidence);
    std::size_t covered = 0;
    for (const auto& token : unique) {
        if (evidence_tokens.count(token)) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(unique.size());
}

class ReferenceAligner final : public AlignmentScorer {
  public:
    double score(const std::string& response, const std::string& evidence) override {
        return reference_align(response, evidence);
    }
    std::string name() const override { return "reference-token-overlap"; }
};

// ---------------------------------------------------------------------------
// Fact checking
// ---------------------------------------------------------------------------

/// Evidence against which a response is validated: the retrieved documents'
/// bodies, concatenated in rank order.
struct Evidence {
    std::vector<std::string> doc_ids;
    std::string text;
};

inline Evidence evidence_from_docs(const std::vector<Document>& docs) {
    Evidence evidence;
    for (const auto& doc : docs) {
        evidence.doc_ids.push_back(doc.id);
        if (!evidence.text.empty()) evidence.text += "\n\n";
        evidence.text += doc.body;
    }
    return evidence;
}

/// A response after validation. fallback_applied implies text equals the
/// configured fallback statement.
struct GroundedResponse {
    std::string text;
    std::vector<std::string> evidence_ids;
    double alignment_score = 0.0;
    bool fallback_applied = false;
};

/// Validates the response against the evidence. Scores at or above the
/// threshold keep the original text; anything below is replaced by the
/// fallback statement. With no evidence text at all, any response scores 0
/// under the reference scorer, so ungrounded generations are always
/// replaced.
inline GroundedResponse fact_check(AlignmentScorer& scorer, const std::string& response, const Evidence& evidence,
                                   double threshold, const std::string& fallback_text) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw Error(Errc::config_error, "alignment threshold must be in [0, 1]");
    }
    GroundedResponse grounded;
    grounded.evidence_ids = evidence.doc_ids;
    grounded.alignment_score = scorer.score(response, evidence.text);
    if (grounded.alignment_score >= threshold) {
        grounded.text = response;
        grounded.fallback_applied = false;
    } else {
        grounded.text = fallback_text;
        grounded.fallback_applied = true;
    }
    return grounded;
}

}  // namespace rolerail
