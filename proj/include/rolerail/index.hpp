#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "rolerail/embedding.hpp"
#include "rolerail/errors.hpp"
#include "rolerail/policy.hpp"

namespace rolerail {

struct IndexEntry {
    std::string id;
    Vec embedding;
    std::vector<std::string> role_tags;
};

struct ScoredDoc {
    std::string id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Ranked retrieval output. Scores are non-increasing and every score is at
/// least the threshold the query ran with.
struct RetrievalResult {
    std::vector<ScoredDoc> hits;

    bool empty() const { return hits.empty(); }
    std::size_t size() const { return hits.size(); }
};

/// Flat in-memory vector index. Build-then-freeze: ingestion is exclusive,
/// afterwards the index is immutable and safe for concurrent retrievals.
class VectorIndex {
  public:
    VectorIndex() = default;
    explicit VectorIndex(std::size_t dimension) : dimension_(dimension) {}

    void add(IndexEntry entry) {
        if (dimension_ == 0) {
            dimension_ = entry.embedding.size();
        }
        if (entry.embedding.size() != dimension_) {
            throw Error(Errc::dimension_mismatch, "entry '" + entry.id + "' has dimension " +
                                                      std::to_string(entry.embedding.size()) + ", index has " +
                                                      std::to_string(dimension_));
        }
        if (!ids_.insert(entry.id).second) {
            throw Error(Errc::duplicate_document, "duplicate document id '" + entry.id + "'");
        }
        entries_.push_back(std::move(entry));
    }

    const std::vector<IndexEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t dimension() const { return dimension_; }

  private:
    std::size_t dimension_ = 0;
    std::vector<IndexEntry> entries_;
    std::unordered_set<std::string> ids_;
};

/// Embeds every document body and indexes it alongside its role tags. The
/// single normalization point: embeddings are unit length from here on.
inline VectorIndex build_index(const std::vector<Document>& docs, EmbeddingProvider& provider) {
    VectorIndex index;
    for (const auto& doc : docs) {
        index.add(IndexEntry{doc.id, provider.embed(doc.body), doc.role_tags});
    }
    return index;
}

/// Top-k cosine retrieval over the whole index. Keeps entries scoring at
/// least `threshold`, orders by score descending with ties broken by
/// ascending document id. A zero query vector matches nothing.
inline RetrievalResult retrieve(const VectorIndex& index, const Vec& query_vec, std::size_t k, double threshold) {
    if (index.size() > 0 && query_vec.size() != index.dimension()) {
        throw Error(Errc::dimension_mismatch, "query dimension " + std::to_string(query_vec.size()) +
                                                  " does not match index dimension " +
                                                  std::to_string(index.dimension()));
    }
    RetrievalResult result;
    if (k == 0 || l2_norm(query_vec) == 0.0) return result;
    for (const auto& entry : index.entries()) {
        double score = cosine(query_vec, entry.embedding);
        if (score >= threshold) {
            result.hits.push_back(ScoredDoc{entry.id, score});
        }
    }
    std::sort(result.hits.begin(), result.hits.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (result.hits.size() > k) {
        result.hits.resize(k);
    }
    return result;
}

}  // namespace rolerail
