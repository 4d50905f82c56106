#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rolerail/errors.hpp"
#include "rolerail/policy.hpp"
#include "rolerail/text.hpp"

namespace rolerail {

using Vec = std::vector<double>;

inline double l2_norm(const Vec& v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

/// Scales v to unit length in place. Throws on the zero vector.
inline void normalize(Vec& v) {
    double norm = l2_norm(v);
    if (norm == 0.0) throw Error(Errc::zero_vector, "cannot normalize a zero vector");
    for (double& x : v) x /= norm;
}

/// Cosine similarity, dot(a,b) / (|a||b|), clamped into [-1, 1].
inline double cosine(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) {
        throw Error(Errc::dimension_mismatch,
                    "cosine over dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(Errc::zero_vector, "cosine with a zero vector");
    double score = dot / (std::sqrt(na) * std::sqrt(nb));
    if (score > 1.0) score = 1.0;
    if (score < -1.0) score = -1.0;
    return score;
}

/// Text embedding contract: fixed output dimension, unit-length output,
/// deterministic for a fixed provider configuration.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    virtual Vec embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;
};

/// Deterministic hashed bag-of-words embedder. Tokens are lowercase
/// alphanumeric runs; each token lands in bucket (sum of its byte values
/// mod 64) and the bucket counts are L2-normalized. Identical text always
/// maps to the same unit vector, so identical query/document text scores
/// cosine 1. A live model plugs in through the same interface.
class ReferenceEmbedder final : public EmbeddingProvider {
  public:
    static constexpr std::size_t kDimension = 64;

    Vec embed(const std::string& text) override {
        Vec counts(kDimension, 0.0);
        bool any = false;
        for (const auto& token : tokenize(text)) {
            unsigned sum = 0;
            for (char c : token) sum += static_cast<unsigned char>(c);
            counts[sum % kDimension] += 1.0;
            any = true;
        }
        if (!any) {
            throw Error(Errc::unembeddable, "text has no tokens: '" + text + "'");
        }
        normalize(counts);
        return counts;
    }

    std::size_t dimension() const override { return kDimension; }
    std::string name() const override { return "reference-bow-64"; }
};

// ---------------------------------------------------------------------------
// Role augmentation
// ---------------------------------------------------------------------------

/// How much role information is appended to the query before embedding.
enum class AugmentStyle { name, name_and_description };

inline const char* to_string(AugmentStyle style) {
    return style == AugmentStyle::name ? "name" : "name_and_description";
}

inline AugmentStyle augment_style_from_string(const std::string& s) {
    if (s == "name") return AugmentStyle::name;
    if (s == "name_and_description") return AugmentStyle::name_and_description;
    throw Error(Errc::config_error, "invalid augment style '" + s + "'");
}

/// Appends role information to the query so retrieval is biased toward
/// role-appropriate content. The original query text is kept verbatim as a
/// prefix.
inline std::string augment_query(const std::string& query_text, const Role& role,
                                 AugmentStyle style = AugmentStyle::name_and_description) {
    std::string out = query_text;
    out += "\nRole: ";
    out += role.name;
    if (style == AugmentStyle::name_and_description) {
        out += " — ";
        out += role.description;
    }
    return out;
}

}  // namespace rolerail
