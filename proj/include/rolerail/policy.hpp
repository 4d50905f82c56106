#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rolerail/errors.hpp"

namespace rolerail {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Access decisions
// ---------------------------------------------------------------------------

enum class AccessLabel { allow, block };

inline const char* to_string(AccessLabel label) {
    return label == AccessLabel::allow ? "allow" : "block";
}

inline AccessLabel access_label_from_string(const std::string& s) {
    if (s == "allow") return AccessLabel::allow;
    if (s == "block") return AccessLabel::block;
    throw Error(Errc::schema_error, "invalid access label '" + s + "'");
}

enum class StageId { input_filter, retrieval, static_filter, responder, fact_checker, output_filter };

inline const char* to_string(StageId stage) {
    switch (stage) {
        case StageId::input_filter: return "input_filter";
        case StageId::retrieval: return "retrieval";
        case StageId::static_filter: return "static_filter";
        case StageId::responder: return "responder";
        case StageId::fact_checker: return "fact_checker";
        case StageId::output_filter: return "output_filter";
    }
    return "unknown";
}

inline StageId stage_from_string(const std::string& s) {
    static const std::unordered_map<std::string, StageId> table = {
        {"input_filter", StageId::input_filter},   {"retrieval", StageId::retrieval},
        {"static_filter", StageId::static_filter}, {"responder", StageId::responder},
        {"fact_checker", StageId::fact_checker},   {"output_filter", StageId::output_filter},
    };
    auto it = table.find(s);
    if (it == table.end()) throw Error(Errc::schema_error, "invalid stage id '" + s + "'");
    return it->second;
}

enum class VerdictReason { filter_decision, fail_closed, static_no_match, fact_check_fallback, passed };

inline const char* to_string(VerdictReason reason) {
    switch (reason) {
        case VerdictReason::filter_decision: return "filter_decision";
        case VerdictReason::fail_closed: return "fail_closed";
        case VerdictReason::static_no_match: return "static_no_match";
        case VerdictReason::fact_check_fallback: return "fact_check_fallback";
        case VerdictReason::passed: return "passed";
    }
    return "unknown";
}

inline VerdictReason verdict_reason_from_string(const std::string& s) {
    static const std::unordered_map<std::string, VerdictReason> table = {
        {"filter_decision", VerdictReason::filter_decision},
        {"fail_closed", VerdictReason::fail_closed},
        {"static_no_match", VerdictReason::static_no_match},
        {"fact_check_fallback", VerdictReason::fact_check_fallback},
        {"passed", VerdictReason::passed},
    };
    auto it = table.find(s);
    if (it == table.end()) throw Error(Errc::schema_error, "invalid verdict reason '" + s + "'");
    return it->second;
}

/// A per-stage access decision. Construct through make_verdict so the
/// fail-closed invariant (reason fail_closed implies decision block) can
/// never be violated.
struct Verdict {
    AccessLabel decision = AccessLabel::block;
    StageId stage = StageId::input_filter;
    VerdictReason reason = VerdictReason::fail_closed;

    bool operator==(const Verdict&) const = default;
};

inline Verdict make_verdict(AccessLabel decision, StageId stage, VerdictReason reason) {
    if (reason == VerdictReason::fail_closed) {
        decision = AccessLabel::block;
    }
    return Verdict{decision, stage, reason};
}

inline Verdict fail_closed(StageId stage) {
    return Verdict{AccessLabel::block, stage, VerdictReason::fail_closed};
}

// ---------------------------------------------------------------------------
// Roles
// ---------------------------------------------------------------------------

/// Named access-control subject with a natural-language description that is
/// passed to the filter prompts verbatim.
struct Role {
    std::string name;
    std::string description;

    bool operator==(const Role&) const = default;
};

struct RoleCatalog {
    std::vector<Role> roles;

    const Role* find(const std::string& name) const {
        for (const auto& role : roles) {
            if (role.name == name) return &role;
        }
        return nullptr;
    }

    bool contains(const std::string& name) const { return find(name) != nullptr; }

    bool operator==(const RoleCatalog&) const = default;
};

/// Returns the catalog unchanged iff it is non-empty, every description is
/// non-empty, and names are unique. Name comparison is case-sensitive.
inline const RoleCatalog& validate_catalog(const RoleCatalog& catalog) {
    if (catalog.roles.empty()) {
        throw Error(Errc::empty_catalog, "role catalog has no roles");
    }
    std::unordered_set<std::string> seen;
    for (const auto& role : catalog.roles) {
        if (role.name.empty()) {
            throw Error(Errc::schema_error, "role with empty name");
        }
        if (role.description.empty()) {
            throw Error(Errc::empty_description, "role '" + role.name + "' has an empty description");
        }
        if (!seen.insert(role.name).second) {
            throw Error(Errc::duplicate_role, "duplicate role '" + role.name + "'");
        }
    }
    return catalog;
}

// ---------------------------------------------------------------------------
// Documents and queries
// ---------------------------------------------------------------------------

/// One knowledge-base unit. role_tags name the roles allowed to see it.
/// The embedding, when present, is unit length; it is attached at ingestion,
/// never carried in the corpus file.
struct Document {
    std::string id;
    std::string title;
    std::string body;
    std::vector<std::string> role_tags;
    std::optional<std::vector<double>> embedding;

    bool operator==(const Document&) const = default;
};

struct LabeledQuery {
    std::string id;
    std::string text;
    std::string user_role;
    AccessLabel label = AccessLabel::block;

    bool operator==(const LabeledQuery&) const = default;
};

inline void validate_document(const Document& doc, const RoleCatalog& catalog) {
    if (doc.id.empty()) throw Error(Errc::schema_error, "document with empty id");
    if (doc.role_tags.empty()) {
        throw Error(Errc::schema_error, "document '" + doc.id + "' has no role tags");
    }
    for (const auto& tag : doc.role_tags) {
        if (!catalog.contains(tag)) {
            throw Error(Errc::unknown_role_tag, "document '" + doc.id + "' has unknown role tag '" + tag + "'");
        }
    }
    if (doc.embedding) {
        double norm_sq = 0.0;
        for (double v : *doc.embedding) norm_sq += v * v;
        if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6) {
            throw Error(Errc::schema_error, "document '" + doc.id + "' embedding is not unit length");
        }
    }
}

inline void validate_query(const LabeledQuery& query, const RoleCatalog& catalog) {
    if (query.text.empty()) throw Error(Errc::schema_error, "query '" + query.id + "' has empty text");
    if (!catalog.contains(query.user_role)) {
        throw Error(Errc::unknown_role, "query '" + query.id + "' has unknown role '" + query.user_role + "'");
    }
}

// ---------------------------------------------------------------------------
// JSON wire formats
// ---------------------------------------------------------------------------

inline json to_json(const Role& role) { return json{{"name", role.name}, {"description", role.description}}; }

inline Role role_from_json(const json& j) {
    if (!j.is_object() || !j.contains("name") || !j.contains("description") || !j["name"].is_string() ||
        !j["description"].is_string()) {
        throw Error(Errc::schema_error, "role entry must be {name, description}");
    }
    return Role{j["name"].get<std::string>(), j["description"].get<std::string>()};
}

inline json to_json(const RoleCatalog& catalog) {
    json arr = json::array();
    for (const auto& role : catalog.roles) arr.push_back(to_json(role));
    return arr;
}

inline RoleCatalog catalog_from_json(const json& j) {
    if (!j.is_array()) throw Error(Errc::schema_error, "role catalog must be a JSON array");
    RoleCatalog catalog;
    for (const auto& item : j) catalog.roles.push_back(role_from_json(item));
    return catalog;
}

inline json to_json(const Document& doc) {
    json j{{"id", doc.id}, {"title", doc.title}, {"body", doc.body}, {"roles", doc.role_tags}};
    if (doc.embedding) j["embedding"] = *doc.embedding;
    return j;
}

inline Document document_from_json(const json& j) {
    if (!j.is_object()) throw Error(Errc::schema_error, "document must be a JSON object");
    for (const char* field : {"id", "title", "body", "roles"}) {
        if (!j.contains(field)) throw Error(Errc::schema_error, std::string("document missing field '") + field + "'");
    }
    if (!j["id"].is_string() || !j["title"].is_string() || !j["body"].is_string() || !j["roles"].is_array()) {
        throw Error(Errc::schema_error, "document field has wrong type");
    }
    Document doc;
    doc.id = j["id"].get<std::string>();
    doc.title = j["title"].get<std::string>();
    doc.body = j["body"].get<std::string>();
    for (const auto& tag : j["roles"]) {
        if (!tag.is_string()) throw Error(Errc::schema_error, "document role tag must be a string");
        doc.role_tags.push_back(tag.get<std::string>());
    }
    if (j.contains("embedding")) {
        doc.embedding = j["embedding"].get<std::vector<double>>();
    }
    return doc;
}

inline json to_json(const LabeledQuery& query) {
    return json{{"id", query.id}, {"text", query.text}, {"user_role", query.user_role}, {"label", to_string(query.label)}};
}

inline LabeledQuery query_from_json(const json& j) {
    if (!j.is_object()) throw Error(Errc::schema_error, "query must be a JSON object");
    for (const char* field : {"id", "text", "user_role", "label"}) {
        if (!j.contains(field) || !j[field].is_string()) {
            throw Error(Errc::schema_error, std::string("query missing string field '") + field + "'");
        }
    }
    return LabeledQuery{j["id"].get<std::string>(), j["text"].get<std::string>(), j["user_role"].get<std::string>(),
                        access_label_from_string(j["label"].get<std::string>())};
}

/// Role catalog file: a JSON array of {name, description}.
inline RoleCatalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::config_error, "cannot open catalog file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Errc::schema_error, "catalog file '" + path + "': " + e.what());
    }
    RoleCatalog catalog = catalog_from_json(j);
    validate_catalog(catalog);
    return catalog;
}

}  // namespace rolerail
