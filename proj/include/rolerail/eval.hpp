#pragma once

#include <atomic>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rolerail/errors.hpp"
#include "rolerail/pipeline.hpp"
#include "rolerail/policy.hpp"

namespace rolerail {

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

namespace detail {

inline void for_each_jsonl(const std::string& path, const std::function<void(std::size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::config_error, "cannot open file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(Errc::schema_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
        fn(line_no, j);
    }
}

}  // namespace detail

/// Corpus file: one {id, title, body, roles} JSON object per line. Every
/// document is validated against the catalog before it is accepted.
inline std::vector<Document> load_corpus(const std::string& path, const RoleCatalog& catalog) {
    std::vector<Document> docs;
    std::unordered_set<std::string> ids;
    detail::for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
        Document doc;
        try {
            doc = document_from_json(j);
        } catch (const Error& e) {
            throw Error(Errc::schema_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            validate_document(doc, catalog);
        } catch (const Error& e) {
            if (e.code() == Errc::unknown_role_tag) {
                throw Error(Errc::unknown_role_tag, "line " + std::to_string(line_no) + ": " + e.what());
            }
            throw Error(Errc::schema_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!ids.insert(doc.id).second) {
            throw Error(Errc::schema_error, "line " + std::to_string(line_no) + ": duplicate document id '" + doc.id + "'");
        }
        docs.push_back(std::move(doc));
    });
    return docs;
}

struct QuerySummary {
    std::size_t total = 0;
    std::size_t block_labeled = 0;
    std::size_t allow_labeled = 0;

    bool operator==(const QuerySummary&) const = default;
};

inline QuerySummary summarize(const std::vector<LabeledQuery>& queries) {
    QuerySummary summary;
    summary.total = queries.size();
    for (const auto& q : queries) {
        if (q.label == AccessLabel::block) {
            ++summary.block_labeled;
        } else {
            ++summary.allow_labeled;
        }
    }
    return summary;
}

/// The published benchmark partition: 389 queries, 261 to block and 128 to
/// allow. A query set of exactly this size must carry exactly this split.
inline constexpr std::size_t kPaperScaleTotal = 389;
inline constexpr std::size_t kPaperScaleBlock = 261;
inline constexpr std::size_t kPaperScaleAllow = 128;

/// Query file: one {id, text, user_role, label} JSON object per line.
/// Roles must resolve in the catalog; an empty file is an error; a
/// paper-scale file (389 queries) must partition into 261 block / 128 allow.
inline std::vector<LabeledQuery> load_queries(const std::string& path, const RoleCatalog& catalog) {
    std::vector<LabeledQuery> queries;
    std::unordered_set<std::string> ids;
    detail::for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
        LabeledQuery query;
        try {
            query = query_from_json(j);
        } catch (const Error& e) {
            throw Error(Errc::schema_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            validate_query(query, catalog);
        } catch (const Error& e) {
            if (e.code() == Errc::unknown_role) {
                throw Error(Errc::unknown_role, "line " + std::to_string(line_no) + ": " + e.what());
            }
            throw Error(Errc::schema_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!ids.insert(query.id).second) {
            throw Error(Errc::schema_error, "line " + std::to_string(line_no) + ": duplicate query id '" + query.id + "'");
        }
        queries.push_back(std::move(query));
    });
    if (queries.empty()) {
        throw Error(Errc::empty_query_set, "query file '" + path + "' contains no queries");
    }
    QuerySummary summary = summarize(queries);
    if (summary.total == kPaperScaleTotal &&
        (summary.block_labeled != kPaperScaleBlock || summary.allow_labeled != kPaperScaleAllow)) {
        throw Error(Errc::partition_mismatch,
                    "a " + std::to_string(kPaperScaleTotal) + "-query set must split " +
                        std::to_string(kPaperScaleBlock) + " block / " + std::to_string(kPaperScaleAllow) +
                        " allow, got " + std::to_string(summary.block_labeled) + " / " +
                        std::to_string(summary.allow_labeled));
    }
    return queries;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Confusion counts with Block as the positive class: a false negative is
/// unauthorized content that was allowed out.
struct ConfusionMatrix {
    std::size_t tp = 0;  // labeled block, decided block
    std::size_t fp = 0;  // labeled allow, decided block
    std::size_t fn = 0;  // labeled block, decided allow
    std::size_t tn = 0;  // labeled allow, decided allow

    std::size_t total() const { return tp + fp + fn + tn; }

    bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix score(const std::vector<std::pair<AccessLabel, AccessLabel>>& label_decision_pairs) {
    ConfusionMatrix cm;
    for (const auto& [label, decision] : label_decision_pairs) {
        if (label == AccessLabel::block) {
            if (decision == AccessLabel::block) {
                ++cm.tp;
            } else {
                ++cm.fn;
            }
        } else {
            if (decision == AccessLabel::block) {
                ++cm.fp;
            } else {
                ++cm.tn;
            }
        }
    }
    return cm;
}

inline ConfusionMatrix score(const std::vector<std::pair<LabeledQuery, AccessLabel>>& results) {
    std::vector<std::pair<AccessLabel, AccessLabel>> pairs;
    pairs.reserve(results.size());
    for (const auto& [query, decision] : results) {
        pairs.emplace_back(query.label, decision);
    }
    return score(pairs);
}

/// Derived metrics. Undefined precision/recall (zero denominator) is
/// reported as 0 with the corresponding flag cleared so reports stay total.
struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_defined = true;
    bool recall_defined = true;

    bool operator==(const Metrics&) const = default;
};

inline Metrics metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) throw Error(Errc::empty_matrix, "cannot compute metrics over zero results");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
    if (cm.tp + cm.fp > 0) {
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    } else {
        m.precision = 0.0;
        m.precision_defined = false;
    }
    if (cm.tp + cm.fn > 0) {
        m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    } else {
        m.recall = 0.0;
        m.recall_defined = false;
    }
    m.f1 = (m.precision + m.recall > 0.0) ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalRow {
    std::string backend;
    std::string mode;
    ConfusionMatrix confusion;
    Metrics metrics;

    bool operator==(const EvalRow&) const = default;
};

struct EvalReport {
    QuerySummary dataset;
    std::vector<EvalRow> rows;

    bool operator==(const EvalReport&) const = default;
};

inline json to_json(const EvalReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back(json{{"backend", row.backend},
                            {"mode", row.mode},
                            {"confusion",
                             {{"tp", row.confusion.tp},
                              {"fp", row.confusion.fp},
                              {"fn", row.confusion.fn},
                              {"tn", row.confusion.tn}}},
                            {"metrics",
                             {{"accuracy", row.metrics.accuracy},
                              {"precision", row.metrics.precision},
                              {"precision_defined", row.metrics.precision_defined},
                              {"recall", row.metrics.recall},
                              {"recall_defined", row.metrics.recall_defined},
                              {"f1", row.metrics.f1}}}});
    }
    return json{{"dataset",
                 {{"total", report.dataset.total},
                  {"block_labeled", report.dataset.block_labeled},
                  {"allow_labeled", report.dataset.allow_labeled}}},
                {"rows", std::move(rows)}};
}

inline EvalReport report_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dataset") || !j.contains("rows")) {
        throw Error(Errc::schema_error, "report must have dataset and rows");
    }
    EvalReport report;
    const auto& dataset = j["dataset"];
    report.dataset.total = dataset.at("total").get<std::size_t>();
    report.dataset.block_labeled = dataset.at("block_labeled").get<std::size_t>();
    report.dataset.allow_labeled = dataset.at("allow_labeled").get<std::size_t>();
    for (const auto& row_json : j["rows"]) {
        EvalRow row;
        row.backend = row_json.at("backend").get<std::string>();
        row.mode = row_json.at("mode").get<std::string>();
        const auto& cm = row_json.at("confusion");
        row.confusion = ConfusionMatrix{cm.at("tp").get<std::size_t>(), cm.at("fp").get<std::size_t>(),
                                        cm.at("fn").get<std::size_t>(), cm.at("tn").get<std::size_t>()};
        const auto& m = row_json.at("metrics");
        row.metrics.accuracy = m.at("accuracy").get<double>();
        row.metrics.precision = m.at("precision").get<double>();
        row.metrics.precision_defined = m.at("precision_defined").get<bool>();
        row.metrics.recall = m.at("recall").get<double>();
        row.metrics.recall_defined = m.at("recall_defined").get<bool>();
        row.metrics.f1 = m.at("f1").get<double>();
        report.rows.push_back(std::move(row));
    }
    return report;
}

/// Renders the fixed-width text report. Metric cells with an undefined
/// (zero-denominator) value are marked with '*'.
inline std::string render_report_text(const EvalReport& report) {
    auto fmt = [](double value, bool defined) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f%s", value, defined ? "" : "*");
        return std::string(buf);
    };
    std::ostringstream out;
    out << "queries: " << report.dataset.total << " (block " << report.dataset.block_labeled << " / allow "
        << report.dataset.allow_labeled << ")\n\n";
    char header[160];
    std::snprintf(header, sizeof(header), "%-14s %-16s %6s %6s %6s %6s %10s %10s %10s %10s\n", "backend", "mode", "tp",
                  "fp", "fn", "tn", "accuracy", "precision", "recall", "f1");
    out << header;
    out << std::string(104, '-') << '\n';
    bool any_undefined = false;
    for (const auto& row : report.rows) {
        any_undefined = any_undefined || !row.metrics.precision_defined || !row.metrics.recall_defined;
        char line[256];
        std::snprintf(line, sizeof(line), "%-14s %-16s %6zu %6zu %6zu %6zu %10s %10s %10s %10s\n", row.backend.c_str(),
                      row.mode.c_str(), row.confusion.tp, row.confusion.fp, row.confusion.fn, row.confusion.tn,
                      fmt(row.metrics.accuracy, true).c_str(),
                      fmt(row.metrics.precision, row.metrics.precision_defined).c_str(),
                      fmt(row.metrics.recall, row.metrics.recall_defined).c_str(), fmt(row.metrics.f1, true).c_str());
        out << line;
    }
    if (any_undefined) {
        out << "\n* undefined (zero denominator), reported as 0\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Ablation driver
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::size_t workers = 1;
};

struct AblationResult {
    EvalReport report;
    /// decisions[c][q]: final decision of configs[c] on queries[q].
    std::vector<std::vector<AccessLabel>> decisions;
};

/// Runs every configuration over the labeled query set and scores it.
/// Queries may be evaluated by several workers; results are committed by
/// input position, so reports are deterministic for deterministic backends.
inline AblationResult run_ablation(const std::vector<PipelineConfig>& configs, const PipelineContext& ctx,
                                   const std::vector<LabeledQuery>& queries, const std::string& backend_label,
                                   const EvalOptions& options = {}) {
    if (configs.empty()) throw Error(Errc::config_error, "run_ablation needs at least one configuration");
    if (queries.empty()) throw Error(Errc::empty_query_set, "run_ablation needs at least one query");

    AblationResult result;
    result.report.dataset = summarize(queries);

    for (const auto& config : configs) {
        config.validate();
        std::vector<AccessLabel> decisions(queries.size(), AccessLabel::block);
        const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, queries.size()));
        if (workers == 1) {
            for (std::size_t i = 0; i < queries.size(); ++i) {
                decisions[i] =
                    run_pipeline(config, ctx, queries[i].user_role, queries[i].text, queries[i].id).final_decision;
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&]() {
                    for (std::size_t i = next.fetch_add(1); i < queries.size(); i = next.fetch_add(1)) {
                        decisions[i] =
                            run_pipeline(config, ctx, queries[i].user_role, queries[i].text, queries[i].id).final_decision;
                    }
                });
            }
            for (auto& t : pool) t.join();
        }

        std::vector<std::pair<AccessLabel, AccessLabel>> pairs;
        pairs.reserve(queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) {
            pairs.emplace_back(queries[i].label, decisions[i]);
        }
        ConfusionMatrix cm = score(pairs);
        result.report.rows.push_back(EvalRow{backend_label, to_string(config.mode), cm, metrics(cm)});
        result.decisions.push_back(std::move(decisions));
    }
    return result;
}

}  // namespace rolerail
