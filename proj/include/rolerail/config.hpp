#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rolerail/errors.hpp"
#include "rolerail/eval.hpp"
#include "rolerail/http_clients.hpp"
#include "rolerail/pipeline.hpp"

namespace rolerail {

/// Application configuration, loadable from a JSON file and overridable by
/// CLI flags. Paths are resolved relative to the config file's directory.
struct AppConfig {
    std::string catalog_path;
    std::string corpus_path;
    std::optional<std::string> input_template_path;
    std::optional<std::string> output_template_path;

    // backend
    std::string backend_kind = "scripted";  // live | scripted | replay
    std::string backend_endpoint = "http://127.0.0.1:11434";
    std::string backend_model;
    std::string backend_chat_path = "/api/chat";
    std::optional<std::string> backend_tape;
    std::optional<std::string> backend_default_completion;
    std::optional<std::string> record_tape;
    int backend_timeout_ms = 120000;

    // embedding
    std::string embedding_kind = "reference";  // reference | live
    std::string embedding_endpoint = "http://127.0.0.1:11434";
    std::string embedding_model = "nomic-embed-text";
    std::string embedding_path = "/api/embeddings";

    // alignment scorer
    std::string scorer_kind = "reference";  // reference | live
    std::string scorer_endpoint;
    std::string scorer_path = "/score";

    PipelineConfig pipeline;

    // gateway
    std::string server_host = "127.0.0.1";
    int server_port = 8080;

    void validate() const {
        if (catalog_path.empty()) throw Error(Errc::config_error, "catalog path is required");
        if (corpus_path.empty()) throw Error(Errc::config_error, "corpus path is required");
        for (const std::string* path : {&catalog_path, &corpus_path}) {
            if (!std::filesystem::exists(*path)) {
                throw Error(Errc::config_error, "file not found: '" + *path + "'");
            }
        }
        for (const auto& opt : {input_template_path, output_template_path, backend_tape}) {
            if (opt && !std::filesystem::exists(*opt)) {
                throw Error(Errc::config_error, "file not found: '" + *opt + "'");
            }
        }
        if (backend_kind != "live" && backend_kind != "scripted" && backend_kind != "replay") {
            throw Error(Errc::config_error, "backend kind must be live, scripted or replay");
        }
        if ((backend_kind == "scripted" || backend_kind == "replay") && !backend_tape &&
            !backend_default_completion) {
            throw Error(Errc::config_error, backend_kind + " backend needs a tape or a default completion");
        }
        if (embedding_kind != "reference" && embedding_kind != "live") {
            throw Error(Errc::config_error, "embedding kind must be reference or live");
        }
        if (scorer_kind != "reference" && scorer_kind != "live") {
            throw Error(Errc::config_error, "scorer kind must be reference or live");
        }
        if (scorer_kind == "live" && scorer_endpoint.empty()) {
            throw Error(Errc::config_error, "live scorer needs an endpoint");
        }
        if (server_port < 0 || server_port > 65535) {
            throw Error(Errc::config_error, "server port out of range");
        }
        pipeline.validate();
    }
};

namespace detail {

inline std::string resolve_path(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    if (p.is_absolute()) return value;
    return (base / p).lexically_normal().string();
}

}  // namespace detail

inline AppConfig app_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    AppConfig cfg;
    auto resolve = [&](const std::string& value) { return detail::resolve_path(base_dir, value); };

    if (j.contains("catalog")) cfg.catalog_path = resolve(j["catalog"].get<std::string>());
    if (j.contains("corpus")) cfg.corpus_path = resolve(j["corpus"].get<std::string>());
    if (j.contains("templates")) {
        const auto& t = j["templates"];
        if (t.contains("input_filter")) cfg.input_template_path = resolve(t["input_filter"].get<std::string>());
        if (t.contains("output_filter")) cfg.output_template_path = resolve(t["output_filter"].get<std::string>());
    }
    if (j.contains("backend")) {
        const auto& b = j["backend"];
        if (b.contains("kind")) cfg.backend_kind = b["kind"].get<std::string>();
        if (b.contains("endpoint")) cfg.backend_endpoint = b["endpoint"].get<std::string>();
        if (b.contains("model")) cfg.backend_model = b["model"].get<std::string>();
        if (b.contains("chat_path")) cfg.backend_chat_path = b["chat_path"].get<std::string>();
        if (b.contains("tape")) cfg.backend_tape = resolve(b["tape"].get<std::string>());
        if (b.contains("default_completion")) cfg.backend_default_completion = b["default_completion"].get<std::string>();
        if (b.contains("record_tape")) cfg.record_tape = resolve(b["record_tape"].get<std::string>());
        if (b.contains("timeout_ms")) cfg.backend_timeout_ms = b["timeout_ms"].get<int>();
    }
    if (j.contains("embedding")) {
        const auto& e = j["embedding"];
        if (e.contains("kind")) cfg.embedding_kind = e["kind"].get<std::string>();
        if (e.contains("endpoint")) cfg.embedding_endpoint = e["endpoint"].get<std::string>();
        if (e.contains("model")) cfg.embedding_model = e["model"].get<std::string>();
        if (e.contains("path")) cfg.embedding_path = e["path"].get<std::string>();
    }
    if (j.contains("scorer")) {
        const auto& s = j["scorer"];
        if (s.contains("kind")) cfg.scorer_kind = s["kind"].get<std::string>();
        if (s.contains("endpoint")) cfg.scorer_endpoint = s["endpoint"].get<std::string>();
        if (s.contains("path")) cfg.scorer_path = s["path"].get<std::string>();
    }
    if (j.contains("pipeline")) {
        const auto& p = j["pipeline"];
        if (p.contains("mode")) cfg.pipeline.mode = pipeline_mode_from_string(p["mode"].get<std::string>());
        if (p.contains("k")) cfg.pipeline.k = p["k"].get<std::size_t>();
        if (p.contains("threshold")) cfg.pipeline.threshold = p["threshold"].get<double>();
        if (p.contains("align_threshold")) cfg.pipeline.align_threshold = p["align_threshold"].get<double>();
        if (p.contains("fallback_text")) cfg.pipeline.fallback_text = p["fallback_text"].get<std::string>();
        if (p.contains("fallback_counts_as_block")) {
            cfg.pipeline.fallback_counts_as_block = p["fallback_counts_as_block"].get<bool>();
        }
        if (p.contains("augment")) cfg.pipeline.augment = augment_style_from_string(p["augment"].get<std::string>());
        if (p.contains("model")) cfg.pipeline.model_name = p["model"].get<std::string>();
        if (p.contains("temperature")) cfg.pipeline.responder_temperature = p["temperature"].get<double>();
    }
    if (j.contains("server")) {
        const auto& s = j["server"];
        if (s.contains("host")) cfg.server_host = s["host"].get<std::string>();
        if (s.contains("port")) cfg.server_port = s["port"].get<int>();
    }
    return cfg;
}

inline AppConfig load_app_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::config_error, "cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Errc::config_error, "config file '" + path + "': " + e.what());
    }
    return app_config_from_json(j, std::filesystem::path(path).parent_path());
}

/// Fully wired application state: loaded data, built index, templates and
/// backend handles, ready to serve pipeline runs.
struct Runtime {
    AppConfig config;
    RoleCatalog catalog;
    Corpus corpus;
    VectorIndex index;
    FilterPromptTemplate input_template;
    FilterPromptTemplate output_template;
    std::shared_ptr<EmbeddingProvider> embedder;
    std::shared_ptr<ChatBackend> chat;
    std::shared_ptr<AlignmentScorer> scorer;

    PipelineContext context() const {
        PipelineContext ctx;
        ctx.catalog = &catalog;
        ctx.corpus = &corpus;
        ctx.index = &index;
        ctx.embedder = embedder.get();
        ctx.chat = chat.get();
        ctx.scorer = scorer.get();
        ctx.input_template = &input_template;
        ctx.output_template = &output_template;
        return ctx;
    }
};

inline std::shared_ptr<ChatBackend> build_chat_backend(const AppConfig& cfg) {
    std::shared_ptr<ChatBackend> backend;
    if (cfg.backend_kind == "live") {
        backend = std::make_shared<HttpChatBackend>(cfg.backend_endpoint, cfg.backend_model, cfg.backend_chat_path,
                                                    cfg.backend_timeout_ms);
    } else {
        auto scripted = std::make_shared<ScriptedBackend>(
            cfg.backend_default_completion,
            cfg.backend_kind == "replay" ? Errc::tape_miss : Errc::no_script_match);
        if (cfg.backend_tape) {
            for (const auto& entry : load_tape(*cfg.backend_tape)) {
                scripted->add_fingerprint(entry.fingerprint, entry.completion);
            }
        }
        backend = scripted;
    }
    if (cfg.record_tape) {
        backend = std::make_shared<RecordingBackend>(backend, *cfg.record_tape);
    }
    return backend;
}

inline Runtime build_runtime(AppConfig cfg) {
    cfg.validate();
    Runtime rt;
    rt.config = cfg;
    rt.catalog = load_catalog(cfg.catalog_path);
    rt.corpus = Corpus(load_corpus(cfg.corpus_path, rt.catalog));

    rt.input_template = cfg.input_template_path
                            ? FilterPromptTemplate::load(*cfg.input_template_path, FilterKind::input)
                            : default_input_filter_template();
    rt.output_template = cfg.output_template_path
                             ? FilterPromptTemplate::load(*cfg.output_template_path, FilterKind::output)
                             : default_output_filter_template();

    if (cfg.embedding_kind == "live") {
        rt.embedder = std::make_shared<HttpEmbeddingProvider>(cfg.embedding_endpoint, cfg.embedding_model,
                                                              cfg.embedding_path, cfg.backend_timeout_ms);
    } else {
        rt.embedder = std::make_shared<ReferenceEmbedder>();
    }
    rt.index = build_index(rt.corpus.docs(), *rt.embedder);

    rt.chat = build_chat_backend(cfg);

    if (cfg.scorer_kind == "live") {
        rt.scorer = std::make_shared<HttpAlignmentScorer>(cfg.scorer_endpoint, cfg.scorer_path, cfg.backend_timeout_ms);
    } else {
        rt.scorer = std::make_shared<ReferenceAligner>();
    }
    return rt;
}

}  // namespace rolerail
