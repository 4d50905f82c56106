// rolerail command-line entry point: corpus ingestion checks, single-query
// pipeline runs, ablation evaluation, and the HTTP gateway.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rolerail/rolerail.hpp"

namespace {

struct CliOverrides {
    std::optional<std::string> catalog;
    std::optional<std::string> corpus;
    std::optional<std::string> backend_kind;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::string> tape;
    std::optional<std::string> record_tape;
    std::optional<std::string> default_completion;
    std::optional<std::string> mode;
    std::optional<std::size_t> k;
    std::optional<double> threshold;
    std::optional<double> align_threshold;
    std::optional<std::string> fallback_text;
    std::optional<bool> fallback_counts_as_block;
    std::optional<std::string> augment;
    std::optional<std::string> host;
    std::optional<int> port;
};

rolerail::AppConfig make_config(const std::optional<std::string>& config_path, const CliOverrides& o) {
    rolerail::AppConfig cfg;
    if (config_path) {
        cfg = rolerail::load_app_config(*config_path);
    }
    if (o.catalog) cfg.catalog_path = *o.catalog;
    if (o.corpus) cfg.corpus_path = *o.corpus;
    if (o.backend_kind) cfg.backend_kind = *o.backend_kind;
    if (o.endpoint) cfg.backend_endpoint = *o.endpoint;
    if (o.model) {
        cfg.backend_model = *o.model;
        cfg.pipeline.model_name = *o.model;
    }
    if (o.tape) cfg.backend_tape = *o.tape;
    if (o.record_tape) cfg.record_tape = *o.record_tape;
    if (o.default_completion) cfg.backend_default_completion = *o.default_completion;
    if (o.mode) cfg.pipeline.mode = rolerail::pipeline_mode_from_string(*o.mode);
    if (o.k) cfg.pipeline.k = *o.k;
    if (o.threshold) cfg.pipeline.threshold = *o.threshold;
    if (o.align_threshold) cfg.pipeline.align_threshold = *o.align_threshold;
    if (o.fallback_text) cfg.pipeline.fallback_text = *o.fallback_text;
    if (o.fallback_counts_as_block) cfg.pipeline.fallback_counts_as_block = *o.fallback_counts_as_block;
    if (o.augment) cfg.pipeline.augment = rolerail::augment_style_from_string(*o.augment);
    if (o.host) cfg.server_host = *o.host;
    if (o.port) cfg.server_port = *o.port;
    return cfg;
}

int cmd_ingest(const rolerail::Runtime& rt) {
    rolerail::json stats{{"documents", rt.corpus.size()},
                         {"dimension", rt.index.dimension()},
                         {"roles", rt.catalog.roles.size()},
                         {"embedder", rt.embedder->name()}};
    std::cout << stats.dump(2) << "\n";
    return 0;
}

int cmd_query(const rolerail::Runtime& rt, const std::string& role, const std::string& text) {
    rolerail::PipelineTrace trace = rolerail::run_pipeline(rt.config.pipeline, rt.context(), role, text, "cli");
    std::cout << rolerail::trace_to_json(trace).dump(2) << "\n";
    return 0;
}

int cmd_eval(const rolerail::Runtime& rt, const std::string& queries_path, const std::vector<std::string>& mode_names,
             const std::string& out_dir, std::size_t workers) {
    auto queries = rolerail::load_queries(queries_path, rt.catalog);

    std::vector<rolerail::PipelineConfig> configs;
    if (mode_names.empty()) {
        for (auto mode : rolerail::all_pipeline_modes()) {
            rolerail::PipelineConfig cfg = rt.config.pipeline;
            cfg.mode = mode;
            configs.push_back(cfg);
        }
    } else {
        for (const auto& name : mode_names) {
            rolerail::PipelineConfig cfg = rt.config.pipeline;
            cfg.mode = rolerail::pipeline_mode_from_string(name);
            configs.push_back(cfg);
        }
    }

    rolerail::EvalOptions options;
    options.workers = workers;
    rolerail::AblationResult result =
        rolerail::run_ablation(configs, rt.context(), queries, rt.chat->label(), options);

    std::filesystem::create_directories(out_dir);
    const std::string json_path = (std::filesystem::path(out_dir) / "report.json").string();
    const std::string text_path = (std::filesystem::path(out_dir) / "report.txt").string();
    std::string text = rolerail::render_report_text(result.report);
    {
        std::ofstream out(json_path, std::ios::binary);
        out << rolerail::to_json(result.report).dump(2) << "\n";
    }
    {
        std::ofstream out(text_path, std::ios::binary);
        out << text;
    }
    std::cout << text;
    std::cout << "wrote " << json_path << " and " << text_path << "\n";
    return 0;
}

int cmd_serve(const rolerail::Runtime& rt) {
    rolerail::GatewayService service(rt);
    httplib::Server server;
    rolerail::install_routes(server, service);
    std::cout << "listening on http://" << rt.config.server_host << ":" << rt.config.server_port << "\n";
    if (!server.listen(rt.config.server_host, rt.config.server_port)) {
        std::cerr << "error: cannot bind " << rt.config.server_host << ":" << rt.config.server_port << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Role-based access control gateway for retrieval-augmented generation"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    CliOverrides o;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--catalog", o.catalog, "role catalog file (JSON array of {name, description})");
    app.add_option("--corpus", o.corpus, "corpus file (JSONL of {id, title, body, roles})");
    app.add_option("--backend", o.backend_kind, "chat backend kind: live | scripted | replay");
    app.add_option("--endpoint", o.endpoint, "model server base URL");
    app.add_option("--model", o.model, "model name");
    app.add_option("--tape", o.tape, "tape file for scripted/replay backends");
    app.add_option("--record-tape", o.record_tape, "record every completion to this tape");
    app.add_option("--default-completion", o.default_completion, "fallback completion for scripted backends");
    app.add_option("--mode", o.mode, "pipeline mode: no_filter | input_only | output_only | combined | static_baseline");
    app.add_option("--k", o.k, "retrieval depth");
    app.add_option("--threshold", o.threshold, "retrieval similarity threshold");
    app.add_option("--align-threshold", o.align_threshold, "fact-check alignment threshold");
    app.add_option("--fallback-text", o.fallback_text, "fallback statement for unsupported responses");
    app.add_option("--fallback-counts-as-block", o.fallback_counts_as_block,
                   "score a fallback response as a block decision");
    app.add_option("--augment", o.augment, "role augmentation: name | name_and_description");

    auto* ingest = app.add_subcommand("ingest", "validate the corpus and report index stats");

    auto* query = app.add_subcommand("query", "run one query through the pipeline and print the trace");
    std::string query_role, query_text;
    query->add_option("--role", query_role, "user role")->required();
    query->add_option("--text", query_text, "query text")->required();

    auto* eval = app.add_subcommand("eval", "evaluate pipeline configurations over a labeled query set");
    std::string queries_path, out_dir = ".";
    std::vector<std::string> mode_names;
    std::size_t workers = 1;
    eval->add_option("--queries", queries_path, "labeled query file (JSONL)")->required();
    eval->add_option("--modes", mode_names, "modes to evaluate (default: all five)")->delimiter(',');
    eval->add_option("--out", out_dir, "output directory for report.json / report.txt");
    eval->add_option("--workers", workers, "parallel workers per configuration");

    auto* serve = app.add_subcommand("serve", "start the HTTP gateway");
    serve->add_option("--host", o.host, "bind host");
    serve->add_option("--port", o.port, "bind port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        rolerail::Runtime rt = rolerail::build_runtime(make_config(config_path, o));
        if (ingest->parsed()) return cmd_ingest(rt);
        if (query->parsed()) return cmd_query(rt, query_role, query_text);
        if (eval->parsed()) return cmd_eval(rt, queries_path, mode_names, out_dir, workers);
        if (serve->parsed()) return cmd_serve(rt);
    } catch (const rolerail::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
