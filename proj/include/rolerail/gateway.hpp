#pragma once

#include <optional>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "rolerail/config.hpp"
#include "rolerail/eval.hpp"
#include "rolerail/pipeline.hpp"

namespace rolerail {

inline constexpr const char* kPolicyRefusal = "This request was blocked by role-based access policy.";

struct GatewayResponse {
    int status = 200;
    json body;
};

/// HTTP-facing pipeline frontend. Stateless per request: the caller supplies
/// the role; shared state is limited to the frozen runtime. Blocked
/// decisions never carry generated or retrieved content: the trace is
/// redacted and final_response is replaced by a policy-refusal message.
class GatewayService {
  public:
    explicit GatewayService(const Runtime& runtime) : runtime_(runtime) {}

    GatewayResponse handle_query(const std::string& request_body) const {
        json request;
        try {
            request = json::parse(request_body);
        } catch (const json::exception& e) {
            return {400, json{{"error", std::string("invalid JSON: ") + e.what()}}};
        }
        if (!request.is_object() || !request.contains("role") || !request.contains("query") ||
            !request["role"].is_string() || !request["query"].is_string()) {
            return {400, json{{"error", "body must be {role: string, query: string, mode?: string}"}}};
        }
        const std::string role = request["role"].get<std::string>();
        const std::string query = request["query"].get<std::string>();
        if (role.empty() || query.empty()) {
            return {400, json{{"error", "role and query must be non-empty"}}};
        }

        PipelineConfig config = runtime_.config.pipeline;
        if (request.contains("mode")) {
            if (!request["mode"].is_string()) {
                return {400, json{{"error", "mode must be a string"}}};
            }
            try {
                config.mode = pipeline_mode_from_string(request["mode"].get<std::string>());
            } catch (const Error& e) {
                return {400, json{{"error", e.what()}}};
            }
        }
        if (!runtime_.catalog.contains(role)) {
            return {422, json{{"error", "unknown role '" + role + "'"}}};
        }

        PipelineTrace trace = run_pipeline(config, runtime_.context(), role, query);
        const bool blocked = trace.final_decision == AccessLabel::block;
        json body = trace_to_json(trace, /*redact=*/blocked);
        if (blocked) {
            body["refusal"] = kPolicyRefusal;
        }
        return {200, std::move(body)};
    }

    GatewayResponse handle_health() const { return {200, json{{"status", "ok"}}}; }

  private:
    const Runtime& runtime_;
};

/// Mounts POST /v1/query and GET /v1/health on the server.
inline void install_routes(httplib::Server& server, const GatewayService& service) {
    server.Post("/v1/query", [&service](const httplib::Request& req, httplib::Response& res) {
        GatewayResponse out = service.handle_query(req.body);
        res.status = out.status;
        res.set_content(out.body.dump(2) + "\n", "application/json");
    });
    server.Get("/v1/health", [&service](const httplib::Request&, httplib::Response& res) {
        GatewayResponse out = service.handle_health();
        res.status = out.status;
        res.set_content(out.body.dump(2) + "\n", "application/json");
    });
}

}  // namespace rolerail
