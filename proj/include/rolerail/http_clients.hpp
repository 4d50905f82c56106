#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rolerail/embedding.hpp"
#include "rolerail/errors.hpp"
#include "rolerail/llm.hpp"
#include "rolerail/responder.hpp"

namespace rolerail {

namespace detail {

inline httplib::Client make_http_client(const std::string& base_url, int timeout_ms) {
    httplib::Client client(base_url);
    client.set_connection_timeout(std::chrono::milliseconds(timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(timeout_ms));
    return client;
}

inline nlohmann::json post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body,
                                int timeout_ms) {
    auto client = make_http_client(base_url, timeout_ms);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw Error(Errc::transport, "POST " + base_url + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(Errc::transport, "POST " + base_url + path + ": HTTP " + std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::transport, "POST " + base_url + path + ": invalid JSON response: " + e.what());
    }
}

}  // namespace detail

/// Chat client for a local model server. Wire format: POST {model,
/// messages:[{role,content}...], stream:false, options:{temperature}} to the
/// chat path; the completion is read from message.content (a choices[] array
/// in the same shape is accepted too).
class HttpChatBackend final : public ChatBackend {
  public:
    HttpChatBackend(std::string base_url, std::string model, std::string path = "/api/chat", int timeout_ms = 120000)
        : base_url_(std::move(base_url)), model_(std::move(model)), path_(std::move(path)), timeout_ms_(timeout_ms) {}

    std::string chat(const std::vector<ChatMessage>& messages, const ChatParams& params) override {
        if (messages.empty()) throw Error(Errc::schema_error, "chat called with no messages");
        nlohmann::json body;
        body["model"] = params.model_name.empty() ? model_ : params.model_name;
        body["messages"] = nlohmann::json::array();
        for (const auto& message : messages) {
            body["messages"].push_back({{"role", to_string(message.role)}, {"content", message.content}});
        }
        body["stream"] = false;
        body["options"] = {{"temperature", params.temperature}};
        if (params.max_tokens) body["options"]["num_predict"] = *params.max_tokens;

        nlohmann::json response = detail::post_json(base_url_, path_, body, timeout_ms_);
        if (response.contains("message") && response["message"].contains("content")) {
            return response["message"]["content"].get<std::string>();
        }
        if (response.contains("choices") && response["choices"].is_array() && !response["choices"].empty() &&
            response["choices"][0].contains("message")) {
            return response["choices"][0]["message"].value("content", std::string{});
        }
        throw Error(Errc::transport, "chat response has no message.content");
    }

    std::string label() const override { return "live:" + model_; }

  private:
    std::string base_url_;
    std::string model_;
    std::string path_;
    int timeout_ms_;
};

/// Embedding client: POST {model, prompt} to the embeddings path, response
/// {embedding:[...]}. Vectors are L2-normalized here so the provider
/// contract holds regardless of what the server returns; the dimension is
/// pinned by the first successful call.
class HttpEmbeddingProvider final : public EmbeddingProvider {
  public:
    HttpEmbeddingProvider(std::string base_url, std::string model, std::string path = "/api/embeddings",
                          int timeout_ms = 120000)
        : base_url_(std::move(base_url)), model_(std::move(model)), path_(std::move(path)), timeout_ms_(timeout_ms) {}

    Vec embed(const std::string& text) override {
        nlohmann::json response =
            detail::post_json(base_url_, path_, nlohmann::json{{"model", model_}, {"prompt", text}}, timeout_ms_);
        if (!response.contains("embedding") || !response["embedding"].is_array()) {
            throw Error(Errc::transport, "embedding response has no embedding array");
        }
        Vec vec = response["embedding"].get<Vec>();
        if (l2_norm(vec) == 0.0) {
            throw Error(Errc::unembeddable, "server returned a zero embedding for: '" + text + "'");
        }
        normalize(vec);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (dimension_ == 0) {
                dimension_ = vec.size();
            } else if (vec.size() != dimension_) {
                throw Error(Errc::dimension_mismatch, "embedding dimension changed from " +
                                                          std::to_string(dimension_) + " to " +
                                                          std::to_string(vec.size()));
            }
        }
        return vec;
    }

    std::size_t dimension() const override {
        std::lock_guard<std::mutex> lock(mutex_);
        return dimension_;
    }

    std::string name() const override { return "live:" + model_; }

  private:
    std::string base_url_;
    std::string model_;
    std::string path_;
    int timeout_ms_;
    mutable std::mutex mutex_;
    std::size_t dimension_ = 0;
};

/// Alignment scorer client: POST {claim, evidence} -> {score}. Scores are
/// clamped into [0, 1].
class HttpAlignmentScorer final : public AlignmentScorer {
  public:
    HttpAlignmentScorer(std::string base_url, std::string path = "/score", int timeout_ms = 120000)
        : base_url_(std::move(base_url)), path_(std::move(path)), timeout_ms_(timeout_ms) {}

    double score(const std::string& response, const std::string& evidence) override {
        if (tokenize(response).empty()) {
            throw Error(Errc::empty_response, "response has no tokens");
        }
        nlohmann::json reply = detail::post_json(
            base_url_, path_, nlohmann::json{{"claim", response}, {"evidence", evidence}}, timeout_ms_);
        if (!reply.contains("score") || !reply["score"].is_number()) {
            throw Error(Errc::transport, "alignment response has no numeric score");
        }
        double value = reply["score"].get<double>();
        if (value < 0.0) value = 0.0;
        if (value > 1.0) value = 1.0;
        return value;
    }

    std::string name() const override { return "live-align"; }

  private:
    std::string base_url_;
    std::string path_;
    int timeout_ms_;
};

}  // namespace rolerail
