#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rolerail/errors.hpp"

namespace rolerail {

enum class ChatRole { system, user, assistant };

inline const char* to_string(ChatRole role) {
    switch (role) {
        case ChatRole::system: return "system";
        case ChatRole::user: return "user";
        case ChatRole::assistant: return "assistant";
    }
    return "unknown";
}

struct ChatMessage {
    ChatRole role = ChatRole::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

inline ChatMessage system_message(std::string content) { return {ChatRole::system, std::move(content)}; }
inline ChatMessage user_message(std::string content) { return {ChatRole::user, std::move(content)}; }

struct ChatParams {
    std::string model_name;
    double temperature = 0.0;
    std::optional<std::size_t> max_tokens;
};

/// Order-preserving FNV-1a hash over the (role, content) pairs of a request.
/// Used as the tape key for scripted and record/replay backends.
inline std::string fingerprint(const std::vector<ChatMessage>& messages) {
    std::uint64_t hash = 14695981039346656037ULL;
    auto mix = [&hash](unsigned char byte) {
        hash ^= byte;
        hash *= 1099511628211ULL;
    };
    for (const auto& message : messages) {
        for (char c : std::string_view(to_string(message.role))) mix(static_cast<unsigned char>(c));
        mix(0x1F);
        for (char c : message.content) mix(static_cast<unsigned char>(c));
        mix(0x1E);
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
        hash >>= 4;
    }
    return out;
}

/// Chat-completion contract. Implementations must tolerate concurrent calls.
class ChatBackend {
  public:
    virtual ~ChatBackend() = default;

    /// Returns the completion text for the given messages. Throws Error with
    /// code transport / no_script_match / tape_miss on failure; callers in
    /// the pipeline convert those into fail-closed verdicts.
    virtual std::string chat(const std::vector<ChatMessage>& messages, const ChatParams& params) = 0;

    virtual std::string label() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// Deterministic test double: maps request fingerprints to canned
/// completions. Immutable once loaded; lookups are pure.
class ScriptedBackend final : public ChatBackend {
  public:
    explicit ScriptedBackend(std::optional<std::string> default_completion = std::nullopt,
                             Errc miss_code = Errc::no_script_match)
        : default_completion_(std::move(default_completion)), miss_code_(miss_code) {}

    void add_fingerprint(const std::string& fp, std::string completion) {
        scripts_[fp] = std::move(completion);
    }

    void add_script(const std::vector<ChatMessage>& messages, std::string completion) {
        add_fingerprint(fingerprint(messages), std::move(completion));
    }

    std::string chat(const std::vector<ChatMessage>& messages, const ChatParams&) override {
        if (messages.empty()) throw Error(Errc::schema_error, "chat called with no messages");
        auto it = scripts_.find(fingerprint(messages));
        if (it != scripts_.end()) return it->second;
        if (default_completion_) return *default_completion_;
        throw Error(miss_code_, "no scripted completion for fingerprint " + fingerprint(messages));
    }

    std::string label() const override { return "scripted"; }

    std::size_t size() const { return scripts_.size(); }

  private:
    std::unordered_map<std::string, std::string> scripts_;
    std::optional<std::string> default_completion_;
    Errc miss_code_;
};

// ---------------------------------------------------------------------------
// Record / replay tapes
// ---------------------------------------------------------------------------

struct TapeEntry {
    std::string fingerprint;
    std::string completion;
};

/// Tape file: one {"fingerprint", "completion"} JSON object per line.
inline std::vector<TapeEntry> load_tape(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::tape_io, "cannot open tape '" + path + "'");
    std::vector<TapeEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::tape_io, "tape '" + path + "' line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("fingerprint") || !j.contains("completion")) {
            throw Error(Errc::tape_io, "tape '" + path + "' line " + std::to_string(line_no) + ": missing fields");
        }
        entries.push_back(TapeEntry{j["fingerprint"].get<std::string>(), j["completion"].get<std::string>()});
    }
    return entries;
}

inline void append_tape(const std::string& path, const TapeEntry& entry) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(Errc::tape_io, "cannot append to tape '" + path + "'");
    nlohmann::ordered_json j{{"fingerprint", entry.fingerprint}, {"completion", entry.completion}};
    out << j.dump() << '\n';
    if (!out) throw Error(Errc::tape_io, "short write to tape '" + path + "'");
}

/// Replay backend over a recorded tape. Unknown fingerprints raise tape_miss
/// (or fall back to the default completion when one is given).
inline ScriptedBackend replay_backend(const std::string& tape_path,
                                      std::optional<std::string> default_completion = std::nullopt) {
    ScriptedBackend backend(std::move(default_completion), Errc::tape_miss);
    for (const auto& entry : load_tape(tape_path)) {
        backend.add_fingerprint(entry.fingerprint, entry.completion);
    }
    return backend;
}

/// Wraps a live backend and appends every (fingerprint, completion) pair to
/// the tape. Appends are serialized; the inner backend sees concurrent calls.
class RecordingBackend final : public ChatBackend {
  public:
    RecordingBackend(std::shared_ptr<ChatBackend> inner, std::string tape_path)
        : inner_(std::move(inner)), tape_path_(std::move(tape_path)) {
        // Fail early if the tape is not writable.
        std::ofstream probe(tape_path_, std::ios::app);
        if (!probe) throw Error(Errc::tape_io, "cannot open tape '" + tape_path_ + "' for writing");
    }

    std::string chat(const std::vector<ChatMessage>& messages, const ChatParams& params) override {
        std::string completion = inner_->chat(messages, params);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            append_tape(tape_path_, TapeEntry{fingerprint(messages), completion});
        }
        return completion;
    }

    std::string label() const override { return inner_->label() + "+record"; }

  private:
    std::shared_ptr<ChatBackend> inner_;
    std::string tape_path_;
    std::mutex mutex_;
};

}  // namespace rolerail
