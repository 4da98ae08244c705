#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace magic_markup {

struct TokenUsage {
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;

    TokenUsage& operator+=(const TokenUsage& other) {
        input_tokens += other.input_tokens;
        output_tokens += other.output_tokens;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

struct ChatRequest {
    std::optional<std::string> system_text;
    std::string user_text;
    bool json_mode = false;
    double temperature = 0.0;
    std::string model_name;
    std::optional<int> max_output_tokens;

    bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
    std::string text;
    double latency_seconds = 0.0;
    TokenUsage usage;

    bool operator==(const ChatResponse&) const = default;
};

/// Throws ValidationError for an empty prompt, temperature outside [0, 2]
/// or a non-positive token cap.
void validate_request(const ChatRequest& request);

/// SHA-256 over model name, system text, user text, json mode and
/// temperature. The token cap is deliberately left out.
std::string request_digest(const ChatRequest& request);

/// A single-shot chat-completion model. complete() is safe to call from
/// several threads at once.
class ModelClient {
public:
    virtual ~ModelClient() = default;

    /// Validates the request, delegates to the backend, enforces JSON mode
    /// (JsonModeViolation) and accumulates usage.
    ChatResponse complete(const ChatRequest& request);

    TokenUsage total_usage() const;
    std::size_t request_count() const;

protected:
    virtual ChatResponse do_complete(const ChatRequest& request) = 0;

private:
    mutable std::mutex mutex_;
    TokenUsage total_;
    std::size_t requests_ = 0;
};

/// Deterministic test double. Replies come from a handler or a FIFO list;
/// latency is fixed and usage is estimated from text length so reports
/// stay reproducible.
class ScriptedClient : public ModelClient {
public:
    using Handler = std::function<std::string(const ChatRequest&)>;

    explicit ScriptedClient(Handler handler, double latency_seconds = 0.0);
    explicit ScriptedClient(std::vector<std::string> replies, double latency_seconds = 0.0);

protected:
    ChatResponse do_complete(const ChatRequest& request) override;

private:
    Handler handler_;
    double latency_seconds_;
    std::mutex mutex_;
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

struct TranscriptEntry {
    std::string digest;
    std::size_t repetition = 0;  ///< nth time this digest was requested
    ChatRequest request;
    ChatResponse response;
};

struct Transcript {
    std::string fixture;
    std::vector<TranscriptEntry> entries;

    nlohmann::json to_json() const;
    static Transcript from_json(const nlohmann::json& j);
    static Transcript load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

/// Answers from a recorded transcript. A request whose digest was never
/// recorded, or was asked more often than recorded, raises ReplayMiss.
class ReplayClient : public ModelClient {
public:
    explicit ReplayClient(Transcript transcript);
    static std::unique_ptr<ReplayClient> from_file(const std::filesystem::path& path);

protected:
    ChatResponse do_complete(const ChatRequest& request) override;

private:
    std::map<std::string, std::vector<ChatResponse>> responses_;
    std::mutex mutex_;
    std::map<std::string, std::size_t> served_;
};

/// Forwards to another client and keeps every exchange for later replay.
class RecordingClient : public ModelClient {
public:
    RecordingClient(ModelClient& inner, std::string fixture);

    /// Entries sorted by (digest, repetition) so concurrent runs produce
    /// identical fixtures.
    Transcript transcript() const;

protected:
    ChatResponse do_complete(const ChatRequest& request) override;

private:
    ModelClient& inner_;
    std::string fixture_;
    mutable std::mutex mutex_;
    std::vector<TranscriptEntry> entries_;
    std::map<std::string, std::size_t> seen_;
};

struct LiveClientConfig {
    std::string api_base = "https://api.openai.com/v1";
    std::string api_key;
    std::string default_model = "gpt-4-0125-preview";
    std::size_t max_concurrent = 4;
    std::chrono::seconds timeout{120};

    /// Reads MAGIC_MARKUP_API_KEY, MAGIC_MARKUP_API_BASE and
    /// MAGIC_MARKUP_MODEL. Throws AuthError when the key is unset.
    static LiveClientConfig from_env();
};

inline constexpr const char* kApiKeyEnv = "MAGIC_MARKUP_API_KEY";
inline constexpr const char* kApiBaseEnv = "MAGIC_MARKUP_API_BASE";
inline constexpr const char* kModelEnv = "MAGIC_MARKUP_MODEL";

/// OpenAI-compatible /chat/completions client. At most max_concurrent
/// requests are in flight; each is bounded by the configured timeout.
class HttpModelClient : public ModelClient {
public:
    explicit HttpModelClient(LiveClientConfig config);
    ~HttpModelClient() override;

    const LiveClientConfig& config() const noexcept { return config_; }

protected:
    ChatResponse do_complete(const ChatRequest& request) override;

private:
    struct Gate;
    LiveClientConfig config_;
    std::unique_ptr<Gate> gate_;
};

nlohmann::json to_json(const ChatRequest& request);
nlohmann::json to_json(const ChatResponse& response);
nlohmann::json to_json(const TokenUsage& usage);
TokenUsage usage_from_json(const nlohmann::json& j);

}  // namespace magic_markup
