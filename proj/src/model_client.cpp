#include "magic_markup/model_client.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>

#include <httplib.h>

#include "magic_markup/error.hpp"
#include "magic_markup/hash.hpp"
#include "magic_markup/sidecar.hpp"

namespace magic_markup {

using nlohmann::json;

namespace {

std::uint64_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

ChatRequest request_from_json(const json& j) {
    ChatRequest r;
    if (j.contains("system_text") && !j.at("system_text").is_null()) {
        r.system_text = j.at("system_text").get<std::string>();
    }
    r.user_text = j.at("user_text").get<std::string>();
    r.json_mode = j.at("json_mode").get<bool>();
    r.temperature = j.at("temperature").get<double>();
    r.model_name = j.at("model_name").get<std::string>();
    if (j.contains("max_output_tokens") && !j.at("max_output_tokens").is_null()) {
        r.max_output_tokens = j.at("max_output_tokens").get<int>();
    }
    return r;
}

ChatResponse response_from_json(const json& j) {
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.latency_seconds = j.at("latency_seconds").get<double>();
    r.usage = usage_from_json(j.at("usage"));
    return r;
}

}  // namespace

json to_json(const TokenUsage& usage) {
    return {{"input_tokens", usage.input_tokens}, {"output_tokens", usage.output_tokens}};
}

TokenUsage usage_from_json(const json& j) {
    return TokenUsage{j.at("input_tokens").get<std::uint64_t>(), j.at("output_tokens").get<std::uint64_t>()};
}

json to_json(const ChatRequest& request) {
    return {
        {"system_text", request.system_text ? json(*request.system_text) : json(nullptr)},
        {"user_text", request.user_text},
        {"json_mode", request.json_mode},
        {"temperature", request.temperature},
        {"model_name", request.model_name},
        {"max_output_tokens",
         request.max_output_tokens ? json(*request.max_output_tokens) : json(nullptr)},
    };
}

json to_json(const ChatResponse& response) {
    return {{"text", response.text},
            {"latency_seconds", response.latency_seconds},
            {"usage", to_json(response.usage)}};
}

void validate_request(const ChatRequest& request) {
    if (request.user_text.empty()) throw Error(ErrorCode::ValidationError, "empty user_text");
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
        throw Error(ErrorCode::ValidationError, "temperature must be in [0, 2]");
    }
    if (request.max_output_tokens && *request.max_output_tokens <= 0) {
        throw Error(ErrorCode::ValidationError, "max_output_tokens must be positive");
    }
}

std::string request_digest(const ChatRequest& request) {
    const json key = json::array({
        request.model_name,
        request.system_text ? json(*request.system_text) : json(nullptr),
        request.user_text,
        request.json_mode,
        request.temperature,
    });
    return sha256_hex(key.dump());
}

// ---------------------------------------------------------------------------

ChatResponse ModelClient::complete(const ChatRequest& request) {
    validate_request(request);
    ChatResponse response = do_complete(request);
    {
        std::lock_guard lock(mutex_);
        total_ += response.usage;
        ++requests_;
    }
    if (request.json_mode && !json::accept(response.text)) {
        throw Error(ErrorCode::JsonModeViolation, "response is not a single JSON value");
    }
    return response;
}

TokenUsage ModelClient::total_usage() const {
    std::lock_guard lock(mutex_);
    return total_;
}

std::size_t ModelClient::request_count() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

// ---------------------------------------------------------------------------

ScriptedClient::ScriptedClient(Handler handler, double latency_seconds)
    : handler_(std::move(handler)), latency_seconds_(latency_seconds) {}

ScriptedClient::ScriptedClient(std::vector<std::string> replies, double latency_seconds)
    : latency_seconds_(latency_seconds), replies_(std::move(replies)) {}

ChatResponse ScriptedClient::do_complete(const ChatRequest& request) {
    ChatResponse response;
    if (handler_) {
        response.text = handler_(request);
    } else {
        std::lock_guard lock(mutex_);
        if (next_ >= replies_.size()) {
            throw Error(ErrorCode::ReplayMiss, "scripted client has no reply left");
        }
        response.text = replies_[next_++];
    }
    response.latency_seconds = latency_seconds_;
    response.usage.input_tokens =
        estimate_tokens(request.user_text) + estimate_tokens(request.system_text.value_or(""));
    response.usage.output_tokens = estimate_tokens(response.text);
    return response;
}

// ---------------------------------------------------------------------------

json Transcript::to_json() const {
    json entries_json = json::array();
    for (const auto& e : entries) {
        entries_json.push_back({{"digest", e.digest},
                                {"repetition", e.repetition},
                                {"request", magic_markup::to_json(e.request)},
                                {"response", magic_markup::to_json(e.response)}});
    }
    return {{"version", 1}, {"fixture", fixture}, {"entries", std::move(entries_json)}};
}

Transcript Transcript::from_json(const json& j) {
    try {
        if (j.at("version").get<int>() != 1) {
            throw Error(ErrorCode::SchemaError, "unsupported transcript version");
        }
        Transcript t;
        t.fixture = j.at("fixture").get<std::string>();
        for (const auto& e : j.at("entries")) {
            TranscriptEntry entry;
            entry.digest = e.at("digest").get<std::string>();
            entry.repetition = e.value("repetition", std::size_t{0});
            entry.request = request_from_json(e.at("request"));
            entry.response = response_from_json(e.at("response"));
            t.entries.push_back(std::move(entry));
        }
        return t;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("transcript: ") + e.what());
    }
}

Transcript Transcript::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
}

void Transcript::save(const std::filesystem::path& path) const {
    write_file_atomic(path, to_json().dump(2) + "\n");
}

ReplayClient::ReplayClient(Transcript transcript) {
    auto entries = std::move(transcript.entries);
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.repetition < b.repetition;
    });
    for (auto& e : entries) responses_[e.digest].push_back(std::move(e.response));
}

std::unique_ptr<ReplayClient> ReplayClient::from_file(const std::filesystem::path& path) {
    return std::make_unique<ReplayClient>(Transcript::load(path));
}

ChatResponse ReplayClient::do_complete(const ChatRequest& request) {
    const std::string digest = request_digest(request);
    auto it = responses_.find(digest);
    if (it == responses_.end()) {
        throw Error(ErrorCode::ReplayMiss, "no recorded response for request " + digest);
    }
    std::lock_guard lock(mutex_);
    std::size_t& served = served_[digest];
    if (served >= it->second.size()) {
        throw Error(ErrorCode::ReplayMiss, "request " + digest + " asked more often than recorded");
    }
    return it->second[served++];
}

RecordingClient::RecordingClient(ModelClient& inner, std::string fixture)
    : inner_(inner), fixture_(std::move(fixture)) {}

ChatResponse RecordingClient::do_complete(const ChatRequest& request) {
    ChatResponse response = inner_.complete(request);
    const std::string digest = request_digest(request);
    std::lock_guard lock(mutex_);
    entries_.push_back(TranscriptEntry{digest, seen_[digest]++, request, response});
    return response;
}

Transcript RecordingClient::transcript() const {
    std::lock_guard lock(mutex_);
    Transcript t{fixture_, entries_};
    std::sort(t.entries.begin(), t.entries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.digest, a.repetition) < std::tie(b.digest, b.repetition);
    });
    return t;
}

// ---------------------------------------------------------------------------

LiveClientConfig LiveClientConfig::from_env() {
    LiveClientConfig config;
    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
        throw Error(ErrorCode::AuthError, std::string(kApiKeyEnv) + " is not set");
    }
    config.api_key = key;
    if (const char* base = std::getenv(kApiBaseEnv); base != nullptr && *base != '\0') {
        config.api_base = base;
    }
    if (const char* model = std::getenv(kModelEnv); model != nullptr && *model != '\0') {
        config.default_model = model;
    }
    return config;
}

struct HttpModelClient::Gate {
    explicit Gate(std::size_t n) : available(n) {}

    void acquire() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [this] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard lock(mutex);
            ++available;
        }
        cv.notify_one();
    }

    std::mutex mutex;
    std::condition_variable cv;
    std::size_t available;
};

HttpModelClient::HttpModelClient(LiveClientConfig config)
    : config_(std::move(config)), gate_(std::make_unique<Gate>(std::max<std::size_t>(1, config_.max_concurrent))) {}

HttpModelClient::~HttpModelClient() = default;

ChatResponse HttpModelClient::do_complete(const ChatRequest& request) {
    // Split "scheme://host[:port]/prefix" into what httplib wants.
    const std::string& base = config_.api_base;
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::TransportError, "malformed API base '" + base + "'");
    }
    const auto path_start = base.find('/', scheme_end + 3);
    const std::string origin = base.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    json messages = json::array();
    if (request.system_text) messages.push_back({{"role", "system"}, {"content", *request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    json body = {
        {"model", request.model_name.empty() ? config_.default_model : request.model_name},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
    };
    if (request.json_mode) body["response_format"] = {{"type", "json_object"}};
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;

    gate_->acquire();
    struct Release {
        Gate& g;
        ~Release() { g.release(); }
    } release{*gate_};

    httplib::Client http(origin);
    http.set_connection_timeout(config_.timeout);
    http.set_read_timeout(config_.timeout);
    http.set_write_timeout(config_.timeout);
    httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

    const auto started = std::chrono::steady_clock::now();
    auto result = http.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    const double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (!result) {
        throw Error(ErrorCode::TransportError, "request failed: " + httplib::to_string(result.error()));
    }
    if (result->status == 401 || result->status == 403) {
        throw Error(ErrorCode::AuthError, "server rejected credentials (HTTP " +
                                              std::to_string(result->status) + ")");
    }
    if (result->status != 200) {
        throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(result->status) + ": " +
                                                   result->body.substr(0, 200));
    }

    ChatResponse response;
    response.latency_seconds = latency;
    try {
        const json reply = json::parse(result->body);
        const json& content = reply.at("choices").at(0).at("message").at("content");
        response.text = content.is_string() ? content.get<std::string>() : std::string();
        if (reply.contains("usage")) {
            const json& usage = reply.at("usage");
            response.usage.input_tokens = usage.value("prompt_tokens", std::uint64_t{0});
            response.usage.output_tokens = usage.value("completion_tokens", std::uint64_t{0});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::TransportError, std::string("unexpected response body: ") + e.what());
    }
    return response;
}

}  // namespace magic_markup
