#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ebias {

struct ChatRequest {
    std::string model_id;
    std::string system_prompt; // omitted from the wire when empty
    std::string user_message;
    double temperature = 1.0;
    std::optional<int> max_tokens; // unset = endpoint default
    // distinguishes repeated draws of the same request (e.g. iteration
    // number); ignored by live endpoints, mixed into the mock's stream seed
    std::uint64_t sample_index = 0;
};

struct ChatResponse {
    std::string text;
    std::string model_id;
    std::chrono::milliseconds latency{0};
    int raw_status = 200;
    int retries = 0;
};

struct RequestLogEntry {
    std::string model_id;
    double temperature = 1.0;
    std::uint64_t sample_index = 0;
    std::uint64_t request_hash = 0;
};

std::uint64_t hash_request(const ChatRequest& req);

/// Uniform chat-completion access. Implementations are safe for concurrent
/// calls; no conversational context is carried between calls.
class Gateway {
public:
    virtual ~Gateway() = default;

    ChatResponse complete(const ChatRequest& req);

    std::vector<RequestLogEntry> request_log() const;
    std::size_t request_count() const;

protected:
    virtual ChatResponse do_complete(const ChatRequest& req) = 0;

private:
    mutable std::mutex log_mutex_;
    std::vector<RequestLogEntry> log_;
};

struct HttpGatewayConfig {
    std::string base_url;                       // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model_id;                       // wire model name
    std::string api_key;                        // empty = no Authorization header
    double delay_seconds = 60.0;                // min interval between requests
    int max_retries = 3;                        // backoff attempts on HTTP 429
    double backoff_initial_seconds = 1.0;
    double read_timeout_seconds = 120.0;
};

/// Adapter for the common chat-completions wire shape: POST {model,
/// messages[{role, content}], temperature[, max_tokens]}, reply
/// choices[0].message.content.
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpGatewayConfig config);
    ~HttpGateway() override;

protected:
    ChatResponse do_complete(const ChatRequest& req) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string build_wire_request(const ChatRequest& req, const std::string& wire_model_id);

/// Extracts choices[0].message.content; throws MalformedReply otherwise.
std::string parse_wire_reply(const std::string& body);

} // namespace ebias
