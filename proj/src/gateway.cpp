#include "ebias/gateway.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ebias/errors.hpp"
#include "ebias/rng.hpp"

namespace ebias {

std::uint64_t hash_request(const ChatRequest& req) {
    std::uint64_t h = fnv1a64(req.model_id);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(req.system_prompt, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(req.user_message, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(std::to_string(req.sample_index), h);
    return h;
}

ChatResponse Gateway::complete(const ChatRequest& req) {
    {
        std::lock_guard<std::mutex> lock(log_mutex_);
        log_.push_back({req.model_id, req.temperature, req.sample_index, hash_request(req)});
    }
    return do_complete(req);
}

std::vector<RequestLogEntry> Gateway::request_log() const {
    std::lock_guard<std::mutex> lock(log_mutex_);
    return log_;
}

std::size_t Gateway::request_count() const {
    std::lock_guard<std::mutex> lock(log_mutex_);
    return log_.size();
}

std::string build_wire_request(const ChatRequest& req, const std::string& wire_model_id) {
    nlohmann::json messages = nlohmann::json::array();
    if (!req.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", req.user_message}});

    nlohmann::json body{
        {"model", wire_model_id.empty() ? req.model_id : wire_model_id},
        {"messages", std::move(messages)},
        {"temperature", req.temperature},
    };
    if (req.max_tokens) body["max_tokens"] = *req.max_tokens;
    return body.dump();
}

std::string parse_wire_reply(const std::string& body) {
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::MalformedReply, "reply is not json");
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
        throw Error(ErrorCode::MalformedReply, "reply has no choices");
    }
    const auto& first = reply["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw Error(ErrorCode::MalformedReply, "choice carries no message content");
    }
    return first["message"]["content"].get<std::string>();
}

struct HttpGateway::Impl {
    HttpGatewayConfig config;
    httplib::Client client;
    std::mutex pace_mutex;
    std::chrono::steady_clock::time_point last_request{};
    bool any_request = false;

    explicit Impl(HttpGatewayConfig cfg) : config(std::move(cfg)), client(config.base_url) {
        client.set_read_timeout(std::chrono::milliseconds(
            static_cast<long long>(config.read_timeout_seconds * 1000)));
        if (!config.api_key.empty()) {
            client.set_default_headers({{"Authorization", "Bearer " + config.api_key}});
        }
    }

    // serializes requests and enforces the configured inter-request delay
    void pace() {
        std::unique_lock<std::mutex> lock(pace_mutex);
        if (any_request && config.delay_seconds > 0) {
            const auto earliest = last_request + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                     std::chrono::duration<double>(config.delay_seconds));
            const auto now = std::chrono::steady_clock::now();
            if (now < earliest) {
                std::this_thread::sleep_for(earliest - now);
            }
        }
        last_request = std::chrono::steady_clock::now();
        any_request = true;
    }
};

HttpGateway::HttpGateway(HttpGatewayConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpGateway::~HttpGateway() = default;

ChatResponse HttpGateway::do_complete(const ChatRequest& req) {
    const std::string body = build_wire_request(req, impl_->config.model_id);
    const auto start = std::chrono::steady_clock::now();

    int retries = 0;
    for (;;) {
        impl_->pace();
        httplib::Result res = impl_->client.Post(impl_->config.path, body, "application/json");
        if (!res) {
            throw Error(ErrorCode::Transport, "request failed: " + httplib::to_string(res.error()));
        }
        if (res->status == 429) {
            if (retries >= impl_->config.max_retries) {
                throw Error(ErrorCode::RateLimited,
                            "still rate-limited after " + std::to_string(retries) + " retries");
            }
            const double backoff =
                impl_->config.backoff_initial_seconds * static_cast<double>(1 << retries);
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            ++retries;
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw Error(ErrorCode::AuthFailure, "endpoint returned " + std::to_string(res->status));
        }
        if (res->status != 200) {
            throw Error(ErrorCode::Transport, "endpoint returned " + std::to_string(res->status));
        }

        ChatResponse out;
        out.text = parse_wire_reply(res->body);
        out.model_id = req.model_id;
        out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        out.raw_status = res->status;
        out.retries = retries;
        return out;
    }
}

} // namespace ebias
