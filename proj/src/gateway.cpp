// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/gateway.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "hazardkit/digest.hpp"
#include "hazardkit/util.hpp"
#include "hazardkit/wire.hpp"

namespace hazardkit::gateway {

RateLimiter::RateLimiter(int requests_per_minute)
    : interval_(requests_per_minute > 0 ? 60'000'000 / requests_per_minute : 0),
      next_slot_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

Gateway::Gateway(BackendConfig backend, RetryPolicy retry, int rate_limit_rpm, PriceTable prices)
    : backend_(std::move(backend)), retry_(retry), prices_(prices), limiter_(rate_limit_rpm) {
    if (const auto* replay = std::get_if<ReplayBackend>(&backend_)) {
        fixtures_ = FixtureStore::load(replay->fixture_path);
    }
}

void Gateway::set_record_path(std::filesystem::path path) { record_path_ = std::move(path); }

ChatResponse Gateway::send_chat(const ChatRequest& request) {
    validate_request(request);
    limiter_.acquire();
    ChatResponse response;
    if (const auto* live = std::get_if<LiveBackend>(&backend_)) {
        response = send_live(request, *live);
        if (record_path_) {
            FixtureEntry entry{request_digest(request), response.text, response.input_tokens,
                               response.output_tokens};
            std::lock_guard<std::mutex> lock(mutex_);
            FixtureStore::append(*record_path_, entry);
        }
    } else {
        response = send_replay(request, std::get<ReplayBackend>(backend_));
    }
    account(response);
    return response;
}

Usage Gateway::usage() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return usage_;
}

void Gateway::account(const ChatResponse& response) {
    std::lock_guard<std::mutex> lock(mutex_);
    usage_.total_input_tokens += response.input_tokens;
    usage_.total_output_tokens += response.output_tokens;
    usage_.wall_time += response.latency;
    usage_.estimated_cost = estimate_cost(usage_, prices_);
}

namespace {

struct ParsedUrl {
    std::string scheme_host;  // scheme://host[:port], what httplib::Client wants
    std::string path_prefix;  // any path baked into the endpoint URL
};

ParsedUrl parse_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw GatewayError("endpoint URL must include a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, ""};
    }
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

}  // namespace

ChatResponse Gateway::send_live(const ChatRequest& request, const LiveBackend& backend) {
    const char* token = backend.auth_token_env.empty()
                            ? nullptr
                            : std::getenv(backend.auth_token_env.c_str());
    if (token == nullptr || *token == '\0') {
        throw GatewayError("auth token environment variable is empty: " + backend.auth_token_env);
    }

    ParsedUrl url = parse_endpoint(backend.endpoint_url);
    std::string path = url.path_prefix;
    if (!path.ends_with("/chat/completions")) {
        path += "/v1/chat/completions";
    }
    const std::string body = to_wire_json(request).dump();
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + token}};

    auto started = std::chrono::steady_clock::now();
    int last_status = 0;
    std::string last_error = "connection failed";
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        httplib::Client client(url.scheme_host);
        client.set_connection_timeout(30);
        client.set_read_timeout(300);
        auto result = client.Post(path, headers, body, "application/json");
        if (result) {
            last_status = result->status;
            if (result->status == 200) {
                nlohmann::json j = nlohmann::json::parse(result->body, nullptr, false);
                if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
                    throw GatewayError("malformed completion response: " + result->body);
                }
                const auto& choice = j["choices"][0];
                ChatResponse response;
                response.text =
                    util::rtrim(choice.at("message").value("content", std::string{}));
                if (j.contains("usage")) {
                    response.input_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
                    response.output_tokens =
                        j["usage"].value("completion_tokens", std::int64_t{0});
                }
                response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - started);
                if (response.text.empty()) {
                    std::string reason = choice.value("finish_reason", std::string{});
                    throw EmptyResponse(reason == "length"
                                            ? "response truncated by token limit"
                                            : "endpoint returned empty text");
                }
                return response;
            }
            if (result->status != 429 && result->status < 500) {
                throw ApiError(result->status, result->body);
            }
            last_error = "status " + std::to_string(result->status);
        } else {
            last_status = 0;
            last_error = httplib::to_string(result.error());
        }
        if (attempt < retry_.max_attempts) {
            auto delay = std::chrono::duration_cast<std::chrono::milliseconds>(
                retry_.base_delay * std::pow(retry_.factor, attempt - 1));
            std::this_thread::sleep_for(delay);
        }
    }
    if (last_status == 429) {
        throw RateLimited("rate limited after " + std::to_string(retry_.max_attempts) +
                          " attempts");
    }
    throw RetryExhausted("transport failed after " + std::to_string(retry_.max_attempts) +
                         " attempts: " + last_error);
}

ChatResponse Gateway::send_replay(const ChatRequest& request, const ReplayBackend& backend) {
    const std::string digest = request_digest(request);
    const FixtureEntry* entry = fixtures_->find(digest);
    if (entry == nullptr) {
        if (backend.strict) {
            throw FixtureMiss(digest);
        }
        return ChatResponse{"UNRECORDED", 0, 0, std::chrono::milliseconds{0}};
    }
    return ChatResponse{entry->response_text, entry->input_tokens, entry->output_tokens,
                        std::chrono::milliseconds{0}};
}

}  // namespace hazardkit::gateway
