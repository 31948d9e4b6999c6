// SPDX-License-Identifier: Apache-2.0
// Uniform client for chat-completion endpoints: live HTTP with retry and
// rate limiting, or deterministic record/replay from a fixture file.
#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "hazardkit/chat.hpp"
#include "hazardkit/fixture.hpp"

namespace hazardkit::gateway {

class GatewayError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Transport kept failing after the retry budget was spent.
class RetryExhausted : public GatewayError {
  public:
    using GatewayError::GatewayError;
};

// The endpoint kept answering HTTP 429 through the whole retry budget.
class RateLimited : public GatewayError {
  public:
    using GatewayError::GatewayError;
};

// Strict replay: no fixture entry for the request digest.
class FixtureMiss : public GatewayError {
  public:
    explicit FixtureMiss(const std::string& digest)
        : GatewayError("no fixture entry for digest " + digest), digest_(digest) {}
    const std::string& digest() const { return digest_; }

  private:
    std::string digest_;
};

// Non-retryable HTTP status (4xx other than 429).
class ApiError : public GatewayError {
  public:
    ApiError(int status, const std::string& body)
        : GatewayError("endpoint returned status " + std::to_string(status) + ": " + body),
          status_(status) {}
    int status() const { return status_; }

  private:
    int status_ = 0;
};

// The backend produced no text; carries whether it reported truncation.
class EmptyResponse : public GatewayError {
  public:
    using GatewayError::GatewayError;
};

struct LiveBackend {
    std::string endpoint_url;                          // scheme://host[:port]
    std::string auth_token_env = "HAZARDKIT_API_KEY";  // token read from env, never config
};

struct ReplayBackend {
    std::filesystem::path fixture_path;
    bool strict = true;
};

using BackendConfig = std::variant<LiveBackend, ReplayBackend>;

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
};

// Serializes admission at a fixed request rate; thread-safe.
class RateLimiter {
  public:
    explicit RateLimiter(int requests_per_minute);
    void acquire();

  private:
    std::chrono::microseconds interval_;
    std::chrono::steady_clock::time_point next_slot_;
    std::mutex mutex_;
};

class Gateway {
  public:
    explicit Gateway(BackendConfig backend, RetryPolicy retry = {}, int rate_limit_rpm = 60,
                     PriceTable prices = {});

    // Live mode only: append every successful exchange to this fixture file.
    void set_record_path(std::filesystem::path path);

    // Validates, rate-limits, dispatches, and accounts usage. Thread-safe.
    ChatResponse send_chat(const ChatRequest& request);

    Usage usage() const;
    bool is_replay() const { return std::holds_alternative<ReplayBackend>(backend_); }

  private:
    ChatResponse send_live(const ChatRequest& request, const LiveBackend& backend);
    ChatResponse send_replay(const ChatRequest& request, const ReplayBackend& backend);
    void account(const ChatResponse& response);

    BackendConfig backend_;
    RetryPolicy retry_;
    PriceTable prices_;
    RateLimiter limiter_;
    std::optional<FixtureStore> fixtures_;
    std::optional<std::filesystem::path> record_path_;
    mutable std::mutex mutex_;
    Usage usage_;
};

}  // namespace hazardkit::gateway
