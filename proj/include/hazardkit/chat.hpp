// SPDX-License-Identifier: Apache-2.0
// Chat-completion request/response/usage types shared by every pipeline.
#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hazardkit::gateway {

enum class Role { system, user, assistant };

enum class ImageMedia { png, jpeg };

std::string to_string(Role role);
std::string mime_type(ImageMedia media);

struct TextPart {
    std::string text;
};

struct ImagePart {
    std::vector<std::uint8_t> bytes;
    ImageMedia media = ImageMedia::png;
};

using Part = std::variant<TextPart, ImagePart>;

struct Message {
    Role role = Role::user;
    std::vector<Part> parts;

    static Message text(Role role, std::string body);
    static Message user_with_image(std::string body, std::vector<std::uint8_t> image_bytes,
                                   ImageMedia media);
};

struct ChatRequest {
    std::string model_name;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Enforces the request invariants: at least one message, at most one system
// message (first), non-empty parts, images only inside user messages,
// temperature in [0,2], positive max_output_tokens.
void validate_request(const ChatRequest& request);

struct ChatResponse {
    std::string text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::chrono::milliseconds latency{0};
};

struct Usage {
    std::int64_t total_input_tokens = 0;
    std::int64_t total_output_tokens = 0;
    double estimated_cost = 0.0;
    std::chrono::milliseconds wall_time{0};
};

// Per-token prices. Defaults match a large commercial vision model's list
// price (5 USD / 15 USD per million tokens) so that a 100-report extraction
// run lands near one currency unit.
struct PriceTable {
    double input_rate = 5e-6;
    double output_rate = 15e-6;
};

double estimate_cost(const Usage& usage, const PriceTable& prices);

// Knobs every pipeline passes through to request construction.
struct ChatParams {
    std::string model_name = "gpt-4o-mini";
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

}  // namespace hazardkit::gateway
