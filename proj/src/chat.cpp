// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/chat.hpp"

namespace hazardkit::gateway {

std::string to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::string mime_type(ImageMedia media) {
    return media == ImageMedia::png ? "image/png" : "image/jpeg";
}

Message Message::text(Role role, std::string body) {
    Message m;
    m.role = role;
    m.parts.emplace_back(TextPart{std::move(body)});
    return m;
}

Message Message::user_with_image(std::string body, std::vector<std::uint8_t> image_bytes,
                                 ImageMedia media) {
    Message m;
    m.role = Role::user;
    m.parts.emplace_back(TextPart{std::move(body)});
    m.parts.emplace_back(ImagePart{std::move(image_bytes), media});
    return m;
}

void validate_request(const ChatRequest& request) {
    if (request.model_name.empty()) {
        throw ValidationError("model_name must not be empty");
    }
    if (request.messages.empty()) {
        throw ValidationError("request must contain at least one message");
    }
    if (request.temperature < 0.0 || request.temperature > 2.0) {
        throw ValidationError("temperature must lie in [0, 2]");
    }
    if (request.max_output_tokens <= 0) {
        throw ValidationError("max_output_tokens must be positive");
    }
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        const Message& m = request.messages[i];
        if (m.parts.empty()) {
            throw ValidationError("message parts must not be empty");
        }
        if (m.role == Role::system && i != 0) {
            throw ValidationError("system message must be first and unique");
        }
        for (const Part& p : m.parts) {
            if (std::holds_alternative<ImagePart>(p)) {
                if (m.role != Role::user) {
                    throw ValidationError("image parts may appear only in user messages");
                }
                if (std::get<ImagePart>(p).bytes.empty()) {
                    throw ValidationError("image part must carry bytes");
                }
            }
        }
    }
}

double estimate_cost(const Usage& usage, const PriceTable& prices) {
    return static_cast<double>(usage.total_input_tokens) * prices.input_rate +
           static_cast<double>(usage.total_output_tokens) * prices.output_rate;
}

}  // namespace hazardkit::gateway
