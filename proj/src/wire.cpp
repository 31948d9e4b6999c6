// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/wire.hpp"

#include "hazardkit/util.hpp"

namespace hazardkit::gateway {

namespace {

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "assistant") return Role::assistant;
    if (s == "user") return Role::user;
    throw ValidationError("unknown message role: " + s);
}

}  // namespace

nlohmann::ordered_json to_wire_json(const ChatRequest& request) {
    nlohmann::ordered_json body;
    body["model"] = request.model_name;
    body["messages"] = nlohmann::ordered_json::array();
    for (const Message& m : request.messages) {
        nlohmann::ordered_json msg;
        msg["role"] = to_string(m.role);
        if (m.parts.size() == 1 && std::holds_alternative<TextPart>(m.parts[0])) {
            msg["content"] = std::get<TextPart>(m.parts[0]).text;
        } else {
            nlohmann::ordered_json parts = nlohmann::ordered_json::array();
            for (const Part& p : m.parts) {
                if (const auto* text = std::get_if<TextPart>(&p)) {
                    parts.push_back({{"type", "text"}, {"text", text->text}});
                } else {
                    const auto& img = std::get<ImagePart>(p);
                    std::string url = "data:" + mime_type(img.media) + ";base64," +
                                      util::base64_encode(img.bytes);
                    parts.push_back(
                        {{"type", "image_url"}, {"image_url", {{"url", std::move(url)}}}});
                }
            }
            msg["content"] = std::move(parts);
        }
        body["messages"].push_back(std::move(msg));
    }
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    return body;
}

ChatRequest from_wire_json(const nlohmann::json& body) {
    ChatRequest request;
    request.model_name = body.at("model").get<std::string>();
    request.temperature = body.value("temperature", 0.0);
    request.max_output_tokens = body.value("max_tokens", 1024);
    for (const auto& msg : body.at("messages")) {
        Message m;
        m.role = role_from_string(msg.at("role").get<std::string>());
        const auto& content = msg.at("content");
        if (content.is_string()) {
            m.parts.emplace_back(TextPart{content.get<std::string>()});
        } else if (content.is_array()) {
            for (const auto& part : content) {
                const std::string type = part.at("type").get<std::string>();
                if (type == "text") {
                    m.parts.emplace_back(TextPart{part.at("text").get<std::string>()});
                } else if (type == "image_url") {
                    std::string url = part.at("image_url").at("url").get<std::string>();
                    auto comma = url.find(',');
                    if (!url.starts_with("data:") || comma == std::string::npos) {
                        throw ValidationError("image_url must be a base64 data URL");
                    }
                    ImageMedia media = url.find("image/jpeg") != std::string::npos
                                           ? ImageMedia::jpeg
                                           : ImageMedia::png;
                    m.parts.emplace_back(
                        ImagePart{util::base64_decode(url.substr(comma + 1)), media});
                } else {
                    throw ValidationError("unknown content part type: " + type);
                }
            }
        } else {
            throw ValidationError("message content must be a string or part array");
        }
        request.messages.push_back(std::move(m));
    }
    validate_request(request);
    return request;
}

}  // namespace hazardkit::gateway
