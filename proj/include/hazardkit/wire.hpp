// SPDX-License-Identifier: Apache-2.0
// Chat-completions wire shape: messages array, images as base64 data URLs.
#pragma once

#include <nlohmann/json.hpp>

#include "hazardkit/chat.hpp"

namespace hazardkit::gateway {

// Request body for POST /v1/chat/completions: model, messages, temperature,
// max_tokens. A single-text-part message is encoded as a plain string
// content; anything else becomes a part array.
nlohmann::ordered_json to_wire_json(const ChatRequest& request);

// Inverse of to_wire_json; decodes data-URL image parts.
ChatRequest from_wire_json(const nlohmann::json& body);

}  // namespace hazardkit::gateway
