// SPDX-License-Identifier: Apache-2.0
// Stable content digest for chat requests; replay fixtures are keyed by it.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "hazardkit/chat.hpp"

namespace hazardkit::gateway {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Canonical form (version "chat-v1"), hashed with SHA-256:
//
//   chat-v1
//   model:<model_name>
//   temp:<shortest round-trip decimal>
//   m:<role>
//   t:<byte length>:<text bytes>
//   i:<png|jpeg>:<sha256 of image bytes>
//   ...
//
// Field order is fixed, so the digest is invariant under re-serialization
// and across platforms. max_output_tokens is deliberately not part of the
// key: replays should not miss because a token budget changed.
std::string request_digest(const ChatRequest& request);

}  // namespace hazardkit::gateway
