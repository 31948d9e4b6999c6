// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <stdexcept>

namespace hazardkit::gateway {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int md_len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &md_len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(md_len * 2);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

std::string canonical_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("cannot format temperature");
    }
    return std::string(buf.data(), ptr);
}

}  // namespace

std::string request_digest(const ChatRequest& request) {
    validate_request(request);
    std::string canon;
    canon.reserve(256);
    canon += "chat-v1\n";
    canon += "model:";
    canon += request.model_name;
    canon += "\ntemp:";
    canon += canonical_double(request.temperature);
    for (const Message& m : request.messages) {
        canon += "\nm:";
        canon += to_string(m.role);
        for (const Part& p : m.parts) {
            if (const auto* text = std::get_if<TextPart>(&p)) {
                canon += "\nt:";
                canon += std::to_string(text->text.size());
                canon += ":";
                canon += text->text;
            } else {
                const auto& img = std::get<ImagePart>(p);
                canon += "\ni:";
                canon += img.media == ImageMedia::png ? "png" : "jpeg";
                canon += ":";
                canon += sha256_hex(img.bytes);
            }
        }
    }
    return sha256_hex(canon);
}

}  // namespace hazardkit::gateway
