// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/html.hpp"

#include <array>
#include <cctype>

#include "hazardkit/util.hpp"

namespace hazardkit::ingest {

namespace {

bool is_block_tag(std::string_view tag) {
    static constexpr std::array<std::string_view, 18> kBlocks = {
        "p",  "div", "tr", "br", "li",    "h1",    "h2",    "h3",      "h4",
        "h5", "h6",  "ul", "ol", "table", "thead", "tbody", "section", "article"};
    for (std::string_view b : kBlocks) {
        if (tag == b) return true;
    }
    return false;
}

bool is_chrome_tag(std::string_view tag) {
    return tag == "script" || tag == "style" || tag == "nav" || tag == "header" ||
           tag == "footer";
}

// Tag name directly after '<' or '</'; lowercased, empty if not a tag.
std::string tag_name_at(std::string_view html, std::size_t pos, bool* closing) {
    *closing = false;
    std::size_t i = pos + 1;
    if (i < html.size() && html[i] == '/') {
        *closing = true;
        ++i;
    }
    std::string name;
    while (i < html.size() && (std::isalnum(static_cast<unsigned char>(html[i])) || html[i] == '!')) {
        name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(html[i]))));
        ++i;
    }
    return name;
}

}  // namespace

std::string decode_entities(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '&') {
            out.push_back(text[i++]);
            continue;
        }
        std::size_t semi = text.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back(text[i++]);
            continue;
        }
        std::string_view entity = text.substr(i + 1, semi - i - 1);
        if (entity == "amp") out.push_back('&');
        else if (entity == "lt") out.push_back('<');
        else if (entity == "gt") out.push_back('>');
        else if (entity == "quot") out.push_back('"');
        else if (entity == "apos" || entity == "#39") out.push_back('\'');
        else if (entity == "nbsp") out.push_back(' ');
        else if (entity.size() > 1 && entity[0] == '#') {
            long code = 0;
            bool ok = true;
            if (entity[1] == 'x' || entity[1] == 'X') {
                for (char c : entity.substr(2)) {
                    if (!std::isxdigit(static_cast<unsigned char>(c))) { ok = false; break; }
                    code = code * 16 + (std::isdigit(static_cast<unsigned char>(c))
                                            ? c - '0'
                                            : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
                }
            } else {
                for (char c : entity.substr(1)) {
                    if (!std::isdigit(static_cast<unsigned char>(c))) { ok = false; break; }
                    code = code * 10 + (c - '0');
                }
            }
            if (!ok || code <= 0 || code > 0x10FFFF) {
                out.push_back(text[i++]);
                continue;
            }
            // UTF-8 encode
            if (code < 0x80) {
                out.push_back(static_cast<char>(code));
            } else if (code < 0x800) {
                out.push_back(static_cast<char>(0xC0 | (code >> 6)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            } else if (code < 0x10000) {
                out.push_back(static_cast<char>(0xE0 | (code >> 12)));
                out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            } else {
                out.push_back(static_cast<char>(0xF0 | (code >> 18)));
                out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            }
        } else {
            out.push_back(text[i++]);
            continue;
        }
        i = semi + 1;
    }
    return out;
}

std::vector<Anchor> extract_anchors(std::string_view html) {
    std::vector<Anchor> anchors;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = html.find('<', pos);
        if (open == std::string_view::npos) break;
        bool closing = false;
        std::string name = tag_name_at(html, open, &closing);
        if (name != "a" || closing) {
            pos = open + 1;
            continue;
        }
        std::size_t tag_end = html.find('>', open);
        if (tag_end == std::string_view::npos) break;
        std::string_view attrs = html.substr(open, tag_end - open);

        Anchor anchor;
        std::size_t href = attrs.find("href");
        if (href != std::string_view::npos) {
            std::size_t eq = attrs.find('=', href);
            if (eq != std::string_view::npos) {
                std::size_t v = eq + 1;
                while (v < attrs.size() && std::isspace(static_cast<unsigned char>(attrs[v]))) ++v;
                if (v < attrs.size() && (attrs[v] == '"' || attrs[v] == '\'')) {
                    char quote = attrs[v];
                    std::size_t end = attrs.find(quote, v + 1);
                    if (end != std::string_view::npos) {
                        anchor.href = decode_entities(attrs.substr(v + 1, end - v - 1));
                    }
                } else {
                    std::size_t end = v;
                    while (end < attrs.size() &&
                           !std::isspace(static_cast<unsigned char>(attrs[end]))) {
                        ++end;
                    }
                    anchor.href = decode_entities(attrs.substr(v, end - v));
                }
            }
        }

        std::size_t close = html.find("</a", tag_end);
        if (close == std::string_view::npos) {
            close = html.size();
        }
        std::string inner(html.substr(tag_end + 1, close - tag_end - 1));
        std::string text;
        bool in_tag = false;
        for (char c : inner) {
            if (c == '<') in_tag = true;
            else if (c == '>') in_tag = false;
            else if (!in_tag) text.push_back(c);
        }
        anchor.text = util::trim(decode_entities(text));
        anchors.push_back(std::move(anchor));
        pos = close + 1;
    }
    return anchors;
}

std::string html_to_text(std::string_view html) {
    std::string raw;
    raw.reserve(html.size() / 2);
    std::size_t i = 0;
    int chrome_depth = 0;
    std::string chrome_tag;  // innermost skip container; script/style never nest
    while (i < html.size()) {
        if (html[i] == '<') {
            bool closing = false;
            std::string name = tag_name_at(html, i, &closing);
            std::size_t tag_end = html.find('>', i);
            if (tag_end == std::string_view::npos) break;
            if (name == "!") {  // comment or doctype
                if (html.compare(i, 4, "<!--") == 0) {
                    std::size_t end = html.find("-->", i);
                    i = end == std::string_view::npos ? html.size() : end + 3;
                    continue;
                }
                i = tag_end + 1;
                continue;
            }
            if (is_chrome_tag(name)) {
                if (!closing) {
                    if (chrome_depth == 0) chrome_tag = name;
                    if (name == chrome_tag) ++chrome_depth;
                } else if (chrome_depth > 0 && name == chrome_tag) {
                    --chrome_depth;
                }
            }
            if (chrome_depth == 0 && is_block_tag(name)) {
                raw.push_back('\n');
            }
            i = tag_end + 1;
            continue;
        }
        if (chrome_depth == 0) {
            raw.push_back(html[i]);
        }
        ++i;
    }

    // Collapse whitespace per line, drop runs of blank lines.
    std::string out;
    for (const std::string& line : util::split(decode_entities(raw), '\n')) {
        std::string collapsed;
        bool in_space = false;
        for (char c : line) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                in_space = true;
            } else {
                if (in_space && !collapsed.empty()) collapsed.push_back(' ');
                in_space = false;
                collapsed.push_back(c);
            }
        }
        if (!collapsed.empty()) {
            if (!out.empty()) out.push_back('\n');
            out += collapsed;
        }
    }
    return out;
}

}  // namespace hazardkit::ingest
