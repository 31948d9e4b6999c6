// SPDX-License-Identifier: Apache-2.0
// Minimal HTML handling for report pages: anchor extraction and visible-text
// flattening. Tolerant of tag soup; no external parser.
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hazardkit::ingest {

struct Anchor {
    std::string href;
    std::string text;
};

// Decodes the common named entities plus numeric (&#NNN; / &#xHH;) forms.
std::string decode_entities(std::string_view text);

// All <a> elements in document order, with tag-stripped inner text.
std::vector<Anchor> extract_anchors(std::string_view html);

// Visible text: script/style and nav/header/footer chrome are dropped,
// block-level elements separated by newlines, entities decoded, whitespace
// collapsed.
std::string html_to_text(std::string_view html);

}  // namespace hazardkit::ingest
