// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/fixture.hpp"

#include <nlohmann/json.hpp>

#include "hazardkit/util.hpp"

namespace hazardkit::gateway {

FixtureStore FixtureStore::load(const std::filesystem::path& path, bool must_exist) {
    FixtureStore store;
    if (!std::filesystem::exists(path)) {
        if (must_exist) {
            throw FixtureError("fixture file not found: " + path.string());
        }
        return store;
    }
    std::size_t line_no = 0;
    for (const std::string& line : util::read_lines(path)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("digest") ||
            !j.contains("response_text")) {
            throw FixtureError("malformed fixture line " + std::to_string(line_no) + " in " +
                               path.string());
        }
        FixtureEntry entry;
        entry.digest = j.at("digest").get<std::string>();
        entry.response_text = j.at("response_text").get<std::string>();
        entry.input_tokens = j.value("input_tokens", std::int64_t{0});
        entry.output_tokens = j.value("output_tokens", std::int64_t{0});
        store.entries_[entry.digest] = std::move(entry);
    }
    return store;
}

const FixtureEntry* FixtureStore::find(const std::string& digest) const {
    auto it = entries_.find(digest);
    return it == entries_.end() ? nullptr : &it->second;
}

void FixtureStore::append(const std::filesystem::path& path, const FixtureEntry& entry) {
    nlohmann::ordered_json j;
    j["digest"] = entry.digest;
    j["response_text"] = entry.response_text;
    j["input_tokens"] = entry.input_tokens;
    j["output_tokens"] = entry.output_tokens;
    util::append_line(path, j.dump());
}

}  // namespace hazardkit::gateway
