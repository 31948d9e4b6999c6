// SPDX-License-Identifier: Apache-2.0
// JSON-lines fixture store for the record/replay backend.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace hazardkit::gateway {

struct FixtureEntry {
    std::string digest;
    std::string response_text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

class FixtureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// One JSON object per line: {"digest","response_text","input_tokens",
// "output_tokens"}. Recording appends; on load, a later line for the same
// digest wins. Read-only after load.
class FixtureStore {
  public:
    static FixtureStore load(const std::filesystem::path& path, bool must_exist = true);

    const FixtureEntry* find(const std::string& digest) const;
    std::size_t size() const { return entries_.size(); }

    static void append(const std::filesystem::path& path, const FixtureEntry& entry);

  private:
    std::unordered_map<std::string, FixtureEntry> entries_;
};

}  // namespace hazardkit::gateway
