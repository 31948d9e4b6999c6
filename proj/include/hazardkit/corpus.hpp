// SPDX-License-Identifier: Apache-2.0
// Disk-backed report corpus: one JSON document per report plus an index.
#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazardkit/ingest.hpp"

namespace hazardkit::ingest {

class NotFound : public std::runtime_error {
  public:
    explicit NotFound(const std::string& id)
        : std::runtime_error("no report stored for inspection id " + id) {}
};

class CorpusError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Layout: <root>/index.json and <root>/reports/<id>.json. Writes are
// write-temp-then-rename; put is idempotent per inspection id (last write
// wins). Single writer, any number of readers.
class CorpusStore {
  public:
    static CorpusStore open(const std::filesystem::path& root);

    void put(const AccidentReport& report);
    AccidentReport get(const std::string& inspection_id) const;
    std::vector<std::string> list() const;  // lexicographically sorted

    const std::filesystem::path& root() const { return root_; }
    std::size_t size() const { return index_.size(); }

  private:
    std::filesystem::path root_;
    std::map<std::string, std::string> index_;  // inspection_id -> relative path
};

}  // namespace hazardkit::ingest
