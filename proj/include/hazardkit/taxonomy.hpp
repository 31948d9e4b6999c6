// SPDX-License-Identifier: Apache-2.0
// The nine-family incident taxonomy with stable numeric category ids.
#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace hazardkit::taxonomy {

struct HazardFamily {
    int family_id = 0;  // 1..9
    std::string name;
};

struct HazardCategory {
    int category_id = 0;  // contiguous from 1, reading order
    int family_id = 0;
    std::string name;
};

class UnknownCategory : public std::runtime_error {
  public:
    explicit UnknownCategory(int id)
        : std::runtime_error("unknown category id " + std::to_string(id)), id_(id) {}
    int id() const { return id_; }

  private:
    int id_ = 0;
};

class TaxonomyError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class Taxonomy {
  public:
    // The built-in table: 9 families, 42 categories.
    static Taxonomy builtin();

    // Override file of the same shape as to_json(); validated on load so a
    // patched table (e.g. an extra category) can ship without code changes.
    static Taxonomy from_json(const nlohmann::json& j);
    static Taxonomy from_file(const std::filesystem::path& path);

    nlohmann::ordered_json to_json() const;

    const std::vector<HazardFamily>& families() const { return families_; }
    const std::vector<HazardCategory>& categories() const { return categories_; }

    const HazardCategory& resolve(int category_id) const;  // throws UnknownCategory
    const HazardFamily& family(int family_id) const;       // throws TaxonomyError
    const HazardFamily& family_of(int category_id) const;

    // De-duplicates preserving first occurrence; throws UnknownCategory on
    // the first invalid id. An empty list is valid (unclassifiable report).
    std::vector<int> validate_ids(const std::vector<int>& ids) const;

    std::size_t category_count() const { return categories_.size(); }

  private:
    void build_lookups();  // validates invariants, throws TaxonomyError

    std::vector<HazardFamily> families_;
    std::vector<HazardCategory> categories_;
    std::unordered_map<int, std::size_t> category_index_;
    std::unordered_map<int, std::size_t> family_index_;
};

}  // namespace hazardkit::taxonomy
