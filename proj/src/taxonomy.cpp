// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/taxonomy.hpp"

#include <set>

#include "hazardkit/util.hpp"

namespace hazardkit::taxonomy {

namespace {

struct FamilyRow {
    const char* name;
    std::vector<const char*> categories;
};

// Reading order: top family to bottom, left to right within a row.
const std::vector<FamilyRow>& builtin_rows() {
    static const std::vector<FamilyRow> rows = {
        {"Fall",
         {"Falls from roofs", "Falls from ladders", "Falls from scaffolding",
          "Falls through openings & weak surfaces", "Falls from elevated equipment"}},
        {"Struck-by",
         {"Struck-by falling objects", "Struck-by moving vehicles & equipment",
          "Struck-by swinging objects", "Struck-by flying objects",
          "Struck-by collapsing structures"}},
        {"Caught-in/between",
         {"Trench & excavation collapses", "Caught-in machinery & equipment",
          "Caught between heavy equipment & fixed objects", "Structure collapse entrapment",
          "Caught under overturned equipment"}},
        {"Electrical",
         {"Contact with overhead power lines", "Direct contact with energized electrical equipment",
          "Electrical explosions & arc flash", "Improper grounding & faulty wiring",
          "Water & electricity hazards"}},
        {"Structure failures",
         {"Scaffold collapse", "Building or roof collapse", "Excavation or tunnel collapse",
          "Bridge or crane failure"}},
        {"Vehicle and heavy equipment accidents",
         {"Forklift & equipment tip-overs", "Cranes & boom equipment failures",
          "Vehicle backing accidents", "Run-over by construction vehicles",
          "Struck in work zone traffic"}},
        {"Explosion and chemical exposure",
         {"Gas leaks leading to explosions", "Flammable liquids or vapors igniting",
          "Chemical spills & hazardous material exposure", "Oxygen deficiency in confined spaces",
          "Hot work accidents (welding, cutting, grinding)"}},
        {"Confined space and oxygen deficiency",
         {"Toxic gas exposure", "Entrapment in confined spaces",
          "Suffocation due to lack of oxygen", "Explosion risks in confined spaces"}},
        {"Environmental & weather",
         {"Heat stress & heat stroke", "Cold stress & hypothermia", "Lightning strikes",
          "Wind-related accidents"}},
    };
    return rows;
}

}  // namespace

Taxonomy Taxonomy::builtin() {
    Taxonomy t;
    int family_id = 0;
    int category_id = 0;
    for (const FamilyRow& row : builtin_rows()) {
        ++family_id;
        t.families_.push_back({family_id, row.name});
        for (const char* name : row.categories) {
            ++category_id;
            t.categories_.push_back({category_id, family_id, name});
        }
    }
    t.build_lookups();
    return t;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& j) {
    Taxonomy t;
    for (const auto& f : j.at("families")) {
        t.families_.push_back({f.at("id").get<int>(), f.at("name").get<std::string>()});
    }
    for (const auto& c : j.at("categories")) {
        t.categories_.push_back({c.at("id").get<int>(), c.at("family_id").get<int>(),
                                 c.at("name").get<std::string>()});
    }
    t.build_lookups();
    return t;
}

Taxonomy Taxonomy::from_file(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(util::read_text_file(path)));
}

nlohmann::ordered_json Taxonomy::to_json() const {
    nlohmann::ordered_json j;
    j["families"] = nlohmann::ordered_json::array();
    for (const HazardFamily& f : families_) {
        j["families"].push_back({{"id", f.family_id}, {"name", f.name}});
    }
    j["categories"] = nlohmann::ordered_json::array();
    for (const HazardCategory& c : categories_) {
        j["categories"].push_back(
            {{"id", c.category_id}, {"family_id", c.family_id}, {"name", c.name}});
    }
    return j;
}

void Taxonomy::build_lookups() {
    if (families_.empty() || categories_.empty()) {
        throw TaxonomyError("taxonomy must define families and categories");
    }
    std::set<std::string> family_names;
    for (std::size_t i = 0; i < families_.size(); ++i) {
        const HazardFamily& f = families_[i];
        if (f.family_id != static_cast<int>(i) + 1) {
            throw TaxonomyError("family ids must be contiguous from 1");
        }
        if (f.name.empty() || !family_names.insert(f.name).second) {
            throw TaxonomyError("family names must be unique and non-empty");
        }
        family_index_[f.family_id] = i;
    }
    std::set<std::string> category_names;
    int last_family = 0;
    for (std::size_t i = 0; i < categories_.size(); ++i) {
        const HazardCategory& c = categories_[i];
        if (c.category_id != static_cast<int>(i) + 1) {
            throw TaxonomyError("category ids must be contiguous from 1");
        }
        if (!family_index_.contains(c.family_id)) {
            throw TaxonomyError("category " + std::to_string(c.category_id) +
                                " references unknown family " + std::to_string(c.family_id));
        }
        if (c.family_id < last_family) {
            throw TaxonomyError("categories must be grouped by family in reading order");
        }
        last_family = c.family_id;
        if (c.name.empty() || !category_names.insert(c.name).second) {
            throw TaxonomyError("category names must be unique and non-empty");
        }
        category_index_[c.category_id] = i;
    }
}

const HazardCategory& Taxonomy::resolve(int category_id) const {
    auto it = category_index_.find(category_id);
    if (it == category_index_.end()) {
        throw UnknownCategory(category_id);
    }
    return categories_[it->second];
}

const HazardFamily& Taxonomy::family(int family_id) const {
    auto it = family_index_.find(family_id);
    if (it == family_index_.end()) {
        throw TaxonomyError("unknown family id " + std::to_string(family_id));
    }
    return families_[it->second];
}

const HazardFamily& Taxonomy::family_of(int category_id) const {
    return family(resolve(category_id).family_id);
}

std::vector<int> Taxonomy::validate_ids(const std::vector<int>& ids) const {
    std::vector<int> out;
    for (int id : ids) {
        resolve(id);
        if (std::find(out.begin(), out.end(), id) == out.end()) {
            out.push_back(id);
        }
    }
    return out;
}

}  // namespace hazardkit::taxonomy
