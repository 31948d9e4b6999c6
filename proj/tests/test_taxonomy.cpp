// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "hazardkit/taxonomy.hpp"
#include "hazardkit/util.hpp"
#include "test_support.hpp"

using namespace hazardkit;
using testsupport::TempDir;

TEST_CASE("built-in taxonomy has 9 families with the printed sizes") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    REQUIRE(tax.families().size() == 9);
    // Family sizes as printed, reading order: 5,5,5,5,4,5,5,4,4 -> 42 total.
    const std::map<int, int> expected_sizes = {{1, 5}, {2, 5}, {3, 5}, {4, 5}, {5, 4},
                                               {6, 5}, {7, 5}, {8, 4}, {9, 4}};
    std::map<int, int> sizes;
    for (const auto& c : tax.categories()) {
        sizes[c.family_id] += 1;
    }
    CHECK(sizes == expected_sizes);
    CHECK(tax.category_count() == 42);
}

TEST_CASE("family names match the table rows") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    CHECK(tax.family(1).name == "Fall");
    CHECK(tax.family(2).name == "Struck-by");
    CHECK(tax.family(3).name == "Caught-in/between");
    CHECK(tax.family(4).name == "Electrical");
    CHECK(tax.family(5).name == "Structure failures");
    CHECK(tax.family(6).name == "Vehicle and heavy equipment accidents");
    CHECK(tax.family(7).name == "Explosion and chemical exposure");
    CHECK(tax.family(8).name == "Confined space and oxygen deficiency");
    CHECK(tax.family(9).name == "Environmental & weather");
}

TEST_CASE("category 1 is Falls from roofs, in the Fall family") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    const taxonomy::HazardCategory& first = tax.resolve(1);
    CHECK(first.name == "Falls from roofs");
    CHECK(tax.family_of(1).name == "Fall");
    CHECK(tax.resolve(2).name == "Falls from ladders");
}

TEST_CASE("the Electrical family has exactly 5 categories including water hazards") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    std::vector<std::string> electrical;
    for (const auto& c : tax.categories()) {
        if (tax.family(c.family_id).name == "Electrical") {
            electrical.push_back(c.name);
        }
    }
    CHECK(electrical.size() == 5);
    CHECK(std::find(electrical.begin(), electrical.end(), "Water & electricity hazards") !=
          electrical.end());
}

TEST_CASE("ids and names are a bijection") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    std::set<int> ids;
    std::set<std::string> names;
    for (const auto& c : tax.categories()) {
        ids.insert(c.category_id);
        names.insert(c.name);
    }
    CHECK(ids.size() == tax.category_count());
    CHECK(names.size() == tax.category_count());
    CHECK(*ids.begin() == 1);
    CHECK(*ids.rbegin() == static_cast<int>(tax.category_count()));
}

TEST_CASE("reading order groups categories contiguously by family") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    int last_family = 0;
    for (const auto& c : tax.categories()) {  // already sorted by id
        CHECK(c.family_id >= last_family);
        last_family = c.family_id;
    }
    CHECK(last_family == 9);
}

TEST_CASE("resolve rejects out-of-range ids") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    CHECK_THROWS_AS(tax.resolve(0), taxonomy::UnknownCategory);
    CHECK_THROWS_AS(tax.resolve(static_cast<int>(tax.category_count()) + 1),
                    taxonomy::UnknownCategory);
    try {
        tax.resolve(44);
        FAIL("expected UnknownCategory");
    } catch (const taxonomy::UnknownCategory& e) {
        CHECK(e.id() == 44);  // carries the offending id
    }
}

TEST_CASE("validate_ids de-duplicates preserving first occurrence") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    CHECK(tax.validate_ids({7, 7, 2}) == std::vector<int>{7, 2});
    CHECK(tax.validate_ids({}) == std::vector<int>{});  // unclassifiable is valid
    CHECK_THROWS_AS(tax.validate_ids({44}), taxonomy::UnknownCategory);
    CHECK_THROWS_AS(tax.validate_ids({1, 0, 2}), taxonomy::UnknownCategory);
}

TEST_CASE("every category's family resolves") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    for (const auto& c : tax.categories()) {
        CHECK_NOTHROW(tax.family(c.family_id));
    }
}

TEST_CASE("a taxonomy override file of the same shape loads and validates") {
    TempDir dir("tax");
    taxonomy::Taxonomy builtin = taxonomy::Taxonomy::builtin();
    util::write_text_file_atomic(dir / "tax.json", builtin.to_json().dump(2));
    taxonomy::Taxonomy loaded = taxonomy::Taxonomy::from_file(dir / "tax.json");
    CHECK(loaded.category_count() == builtin.category_count());
    CHECK(loaded.resolve(8).name == builtin.resolve(8).name);

    SUBCASE("a patched table with an extra category is accepted") {
        nlohmann::json j = builtin.to_json();
        j["categories"].push_back({{"id", 43}, {"family_id", 9}, {"name", "Flooding"}});
        util::write_text_file_atomic(dir / "patched.json", j.dump());
        taxonomy::Taxonomy patched = taxonomy::Taxonomy::from_file(dir / "patched.json");
        CHECK(patched.category_count() == 43);
        CHECK(patched.resolve(43).name == "Flooding");
    }

    SUBCASE("non-contiguous ids are rejected") {
        nlohmann::json j = builtin.to_json();
        j["categories"][1]["id"] = 99;
        util::write_text_file_atomic(dir / "broken.json", j.dump());
        CHECK_THROWS_AS(taxonomy::Taxonomy::from_file(dir / "broken.json"),
                        taxonomy::TaxonomyError);
    }

    SUBCASE("a category pointing at a missing family is rejected") {
        nlohmann::json j = builtin.to_json();
        j["categories"][0]["family_id"] = 12;
        util::write_text_file_atomic(dir / "broken2.json", j.dump());
        CHECK_THROWS_AS(taxonomy::Taxonomy::from_file(dir / "broken2.json"),
                        taxonomy::TaxonomyError);
    }
}

TEST_CASE("struck-by swinging objects is category 8 under reading-order numbering") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    CHECK(tax.resolve(8).name == "Struck-by swinging objects");
    CHECK(tax.family_of(8).name == "Struck-by");
}
