// SPDX-License-Identifier: Apache-2.0
// Structured-extraction schema for accident reports: prompt construction,
// strict JSON parsing, and record (de)serialization.
#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hazardkit/chat.hpp"
#include "hazardkit/ingest.hpp"
#include "hazardkit/taxonomy.hpp"

namespace hazardkit::textpipe {

inline constexpr std::string_view kExtractTemplateVersion = "extract-v1";

enum class Degree { fatality, hospitalized, non_hospitalized, unknown };
enum class Sex { male, female };

std::string to_string(Degree degree);
std::string to_string(Sex sex);

struct ExtractionRecord {
    std::string report_id;
    std::optional<std::string> event_date;  // normalized YYYY-MM-DD
    std::optional<std::string> site_address;
    std::optional<std::string> naics_code;  // digits only
    std::optional<int> age;                 // 10..100
    std::optional<Sex> sex;
    std::optional<std::string> occupation;
    Degree degree_of_injury = Degree::unknown;
    std::vector<int> scenario_ids;  // validated, de-duplicated
    std::optional<std::string> accident_cause;
    std::optional<std::string> investigation_summary;

    bool operator==(const ExtractionRecord&) const = default;
};

class NotJson : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class SchemaViolation : public std::runtime_error {
  public:
    SchemaViolation(const std::string& field, const std::string& reason)
        : std::runtime_error("field '" + field + "': " + reason), field_(field) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

// Single user message carrying the field definitions, the numbered taxonomy,
// the report text (exactly once), and a JSON-only output instruction.
gateway::ChatRequest build_extraction_prompt(const ingest::AccidentReport& report,
                                             const taxonomy::Taxonomy& taxonomy,
                                             const gateway::ChatParams& params);

// Accepts a bare JSON object or one wrapped in a fenced code block. Unknown
// keys are rejected. Dates may be M/D/YYYY or YYYY-MM-DD. "scenario" may be
// an integer or an array (alias "accident_scenario"); ids are validated
// against the taxonomy. report_id falls back to the given value when the
// JSON does not carry one.
ExtractionRecord parse_extraction_json(std::string_view raw, const taxonomy::Taxonomy& taxonomy,
                                       const std::string& fallback_report_id = {});

nlohmann::ordered_json record_to_json(const ExtractionRecord& record);

// Normalizes free-text degree values; anything unrecognized is `unknown`.
Degree normalize_degree(std::string_view text);

// Returns the ISO form, or nullopt when the string matches neither format
// or encodes an impossible calendar date.
std::optional<std::string> parse_event_date(std::string_view text);

}  // namespace hazardkit::textpipe
