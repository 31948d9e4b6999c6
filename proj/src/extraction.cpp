// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/extraction.hpp"

#include <cctype>
#include <set>

#include "hazardkit/util.hpp"

namespace hazardkit::textpipe {

std::string to_string(Degree degree) {
    switch (degree) {
        case Degree::fatality: return "fatality";
        case Degree::hospitalized: return "hospitalized";
        case Degree::non_hospitalized: return "non-hospitalized";
        case Degree::unknown: return "unknown";
    }
    return "unknown";
}

std::string to_string(Sex sex) { return sex == Sex::male ? "M" : "F"; }

gateway::ChatRequest build_extraction_prompt(const ingest::AccidentReport& report,
                                             const taxonomy::Taxonomy& taxonomy,
                                             const gateway::ChatParams& params) {
    std::string prompt;
    prompt.reserve(4096 + report.raw_text.size());
    prompt +=
        "You are a construction safety analyst. Extract structured data from the "
        "inspection report below.\n\n"
        "Return exactly one JSON object and nothing else. Use these fields:\n"
        "- \"event_date\": date of the event, or null if not stated\n"
        "- \"site_address\": street address of the work site, or null\n"
        "- \"naics_code\": NAICS industry code digits, or null\n"
        "- \"age\": worker age in years, or null\n"
        "- \"sex\": \"M\" or \"F\", or null\n"
        "- \"occupation\": worker occupation, or null\n"
        "- \"degree_of_injury\": one of \"fatality\", \"hospitalized\", "
        "\"non-hospitalized\", \"unknown\"\n"
        "- \"scenario\": array of category numbers from the list below that describe "
        "the accident, [] if none apply\n"
        "- \"accident_cause\": one short sentence naming the cause, or null\n"
        "- \"investigation_summary\": brief summary of the investigation, or null\n\n"
        "Accident scenario categories:\n";
    for (const taxonomy::HazardCategory& c : taxonomy.categories()) {
        prompt += std::to_string(c.category_id);
        prompt += ". ";
        prompt += c.name;
        prompt += " (family: ";
        prompt += taxonomy.family(c.family_id).name;
        prompt += ")\n";
    }
    prompt += "\nReport:\n";
    prompt += report.raw_text;

    gateway::ChatRequest request;
    request.model_name = params.model_name;
    request.temperature = params.temperature;
    request.max_output_tokens = params.max_output_tokens;
    request.messages.push_back(gateway::Message::text(gateway::Role::user, std::move(prompt)));
    return request;
}

namespace {

// Strips one surrounding ``` fence (with optional language tag) if present.
std::string unwrap_fences(std::string_view raw) {
    std::string text = util::trim(raw);
    if (!text.starts_with("```")) {
        return text;
    }
    std::size_t first_newline = text.find('\n');
    if (first_newline == std::string::npos) {
        return text;
    }
    std::size_t closing = text.rfind("```");
    if (closing <= first_newline) {
        return text;
    }
    return util::trim(std::string_view(text).substr(first_newline + 1, closing - first_newline - 1));
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "report_id",  "event_date", "site_address",      "naics_code",
        "age",        "sex",        "occupation",        "degree_of_injury",
        "scenario",   "accident_scenario",               "accident_cause",
        "investigation_summary"};
    return keys;
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) {
        throw SchemaViolation(key, "expected a string");
    }
    std::string value = util::trim(j.at(key).get<std::string>());
    if (value.empty()) return std::nullopt;
    return value;
}

std::vector<int> parse_scenario_value(const nlohmann::json& value, const char* key) {
    std::vector<int> ids;
    if (value.is_null()) return ids;
    if (value.is_number_integer()) {
        ids.push_back(value.get<int>());
        return ids;
    }
    if (value.is_array()) {
        for (const auto& item : value) {
            if (!item.is_number_integer()) {
                throw SchemaViolation(key, "list entries must be integers");
            }
            ids.push_back(item.get<int>());
        }
        return ids;
    }
    throw SchemaViolation(key, "expected an integer or an array of integers");
}

}  // namespace

Degree normalize_degree(std::string_view text) {
    std::string t = util::to_lower(util::trim(text));
    for (char& c : t) {
        if (c == '_') c = '-';
    }
    if (t.find("fatal") != std::string::npos) return Degree::fatality;
    if (t.find("non-hospitalized") != std::string::npos ||
        t.find("non hospitalized") != std::string::npos ||
        t.find("nonhospitalized") != std::string::npos) {
        return Degree::non_hospitalized;
    }
    if (t.find("hospitalized") != std::string::npos) return Degree::hospitalized;
    return Degree::unknown;
}

std::optional<std::string> parse_event_date(std::string_view text) {
    std::string t = util::trim(text);
    auto is_digits = [](std::string_view s) {
        if (s.empty()) return false;
        for (char c : s) {
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        }
        return true;
    };
    int year = 0, month = 0, day = 0;
    if (t.size() == 10 && t[4] == '-' && t[7] == '-') {
        std::string y = t.substr(0, 4), m = t.substr(5, 2), d = t.substr(8, 2);
        if (!is_digits(y) || !is_digits(m) || !is_digits(d)) return std::nullopt;
        year = std::stoi(y);
        month = std::stoi(m);
        day = std::stoi(d);
    } else {
        std::vector<std::string> parts = util::split(t, '/');
        if (parts.size() != 3 || !is_digits(parts[0]) || !is_digits(parts[1]) ||
            !is_digits(parts[2]) || parts[2].size() != 4) {
            return std::nullopt;
        }
        month = std::stoi(parts[0]);
        day = std::stoi(parts[1]);
        year = std::stoi(parts[2]);
    }
    if (year < 1900 || year > 2100 || month < 1 || month > 12 || day < 1 || day > 31) {
        return std::nullopt;
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return std::string(buf);
}

ExtractionRecord parse_extraction_json(std::string_view raw, const taxonomy::Taxonomy& taxonomy,
                                       const std::string& fallback_report_id) {
    const std::string text = unwrap_fences(raw);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw NotJson("model output is not a JSON object");
    }

    for (const auto& [key, _] : j.items()) {
        if (!known_keys().contains(key)) {
            throw SchemaViolation(key, "unknown field");
        }
    }
    if (j.contains("scenario") && j.contains("accident_scenario")) {
        throw SchemaViolation("scenario", "both 'scenario' and 'accident_scenario' present");
    }

    ExtractionRecord record;
    record.report_id = j.contains("report_id") && j.at("report_id").is_string()
                           ? j.at("report_id").get<std::string>()
                           : fallback_report_id;
    if (record.report_id.empty()) {
        throw SchemaViolation("report_id", "missing and no fallback given");
    }

    if (auto date = optional_string(j, "event_date")) {
        auto normalized = parse_event_date(*date);
        if (!normalized) {
            throw SchemaViolation("event_date", "expected M/D/YYYY or YYYY-MM-DD: " + *date);
        }
        record.event_date = normalized;
    }
    record.site_address = optional_string(j, "site_address");

    if (j.contains("naics_code") && !j.at("naics_code").is_null()) {
        std::string code;
        if (j.at("naics_code").is_number_integer()) {
            code = std::to_string(j.at("naics_code").get<std::int64_t>());
        } else if (j.at("naics_code").is_string()) {
            code = util::trim(j.at("naics_code").get<std::string>());
        } else {
            throw SchemaViolation("naics_code", "expected digits");
        }
        if (!code.empty()) {
            for (char c : code) {
                if (!std::isdigit(static_cast<unsigned char>(c))) {
                    throw SchemaViolation("naics_code", "expected digits: " + code);
                }
            }
            record.naics_code = code;
        }
    }

    if (j.contains("age") && !j.at("age").is_null()) {
        int age = 0;
        if (j.at("age").is_number_integer()) {
            age = j.at("age").get<int>();
        } else if (j.at("age").is_string() &&
                   !util::trim(j.at("age").get<std::string>()).empty()) {
            std::string s = util::trim(j.at("age").get<std::string>());
            for (char c : s) {
                if (!std::isdigit(static_cast<unsigned char>(c))) {
                    throw SchemaViolation("age", "expected an integer: " + s);
                }
            }
            age = std::stoi(s);
        } else {
            throw SchemaViolation("age", "expected an integer");
        }
        if (age < 10 || age > 100) {
            throw SchemaViolation("age", "out of range [10, 100]: " + std::to_string(age));
        }
        record.age = age;
    }

    if (auto sex = optional_string(j, "sex")) {
        std::string s = util::to_lower(*sex);
        if (s == "m" || s == "male") {
            record.sex = Sex::male;
        } else if (s == "f" || s == "female") {
            record.sex = Sex::female;
        } else {
            throw SchemaViolation("sex", "expected M or F: " + *sex);
        }
    }

    record.occupation = optional_string(j, "occupation");

    if (j.contains("degree_of_injury") && !j.at("degree_of_injury").is_null()) {
        if (!j.at("degree_of_injury").is_string()) {
            throw SchemaViolation("degree_of_injury", "expected a string");
        }
        record.degree_of_injury = normalize_degree(j.at("degree_of_injury").get<std::string>());
    }

    const char* scenario_key = j.contains("accident_scenario") ? "accident_scenario" : "scenario";
    if (j.contains(scenario_key)) {
        record.scenario_ids =
            taxonomy.validate_ids(parse_scenario_value(j.at(scenario_key), scenario_key));
    }

    record.accident_cause = optional_string(j, "accident_cause");
    record.investigation_summary = optional_string(j, "investigation_summary");
    return record;
}

nlohmann::ordered_json record_to_json(const ExtractionRecord& record) {
    nlohmann::ordered_json j;
    j["report_id"] = record.report_id;
    j["event_date"] = record.event_date ? nlohmann::ordered_json(*record.event_date)
                                        : nlohmann::ordered_json(nullptr);
    j["site_address"] = record.site_address ? nlohmann::ordered_json(*record.site_address)
                                            : nlohmann::ordered_json(nullptr);
    j["naics_code"] = record.naics_code ? nlohmann::ordered_json(*record.naics_code)
                                        : nlohmann::ordered_json(nullptr);
    j["age"] = record.age ? nlohmann::ordered_json(*record.age) : nlohmann::ordered_json(nullptr);
    j["sex"] = record.sex ? nlohmann::ordered_json(to_string(*record.sex))
                          : nlohmann::ordered_json(nullptr);
    j["occupation"] = record.occupation ? nlohmann::ordered_json(*record.occupation)
                                        : nlohmann::ordered_json(nullptr);
    j["degree_of_injury"] = to_string(record.degree_of_injury);
    j["scenario"] = record.scenario_ids;
    j["accident_cause"] = record.accident_cause ? nlohmann::ordered_json(*record.accident_cause)
                                                : nlohmann::ordered_json(nullptr);
    j["investigation_summary"] = record.investigation_summary
                                     ? nlohmann::ordered_json(*record.investigation_summary)
                                     : nlohmann::ordered_json(nullptr);
    return j;
}

}  // namespace hazardkit::textpipe
