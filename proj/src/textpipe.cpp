// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/textpipe.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hazardkit/util.hpp"

namespace hazardkit::textpipe {

ExtractOutcome extract(const ingest::AccidentReport& report, const taxonomy::Taxonomy& taxonomy,
                       gateway::Gateway& gateway, const gateway::ChatParams& params) {
    gateway::ChatRequest request = build_extraction_prompt(report, taxonomy, params);
    const std::string first = gateway.send_chat(request).text;
    std::string parse_error;
    try {
        ExtractionRecord record = parse_extraction_json(first, taxonomy, report.inspection_id);
        return {std::move(record), 0, first};
    } catch (const NotJson& e) {
        parse_error = e.what();
    } catch (const SchemaViolation& e) {
        parse_error = e.what();
    } catch (const taxonomy::UnknownCategory& e) {
        parse_error = e.what();
    }

    gateway::ChatRequest retry = request;
    auto& text_part = std::get<gateway::TextPart>(retry.messages.back().parts.front());
    text_part.text += "\n\nYour previous answer could not be parsed (" + parse_error +
                      "). Answer again with exactly one valid JSON object and nothing else.";
    const std::string second = gateway.send_chat(retry).text;
    try {
        ExtractionRecord record = parse_extraction_json(second, taxonomy, report.inspection_id);
        return {std::move(record), 1, second};
    } catch (const std::exception& e) {
        throw ExtractionFailed(report.inspection_id, e.what());
    }
}

ExtractRunResult extract_corpus(const ingest::CorpusStore& corpus,
                                const taxonomy::Taxonomy& taxonomy, gateway::Gateway& gateway,
                                const gateway::ChatParams& params,
                                const std::filesystem::path& out_dir, unsigned jobs) {
    const std::vector<std::string> ids = corpus.list();
    std::vector<std::optional<ExtractionRecord>> records(ids.size());
    std::vector<std::optional<std::string>> errors(ids.size());
    ExtractRunResult result;

    std::filesystem::create_directories(out_dir / "raw_responses");
    util::parallel_for(ids.size(), jobs, [&](std::size_t i) {
        if (util::abort_flag().load()) return;
        const ingest::AccidentReport report = corpus.get(ids[i]);
        try {
            ExtractOutcome outcome = extract(report, taxonomy, gateway, params);
            util::write_text_file_atomic(
                out_dir / "raw_responses" / (util::sanitize_for_filename(ids[i]) + ".txt"),
                outcome.raw_text);
            records[i] = std::move(outcome.record);
        } catch (const ExtractionFailed& e) {
            errors[i] = e.what();
        }
    });

    std::string jsonl;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (records[i]) {
            jsonl += record_to_json(*records[i]).dump();
            jsonl += '\n';
            result.records.push_back(std::move(*records[i]));
        } else if (errors[i]) {
            result.failures.emplace_back(ids[i], *errors[i]);
        }
    }
    util::write_text_file_atomic(out_dir / "records.jsonl", jsonl);
    result.aborted = util::abort_flag().load();
    return result;
}

std::vector<ExtractionRecord> read_records_jsonl(const std::filesystem::path& path,
                                                 const taxonomy::Taxonomy& taxonomy) {
    std::vector<ExtractionRecord> records;
    for (const std::string& line : util::read_lines(path)) {
        if (util::trim(line).empty()) continue;
        records.push_back(parse_extraction_json(line, taxonomy));
    }
    return records;
}

std::vector<GoldLabel> load_gold_csv(const std::filesystem::path& path,
                                     const taxonomy::Taxonomy& taxonomy) {
    std::vector<GoldLabel> gold;
    std::size_t line_no = 0;
    for (const std::string& line : util::read_lines(path)) {
        ++line_no;
        std::string trimmed = util::trim(line);
        if (trimmed.empty()) continue;
        if (line_no == 1 && util::starts_with_ci(trimmed, "report_id")) continue;  // header
        std::size_t comma = trimmed.find(',');
        if (comma == std::string::npos) {
            throw InvalidGold("gold row " + std::to_string(line_no) + " has no id column");
        }
        GoldLabel label;
        label.report_id = util::trim(trimmed.substr(0, comma));
        std::vector<int> ids;
        for (const std::string& tok : util::split(trimmed.substr(comma + 1), ';')) {
            std::string t = util::trim(tok);
            if (t.empty()) continue;
            ids.push_back(std::stoi(t));
        }
        label.scenario_ids = taxonomy.validate_ids(ids);
        gold.push_back(std::move(label));
    }
    return gold;
}

double evaluate_accuracy(const std::vector<ExtractionRecord>& records,
                         const std::vector<GoldLabel>& gold) {
    if (gold.empty()) {
        throw InvalidGold("gold set is empty; accuracy undefined");
    }
    std::map<std::string, std::set<int>> by_id;
    for (const ExtractionRecord& r : records) {
        by_id[r.report_id] = std::set<int>(r.scenario_ids.begin(), r.scenario_ids.end());
    }
    std::set<std::string> seen;
    long correct = 0;
    for (const GoldLabel& g : gold) {
        if (!seen.insert(g.report_id).second) {
            throw InvalidGold("duplicate gold report_id: " + g.report_id);
        }
        auto it = by_id.find(g.report_id);
        if (it == by_id.end()) continue;  // missing record counts wrong
        if (it->second == std::set<int>(g.scenario_ids.begin(), g.scenario_ids.end())) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

FrequencyStats frequency_stats(const std::vector<ExtractionRecord>& records,
                               const taxonomy::Taxonomy& taxonomy) {
    FrequencyStats stats;
    for (const taxonomy::HazardCategory& c : taxonomy.categories()) {
        stats.per_category[c.category_id] = 0;
    }
    for (const taxonomy::HazardFamily& f : taxonomy.families()) {
        stats.per_family[f.family_id] = 0;
    }
    stats.total_reports = static_cast<long>(records.size());
    for (const ExtractionRecord& r : records) {
        for (int id : r.scenario_ids) {
            ++stats.per_category[id];
            ++stats.per_family[taxonomy.resolve(id).family_id];
        }
        if (r.event_date) {
            stats.per_year[std::stoi(r.event_date->substr(0, 4))] += 1;
        } else {
            ++stats.unknown_year;
        }
    }
    return stats;
}

std::string stats_to_csv(const FrequencyStats& stats, const taxonomy::Taxonomy& taxonomy) {
    std::ostringstream out;
    out << "category_id,family,name,count\n";
    for (const taxonomy::HazardCategory& c : taxonomy.categories()) {
        long count = 0;
        if (auto it = stats.per_category.find(c.category_id); it != stats.per_category.end()) {
            count = it->second;
        }
        out << c.category_id << ",\"" << taxonomy.family(c.family_id).name << "\",\"" << c.name
            << "\"," << count << "\n";
    }
    return out.str();
}

nlohmann::ordered_json stats_to_json(const FrequencyStats& stats,
                                     const taxonomy::Taxonomy& taxonomy) {
    nlohmann::ordered_json j;
    j["total_reports"] = stats.total_reports;
    j["per_category"] = nlohmann::ordered_json::object();
    for (const auto& [id, count] : stats.per_category) {
        j["per_category"][std::to_string(id)] = {{"name", taxonomy.resolve(id).name},
                                                 {"count", count}};
    }
    j["per_family"] = nlohmann::ordered_json::object();
    for (const auto& [id, count] : stats.per_family) {
        j["per_family"][std::to_string(id)] = {{"name", taxonomy.family(id).name},
                                               {"count", count}};
    }
    j["per_year"] = nlohmann::ordered_json::object();
    for (const auto& [year, count] : stats.per_year) {
        j["per_year"][std::to_string(year)] = count;
    }
    j["per_year"]["unknown"] = stats.unknown_year;
    return j;
}

}  // namespace hazardkit::textpipe
