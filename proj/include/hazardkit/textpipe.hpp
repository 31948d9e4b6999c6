// SPDX-License-Identifier: Apache-2.0
// Extraction runs over a corpus, accuracy against gold labels, and frequency
// statistics over completed records.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hazardkit/corpus.hpp"
#include "hazardkit/extraction.hpp"
#include "hazardkit/gateway.hpp"

namespace hazardkit::textpipe {

struct GoldLabel {
    std::string report_id;
    std::vector<int> scenario_ids;
};

class InvalidGold : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ExtractionFailed : public std::runtime_error {
  public:
    ExtractionFailed(const std::string& report_id, const std::string& last_error)
        : std::runtime_error("extraction failed for " + report_id + ": " + last_error),
          report_id_(report_id) {}
    const std::string& report_id() const { return report_id_; }

  private:
    std::string report_id_;
};

struct ExtractOutcome {
    ExtractionRecord record;
    int retries = 0;        // 0 or 1; never more than 2 model calls
    std::string raw_text;   // final model answer as received
};

// Prompt, send, parse; one corrective retry that appends the parser's error
// to the prompt. Both attempts failing raises ExtractionFailed.
ExtractOutcome extract(const ingest::AccidentReport& report, const taxonomy::Taxonomy& taxonomy,
                       gateway::Gateway& gateway, const gateway::ChatParams& params);

struct ExtractRunResult {
    std::vector<ExtractionRecord> records;                      // report-id order
    std::vector<std::pair<std::string, std::string>> failures;  // id -> error
    bool aborted = false;
};

// Runs extract over every corpus report (sorted by id), persisting
// records.jsonl plus raw_responses/<id>.txt under out_dir.
ExtractRunResult extract_corpus(const ingest::CorpusStore& corpus,
                                const taxonomy::Taxonomy& taxonomy, gateway::Gateway& gateway,
                                const gateway::ChatParams& params,
                                const std::filesystem::path& out_dir, unsigned jobs = 1);

std::vector<ExtractionRecord> read_records_jsonl(const std::filesystem::path& path,
                                                 const taxonomy::Taxonomy& taxonomy);

// CSV rows: report_id,ids with ids separated by ';' (may be empty).
std::vector<GoldLabel> load_gold_csv(const std::filesystem::path& path,
                                     const taxonomy::Taxonomy& taxonomy);

// A record is correct iff its scenario-id set equals the gold set; gold ids
// without a record count as wrong. Duplicate or empty gold raises
// InvalidGold.
double evaluate_accuracy(const std::vector<ExtractionRecord>& records,
                         const std::vector<GoldLabel>& gold);

struct FrequencyStats {
    std::map<int, long> per_category;
    std::map<int, long> per_family;
    std::map<int, long> per_year;
    long unknown_year = 0;
    long total_reports = 0;
};

// Label-level counting: a record with two labels in one family bumps that
// family twice. Records without an event date land in the unknown bucket.
FrequencyStats frequency_stats(const std::vector<ExtractionRecord>& records,
                               const taxonomy::Taxonomy& taxonomy);

// CSV columns: category_id,family,name,count (all categories, zeros kept).
std::string stats_to_csv(const FrequencyStats& stats, const taxonomy::Taxonomy& taxonomy);
nlohmann::ordered_json stats_to_json(const FrequencyStats& stats,
                                     const taxonomy::Taxonomy& taxonomy);

}  // namespace hazardkit::textpipe
