// SPDX-License-Identifier: Apache-2.0
// Yes/no safety-rule compliance benchmark: manifest loading, the ten-prompt
// semantic ensemble with majority voting, and precision/recall/F1 reporting.
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hazardkit/gateway.hpp"

namespace hazardkit::rulevqa {

inline constexpr std::string_view kVqaTemplateVersion = "rulevqa-v1";

struct VqaSample {
    std::string sample_id;
    std::filesystem::path image_path;
    std::string rule_id;
    bool gold_violation = false;
};

struct SafetyRule {
    std::string rule_id;
    std::string rule_line;
};

// Rule 1 of the benchmark; the only rule evaluated here.
SafetyRule ppe_rule();

struct PromptSet {
    SafetyRule rule;
    std::array<std::string, 10> prompts;
};

// The ten semantically equivalent phrasings, each carrying the rule line
// exactly once and ending with a yes/no instruction.
PromptSet build_prompt_set(const SafetyRule& rule);

enum class Answer { yes, no, invalid };

struct AnswerOutcome {
    Answer value = Answer::invalid;
    std::string raw_text;
};

// Case-insensitive; a leading yes/no word decides, otherwise exactly one
// standalone yes/no in the text decides, otherwise invalid.
AnswerOutcome normalize_answer(std::string_view raw);

struct VoteResult {
    int yes_count = 0;
    int no_count = 0;
    int invalid_count = 0;
    bool decision = false;  // violation predicted
    bool tie_broken = false;
};

class AllInvalid : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Invalid outcomes are excluded from the tally. Ties predict violation
// (conservative direction) and are flagged. All-invalid is an error.
VoteResult majority_vote(const std::vector<AnswerOutcome>& outcomes);

struct Metrics {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

Metrics compute_metrics(long tp, long fp, long fn, long tn);

// Harmonic mean with the 0-when-degenerate convention; scale-invariant, so
// fractions in give fractions out and percents in give percents out.
double f1_score(double precision, double recall);

class ManifestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class MissingImage : public ManifestError {
  public:
    explicit MissingImage(const std::string& sample_id, const std::string& path)
        : ManifestError("sample " + sample_id + ": image missing or undecodable: " + path) {}
};
class DuplicateSample : public ManifestError {
  public:
    explicit DuplicateSample(const std::string& sample_id)
        : ManifestError("duplicate sample_id: " + sample_id) {}
};
class MalformedRow : public ManifestError {
  public:
    explicit MalformedRow(std::size_t line, const std::string& reason)
        : ManifestError("manifest line " + std::to_string(line) + ": " + reason) {}
};

// CSV rows: sample_id,image_path,rule_id,gold with gold in
// {yes,no,true,false,1,0}. Relative image paths resolve against the
// manifest's directory; every image must exist and decode.
std::vector<VqaSample> load_manifest(const std::filesystem::path& path);

enum class EvalMode { single, ensemble };

struct SampleResult {
    std::string sample_id;
    std::vector<AnswerOutcome> outcomes;  // one per issued prompt
    VoteResult vote;
    bool gold = false;
    bool invalid_single = false;  // lone invalid answer in single mode
    bool failed = false;
    std::string error;
};

struct EvalResult {
    std::vector<SampleResult> samples;  // manifest order
    Metrics metrics;                    // over non-failed samples
    long failed_count = 0;
};

// Single mode issues exactly one request per sample (prompt_index is
// 1-based); ensemble mode exactly ten. Violation is the positive class.
// Gateway errors mark a sample failed and excluded from the counts.
EvalResult evaluate(const std::vector<VqaSample>& samples, const SafetyRule& rule, EvalMode mode,
                    int prompt_index, gateway::Gateway& gateway,
                    const gateway::ChatParams& params, unsigned jobs = 1);

std::string results_to_jsonl(const EvalResult& result);

struct ReportRow {
    std::string name;
    double precision = 0.0;  // percent
    double recall = 0.0;     // percent
    std::optional<double> reported_f1;  // external value to cross-check
};

struct RenderedReport {
    std::string text;
    std::string csv;  // model,precision,recall,f1 (computed)
    std::vector<std::string> flags;
};

// F1 is always recomputed from the stored precision/recall; an external F1
// that differs from the computed one by >= 1 point is flagged.
RenderedReport report_table(const std::vector<ReportRow>& rows);

}  // namespace hazardkit::rulevqa
