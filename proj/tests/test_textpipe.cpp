// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "hazardkit/digest.hpp"
#include "hazardkit/textpipe.hpp"
#include "hazardkit/util.hpp"
#include "test_support.hpp"

using namespace hazardkit;
using testsupport::TempDir;

namespace {

ingest::AccidentReport sample_report(const std::string& id = "1433331.015") {
    ingest::AccidentReport report;
    report.inspection_id = id;
    report.detail_url = "http://osha.test/detail?id=" + id;
    report.raw_text =
        "At 11:00 a.m. on September 12, 2019, an employee was dismantling a motor pack "
        "when it fell and crushed the employee, resulting in hospitalization.";
    report.fetched_at = "2026-08-10T12:00:00Z";
    return report;
}

gateway::ChatParams params() { return {"test-model", 0.0, 1024}; }

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string prompt_text(const gateway::ChatRequest& request) {
    return std::get<gateway::TextPart>(request.messages.at(0).parts.at(0)).text;
}

const std::string kTable3Json = R"({
  "report_id": "OSHA_Inspection_Report_1433331.015",
  "event_date": "9/12/2019",
  "site_address": "3170 SW Coral Way, Miami, FL 33135",
  "naics_code": "238290",
  "age": 50,
  "sex": "M",
  "occupation": "Assemblers",
  "degree_of_injury": "Hospitalized injury",
  "scenario": 7,
  "accident_cause": "Motor pack fell and crushed the employee",
  "investigation_summary": "At 11:00 a.m. on September 12, 2019, an employee was dismantling a motor pack when it fell and crushed the employee, resulting in hospitalization."
})";

// Serves a fixed sequence of answer texts, ignoring request content.
class SequenceServer {
  public:
    explicit SequenceServer(std::vector<std::string> answers) : answers_(std::move(answers)) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         const std::size_t n = calls_.fetch_add(1);
                         {
                             std::lock_guard<std::mutex> lock(mutex_);
                             bodies_.push_back(req.body);
                         }
                         const std::string& content =
                             answers_[std::min(n, answers_.size() - 1)];
                         nlohmann::json body = {
                             {"choices",
                              {{{"message", {{"role", "assistant"}, {"content", content}}},
                                {"finish_reason", "stop"}}}},
                             {"usage", {{"prompt_tokens", 900}, {"completion_tokens", 150}}}};
                         res.set_content(body.dump(), "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this]() { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~SequenceServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int calls() const { return static_cast<int>(calls_.load()); }
    std::string body(std::size_t i) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return bodies_.at(i);
    }

  private:
    std::vector<std::string> answers_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex mutex_;
    std::vector<std::string> bodies_;
};

}  // namespace

TEST_CASE("extraction prompt carries the report once, the schema, and 42 categories") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    ingest::AccidentReport report = sample_report();
    gateway::ChatRequest request = textpipe::build_extraction_prompt(report, tax, params());

    REQUIRE(request.messages.size() == 1);
    CHECK(request.messages[0].role == gateway::Role::user);
    const std::string prompt = prompt_text(request);

    CHECK(count_occurrences(prompt, report.raw_text) == 1);

    // one numbered line per category
    std::size_t numbered = 0;
    for (const std::string& line : util::split(prompt, '\n')) {
        std::size_t i = 0;
        while (i < line.size() && isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i > 0 && line.compare(i, 2, ". ") == 0) ++numbered;
    }
    CHECK(numbered == tax.category_count());
    CHECK(prompt.find("42. Wind-related accidents") != std::string::npos);

    // schema field names appear verbatim
    for (const char* field :
         {"event_date", "site_address", "naics_code", "age", "sex", "occupation",
          "degree_of_injury", "scenario", "accident_cause", "investigation_summary"}) {
        CHECK(prompt.find(field) != std::string::npos);
    }
    CHECK(prompt.find("JSON") != std::string::npos);
}

TEST_CASE("the Table-3-shaped answer parses into a normalized record") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    textpipe::ExtractionRecord record = textpipe::parse_extraction_json(kTable3Json, tax);
    CHECK(record.report_id == "OSHA_Inspection_Report_1433331.015");
    CHECK(record.event_date == "2019-09-12");
    CHECK(record.site_address == "3170 SW Coral Way, Miami, FL 33135");
    CHECK(record.naics_code == "238290");
    CHECK(record.age == 50);
    CHECK(record.sex == textpipe::Sex::male);
    CHECK(record.occupation == "Assemblers");
    CHECK(record.degree_of_injury == textpipe::Degree::hospitalized);
    CHECK(record.scenario_ids == std::vector<int>{7});
    CHECK(record.accident_cause == "Motor pack fell and crushed the employee");
}

TEST_CASE("fenced JSON answers are accepted") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    const std::string fenced = "```json\n{\"scenario\": [1, 2], \"age\": 33}\n```";
    textpipe::ExtractionRecord record = textpipe::parse_extraction_json(fenced, tax, "R1");
    CHECK(record.report_id == "R1");
    CHECK(record.scenario_ids == std::vector<int>{1, 2});
    CHECK(record.age == 33);
}

TEST_CASE("scenario accepts a bare integer, an array, or the alias key") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    CHECK(textpipe::parse_extraction_json(R"({"scenario": 7})", tax, "R").scenario_ids ==
          std::vector<int>{7});
    CHECK(textpipe::parse_extraction_json(R"({"scenario": [7, 7, 2]})", tax, "R").scenario_ids ==
          std::vector<int>{7, 2});
    CHECK(textpipe::parse_extraction_json(R"({"accident_scenario": 9})", tax, "R").scenario_ids ==
          std::vector<int>{9});
    CHECK(textpipe::parse_extraction_json(R"({"scenario": []})", tax, "R").scenario_ids.empty());
}

TEST_CASE("date normalization accepts both documented formats") {
    CHECK(textpipe::parse_event_date("9/12/2019") == "2019-09-12");
    CHECK(textpipe::parse_event_date("12/3/2001") == "2001-12-03");
    CHECK(textpipe::parse_event_date("2019-09-12") == "2019-09-12");
    CHECK_FALSE(textpipe::parse_event_date("13/45/2019").has_value());
    CHECK_FALSE(textpipe::parse_event_date("September 12").has_value());
    CHECK_FALSE(textpipe::parse_event_date("2019/09/12").has_value());
}

TEST_CASE("degree normalization table") {
    CHECK(textpipe::normalize_degree("Hospitalized injury") == textpipe::Degree::hospitalized);
    CHECK(textpipe::normalize_degree("HOSPITALIZED") == textpipe::Degree::hospitalized);
    CHECK(textpipe::normalize_degree("Fatality") == textpipe::Degree::fatality);
    CHECK(textpipe::normalize_degree("Fatal") == textpipe::Degree::fatality);
    CHECK(textpipe::normalize_degree("Non-hospitalized injury") ==
          textpipe::Degree::non_hospitalized);
    CHECK(textpipe::normalize_degree("non hospitalized") == textpipe::Degree::non_hospitalized);
    CHECK(textpipe::normalize_degree("minor bruises") == textpipe::Degree::unknown);
    CHECK(textpipe::normalize_degree("") == textpipe::Degree::unknown);
}

TEST_CASE("malformed model outputs raise their specific documented errors") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    auto parse = [&](const std::string& raw) {
        return textpipe::parse_extraction_json(raw, tax, "R1");
    };
    auto violated_field = [&](const std::string& raw) -> std::string {
        try {
            parse(raw);
        } catch (const textpipe::SchemaViolation& e) {
            return e.field();
        }
        return "<no violation>";
    };

    // prose and non-JSON shapes
    CHECK_THROWS_AS(parse("I cannot extract the requested fields."), textpipe::NotJson);
    CHECK_THROWS_AS(parse("```\nnot json at all\n```"), textpipe::NotJson);
    CHECK_THROWS_AS(parse(R"({"event_date": "9/12/2019")"), textpipe::NotJson);  // truncated
    CHECK_THROWS_AS(parse("[1, 2, 3]"), textpipe::NotJson);
    CHECK_THROWS_AS(parse("\"just a string\""), textpipe::NotJson);

    // unknown keys are rejected, never silently dropped
    CHECK(violated_field(R"({"favorite_color": "red"})") == "favorite_color");
    CHECK(violated_field(R"({"scenario": 1, "accident_scenario": 2})") == "scenario");

    // out-of-range and mistyped values
    CHECK(violated_field(R"({"age": 250})") == "age");
    CHECK(violated_field(R"({"age": 5})") == "age");
    CHECK(violated_field(R"({"age": "fifty"})") == "age");
    CHECK(violated_field(R"({"sex": "X"})") == "sex");
    CHECK(violated_field(R"({"naics_code": "ABC123"})") == "naics_code");
    CHECK(violated_field(R"({"event_date": "13/45/2019"})") == "event_date");
    CHECK(violated_field(R"({"degree_of_injury": 42})") == "degree_of_injury");
    CHECK(violated_field(R"({"scenario": "seven"})") == "scenario");
    CHECK(violated_field(R"({"scenario": [1, "two"]})") == "scenario");

    // unknown taxonomy ids surface as UnknownCategory with the offending id
    try {
        parse(R"({"scenario": 99})");
        FAIL("expected UnknownCategory");
    } catch (const taxonomy::UnknownCategory& e) {
        CHECK(e.id() == 99);
    }
}

TEST_CASE("serialize-then-parse is the identity on valid records") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    std::mt19937 rng(321);
    for (int trial = 0; trial < 100; ++trial) {
        textpipe::ExtractionRecord record;
        record.report_id = "R" + std::to_string(trial);
        if (rng() % 2) record.event_date = "2019-09-12";
        if (rng() % 2) record.site_address = "Main St " + std::to_string(rng() % 100);
        if (rng() % 2) record.naics_code = "238290";
        if (rng() % 2) record.age = 18 + static_cast<int>(rng() % 60);
        if (rng() % 2) record.sex = rng() % 2 ? textpipe::Sex::male : textpipe::Sex::female;
        if (rng() % 2) record.occupation = "Roofer";
        record.degree_of_injury = static_cast<textpipe::Degree>(rng() % 4);
        std::size_t labels = rng() % 4;
        std::vector<int> ids;
        for (std::size_t k = 0; k < labels; ++k) ids.push_back(1 + static_cast<int>(rng() % 42));
        record.scenario_ids = tax.validate_ids(ids);
        if (rng() % 2) record.accident_cause = "cause";
        if (rng() % 2) record.investigation_summary = "summary";

        const std::string serialized = textpipe::record_to_json(record).dump();
        textpipe::ExtractionRecord parsed = textpipe::parse_extraction_json(serialized, tax);
        CHECK(parsed == record);
    }
}

TEST_CASE("extract happy path via replay fixture, no retry") {
    TempDir dir("tp_extract");
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    ingest::AccidentReport report = sample_report();
    gateway::ChatRequest request = textpipe::build_extraction_prompt(report, tax, params());
    gateway::FixtureStore::append(dir / "f.jsonl",
                                  {gateway::request_digest(request), kTable3Json, 900, 150});

    gateway::Gateway gw(gateway::ReplayBackend{dir / "f.jsonl", true}, {}, 6000);
    textpipe::ExtractOutcome outcome = textpipe::extract(report, tax, gw, params());
    CHECK(outcome.retries == 0);
    CHECK(outcome.record.scenario_ids == std::vector<int>{7});
    CHECK(outcome.record.report_id == "OSHA_Inspection_Report_1433331.015");
}

TEST_CASE("extract retries once with the parse error appended, then succeeds") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    SequenceServer server({"The report describes a crushed worker.",  // prose, unparsable
                           "{\"scenario\": [11], \"age\": 41}"});
    gateway::Gateway gw(gateway::LiveBackend{server.url()},
                        gateway::RetryPolicy{5, std::chrono::milliseconds(1), 2.0}, 6000);
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    ingest::AccidentReport report = sample_report("55");
    textpipe::ExtractOutcome outcome = textpipe::extract(report, tax, gw, params());
    CHECK(outcome.retries == 1);
    CHECK(outcome.record.report_id == "55");
    CHECK(outcome.record.scenario_ids == std::vector<int>{11});
    CHECK(server.calls() == 2);  // never more than 2 model calls per report

    // the corrective prompt carries the parser's complaint
    nlohmann::json second = nlohmann::json::parse(server.body(1));
    const std::string retry_prompt = second.at("messages")[0].at("content");
    CHECK(retry_prompt.find("could not be parsed") != std::string::npos);
    CHECK(retry_prompt.find("not a JSON object") != std::string::npos);
}

TEST_CASE("two unparsable answers raise ExtractionFailed") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    SequenceServer server({"no json here", "still prose"});
    gateway::Gateway gw(gateway::LiveBackend{server.url()},
                        gateway::RetryPolicy{5, std::chrono::milliseconds(1), 2.0}, 6000);
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    try {
        textpipe::extract(sample_report("77"), tax, gw, params());
        FAIL("expected ExtractionFailed");
    } catch (const textpipe::ExtractionFailed& e) {
        CHECK(e.report_id() == "77");
    }
    CHECK(server.calls() == 2);
}

TEST_CASE("accuracy is exact set match over gold labels") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();

    SUBCASE("89 exact matches out of 100 gives 0.89") {
        std::vector<textpipe::GoldLabel> gold;
        std::vector<textpipe::ExtractionRecord> records;
        for (int i = 0; i < 100; ++i) {
            const std::string id = "R" + std::to_string(i);
            const int label = 1 + i % 42;
            gold.push_back({id, {label}});
            textpipe::ExtractionRecord record;
            record.report_id = id;
            record.scenario_ids = {i < 89 ? label : (label % 42) + 1};
            records.push_back(std::move(record));
        }
        CHECK(textpipe::evaluate_accuracy(records, gold) == doctest::Approx(0.89));

        // permutation invariance in both directions
        std::mt19937 rng(5);
        std::shuffle(records.begin(), records.end(), rng);
        std::shuffle(gold.begin(), gold.end(), rng);
        CHECK(textpipe::evaluate_accuracy(records, gold) == doctest::Approx(0.89));
    }

    SUBCASE("set equality ignores label order") {
        textpipe::ExtractionRecord record;
        record.report_id = "R1";
        record.scenario_ids = {7, 2};
        CHECK(textpipe::evaluate_accuracy({record}, {{"R1", {2, 7}}}) == doctest::Approx(1.0));
    }

    SUBCASE("a gold id without a record counts as wrong") {
        textpipe::ExtractionRecord record;
        record.report_id = "R1";
        record.scenario_ids = {1};
        CHECK(textpipe::evaluate_accuracy({record}, {{"R1", {1}}, {"R2", {2}}}) ==
              doctest::Approx(0.5));
    }

    SUBCASE("both empty label sets count as correct") {
        textpipe::ExtractionRecord record;
        record.report_id = "R1";
        CHECK(textpipe::evaluate_accuracy({record}, {{"R1", {}}}) == doctest::Approx(1.0));
    }

    SUBCASE("empty gold is rejected") {
        CHECK_THROWS_AS(textpipe::evaluate_accuracy({}, {}), textpipe::InvalidGold);
    }

    SUBCASE("duplicate gold ids are rejected") {
        CHECK_THROWS_AS(textpipe::evaluate_accuracy({}, {{"R1", {1}}, {"R1", {2}}}),
                        textpipe::InvalidGold);
    }
}

TEST_CASE("gold CSV loads ids split on semicolons") {
    TempDir dir("gold");
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    util::write_text_file_atomic(dir / "gold.csv",
                                 "report_id,scenario_ids\nR1,7;2\nR2,\nR3,11\n");
    std::vector<textpipe::GoldLabel> gold = textpipe::load_gold_csv(dir / "gold.csv", tax);
    REQUIRE(gold.size() == 3);
    CHECK(gold[0].scenario_ids == std::vector<int>{7, 2});
    CHECK(gold[1].scenario_ids.empty());
    CHECK(gold[2].scenario_ids == std::vector<int>{11});
}

TEST_CASE("frequency statistics count at label level") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    auto record = [](const std::string& id, std::vector<int> ids,
                     std::optional<std::string> date = std::nullopt) {
        textpipe::ExtractionRecord r;
        r.report_id = id;
        r.scenario_ids = std::move(ids);
        r.event_date = std::move(date);
        return r;
    };

    SUBCASE("hand-counted three-record example") {
        std::vector<textpipe::ExtractionRecord> records = {
            record("a", {1}, "2019-05-01"), record("b", {1}, "2019-06-01"),
            record("c", {7}, "2020-01-15")};
        textpipe::FrequencyStats stats = textpipe::frequency_stats(records, tax);
        CHECK(stats.per_category.at(1) == 2);
        CHECK(stats.per_category.at(7) == 1);
        CHECK(stats.per_family.at(1) == 2);  // Fall
        CHECK(stats.per_family.at(2) == 1);  // Struck-by
        CHECK(stats.per_year.at(2019) == 2);
        CHECK(stats.per_year.at(2020) == 1);
        CHECK(stats.total_reports == 3);
    }

    SUBCASE("empty record list gives all-zero stats") {
        textpipe::FrequencyStats stats = textpipe::frequency_stats({}, tax);
        CHECK(stats.total_reports == 0);
        for (const auto& [id, count] : stats.per_category) CHECK(count == 0);
        for (const auto& [id, count] : stats.per_family) CHECK(count == 0);
        CHECK(stats.per_year.empty());
    }

    SUBCASE("two labels in one family bump that family twice") {
        // categories 1 and 2 are both in the Fall family
        std::vector<textpipe::ExtractionRecord> records = {record("a", {1, 2})};
        textpipe::FrequencyStats stats = textpipe::frequency_stats(records, tax);
        CHECK(stats.per_family.at(1) == 2);
        CHECK(stats.unknown_year == 1);  // no event date
    }

    SUBCASE("family counts always equal the sum of their categories") {
        std::mt19937 rng(9);
        std::vector<textpipe::ExtractionRecord> records;
        for (int i = 0; i < 200; ++i) {
            std::vector<int> ids;
            for (std::size_t k = 0; k < rng() % 4; ++k) {
                ids.push_back(1 + static_cast<int>(rng() % 42));
            }
            records.push_back(record("r" + std::to_string(i), tax.validate_ids(ids)));
        }
        textpipe::FrequencyStats stats = textpipe::frequency_stats(records, tax);
        long by_family = 0;
        long by_category = 0;
        for (const auto& [id, count] : stats.per_family) by_family += count;
        for (const auto& [id, count] : stats.per_category) by_category += count;
        CHECK(by_family == by_category);

        std::map<int, long> rollup;
        for (const auto& [id, count] : stats.per_category) {
            rollup[tax.resolve(id).family_id] += count;
        }
        for (const auto& [family_id, count] : stats.per_family) {
            CHECK(rollup[family_id] == count);
        }
    }
}

TEST_CASE("stats render to CSV with every category present") {
    taxonomy::Taxonomy tax = taxonomy::Taxonomy::builtin();
    textpipe::ExtractionRecord record;
    record.report_id = "R1";
    record.scenario_ids = {8};
    textpipe::FrequencyStats stats = textpipe::frequency_stats({record}, tax);
    const std::string csv = textpipe::stats_to_csv(stats, tax);
    std::vector<std::string> lines = util::split(csv, '\n');
    CHECK(lines[0] == "category_id,family,name,count");
    CHECK(lines.size() >= 43);  // header + 42 categories (+ trailing blank)
    CHECK(csv.find("8,\"Struck-by\",\"Struck-by swinging objects\",1") != std::string::npos);
    CHECK(csv.find("1,\"Fall\",\"Falls from roofs\",0") != std::string::npos);
}
