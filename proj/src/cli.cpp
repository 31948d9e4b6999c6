// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/cli.hpp"

#include <algorithm>
#include <iostream>
#include <nlohmann/json.hpp>

#include "hazardkit/corpus.hpp"
#include "hazardkit/rulevqa.hpp"
#include "hazardkit/textpipe.hpp"
#include "hazardkit/util.hpp"
#include "hazardkit/vision.hpp"
#include "hazardkit/wire.hpp"

namespace hazardkit::cli {

namespace {

taxonomy::Taxonomy load_taxonomy(const Config& config) {
    if (config.taxonomy_file.empty()) {
        return taxonomy::Taxonomy::builtin();
    }
    return taxonomy::Taxonomy::from_file(config.taxonomy_file);
}

nlohmann::ordered_json config_snapshot(const Config& config) {
    nlohmann::ordered_json j;
    j["endpoint_url"] = config.endpoint_url;
    j["model_name"] = config.model_name;
    j["backend"] = config.backend;
    j["fixture_path"] = config.fixture_path.string();
    j["replay_strict"] = config.replay_strict;
    j["rate_limit_rpm"] = config.rate_limit_rpm;
    j["corpus_dir"] = config.corpus_dir.string();
    j["output_dir"] = config.output_dir.string();
    j["taxonomy_file"] = config.taxonomy_file.string();
    j["politeness_delay_ms"] = config.politeness_delay_ms;
    j["temperature"] = config.temperature;
    j["max_output_tokens"] = config.max_output_tokens;
    j["price_input"] = config.price_input;
    j["price_output"] = config.price_output;
    j["token_env"] = config.token_env;  // variable name only, never the value
    j["jobs"] = config.jobs;
    return j;
}

// Every run leaves a manifest sufficient to reproduce it under replay.
struct RunManifest {
    const Config& config;
    std::string command;
    std::string started_at = util::rfc3339_utc_now();
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();

    void write(int exit_code, const gateway::Usage* usage = nullptr) const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["started_at"] = started_at;
        j["finished_at"] = util::rfc3339_utc_now();
        j["config"] = config_snapshot(config);
        j["template_versions"] = {
            {"extract", std::string(textpipe::kExtractTemplateVersion)},
            {"vision", std::string(vision::kVisionTemplateVersion)},
            {"rulevqa", std::string(rulevqa::kVqaTemplateVersion)},
        };
        if (usage != nullptr) {
            j["usage"] = {{"input_tokens", usage->total_input_tokens},
                          {"output_tokens", usage->total_output_tokens},
                          {"estimated_cost", usage->estimated_cost},
                          {"wall_ms", usage->wall_time.count()}};
        }
        j["counts"] = counts;
        j["exit_code"] = exit_code;
        util::write_text_file_atomic(config.output_dir / "run_manifest.json",
                                     j.dump(2) + "\n");
    }
};

ingest::PageFetcher make_fixture_page_fetcher(const std::filesystem::path& pages_dir) {
    return [pages_dir](const std::string& url) -> std::string {
        const std::filesystem::path path =
            pages_dir / (util::sanitize_for_filename(url) + ".html");
        if (!std::filesystem::exists(path)) {
            throw ingest::FetchError("no fixture page for " + url + " (expected " +
                                     path.string() + ")");
        }
        return util::read_text_file(path);
    };
}

}  // namespace

int cmd_crawl(const Config& config, const CrawlArgs& args) {
    RunManifest manifest{config, "crawl"};
    ingest::CrawlWindow window{args.start_date, args.end_date};
    ingest::CrawlOptions options;
    options.search_url = args.search_url;
    options.max_pages = args.max_pages;
    for (const std::string& kv : args.query_params) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "crawl: query param must be key=value: " << kv << "\n";
            return kExitUsage;
        }
        options.query_params.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }

    try {
        ingest::validate_window(window);
    } catch (const ingest::BadWindow& e) {
        std::cerr << "crawl: " << e.what() << "\n";
        return kExitUsage;
    }
    if (args.search_url.empty()) {
        std::cerr << "crawl: --search-url is required\n";
        return kExitUsage;
    }

    ingest::PageFetcher fetcher =
        args.pages_dir.empty()
            ? ingest::make_http_fetcher(std::chrono::milliseconds(config.politeness_delay_ms))
            : make_fixture_page_fetcher(args.pages_dir);

    std::vector<ingest::ReportRef> refs;
    try {
        refs = ingest::crawl_index(window, options, fetcher);
    } catch (const std::exception& e) {
        std::cerr << "crawl: index crawl failed: " << e.what() << "\n";
        manifest.counts["fetched"] = 0;
        manifest.counts["failed"] = 0;
        manifest.write(kExitBackend);
        return kExitBackend;
    }

    ingest::CorpusStore corpus = ingest::CorpusStore::open(config.corpus_dir);
    long fetched = 0;
    long failed = 0;
    for (const ingest::ReportRef& ref : refs) {
        if (util::abort_flag().load()) break;
        try {
            corpus.put(ingest::fetch_report(ref, fetcher));
            ++fetched;
        } catch (const std::exception& e) {
            std::cerr << "crawl: " << ref.inspection_id << ": " << e.what() << "\n";
            ++failed;
        }
    }
    std::cout << "crawl: fetched " << fetched << ", failed " << failed << " (of "
              << refs.size() << " refs)\n";
    manifest.counts["refs"] = refs.size();
    manifest.counts["fetched"] = fetched;
    manifest.counts["failed"] = failed;
    const int code = (failed > 0 || util::abort_flag().load()) ? kExitPartial : kExitOk;
    manifest.write(code);
    return code;
}

int cmd_extract(const Config& config, const ExtractArgs& args) {
    RunManifest manifest{config, "extract"};
    if (!std::filesystem::exists(config.corpus_dir / "index.json")) {
        std::cerr << "extract: no corpus at " << config.corpus_dir
                  << " (run the crawl subcommand first, or point --corpus-dir at one)\n";
        return kExitUsage;
    }
    taxonomy::Taxonomy tax = load_taxonomy(config);
    ingest::CorpusStore corpus = ingest::CorpusStore::open(config.corpus_dir);
    std::unique_ptr<gateway::Gateway> gw;
    try {
        gw = make_gateway(config);
    } catch (const std::exception& e) {
        std::cerr << "extract: backend unavailable: " << e.what() << "\n";
        return kExitBackend;
    }

    textpipe::ExtractRunResult run = textpipe::extract_corpus(
        corpus, tax, *gw, chat_params(config), config.output_dir, config.jobs);
    std::cout << "extract: " << run.records.size() << " records, " << run.failures.size()
              << " failures\n";
    manifest.counts["records"] = run.records.size();
    manifest.counts["failures"] = run.failures.size();

    int code = run.failures.empty() && !run.aborted ? kExitOk : kExitPartial;
    if (!args.gold_csv.empty()) {
        try {
            auto gold = textpipe::load_gold_csv(args.gold_csv, tax);
            double accuracy = textpipe::evaluate_accuracy(run.records, gold);
            std::cout << "extract: accuracy " << accuracy << " over " << gold.size()
                      << " gold labels\n";
            nlohmann::ordered_json eval;
            eval["accuracy"] = accuracy;
            eval["gold_count"] = gold.size();
            util::write_text_file_atomic(config.output_dir / "eval.json", eval.dump(2) + "\n");
            manifest.counts["gold_count"] = gold.size();
        } catch (const textpipe::InvalidGold& e) {
            std::cerr << "extract: " << e.what() << "\n";
            code = kExitUsage;
        }
    }
    gateway::Usage usage = gw->usage();
    manifest.write(code, &usage);
    return code;
}

int cmd_stats(const Config& config, const StatsArgs& args) {
    RunManifest manifest{config, "stats"};
    const std::filesystem::path records_path = args.records_path.empty()
                                                   ? config.output_dir / "records.jsonl"
                                                   : std::filesystem::path(args.records_path);
    if (!std::filesystem::exists(records_path)) {
        std::cerr << "stats: no records at " << records_path << " (run extract first)\n";
        return kExitUsage;
    }
    taxonomy::Taxonomy tax = load_taxonomy(config);
    std::vector<textpipe::ExtractionRecord> records;
    try {
        records = textpipe::read_records_jsonl(records_path, tax);
    } catch (const std::exception& e) {
        std::cerr << "stats: cannot read records: " << e.what() << "\n";
        return kExitUsage;
    }
    textpipe::FrequencyStats stats = textpipe::frequency_stats(records, tax);
    util::write_text_file_atomic(config.output_dir / "stats.csv",
                                 textpipe::stats_to_csv(stats, tax));
    util::write_text_file_atomic(config.output_dir / "stats.json",
                                 textpipe::stats_to_json(stats, tax).dump(2) + "\n");
    std::cout << "stats: " << records.size() << " records summarized into "
              << (config.output_dir / "stats.csv") << "\n";
    manifest.counts["records"] = records.size();
    manifest.write(kExitOk);
    return kExitOk;
}

int cmd_vision(const Config& config, const VisionArgs& args) {
    RunManifest manifest{config, "vision"};
    std::vector<std::filesystem::path> images;
    for (const std::string& entry : args.images) {
        std::filesystem::path path(entry);
        if (std::filesystem::is_directory(path)) {
            std::vector<std::filesystem::path> found;
            for (const auto& file : std::filesystem::directory_iterator(path)) {
                std::string ext = util::to_lower(file.path().extension().string());
                if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
                    found.push_back(file.path());
                }
            }
            std::sort(found.begin(), found.end());
            images.insert(images.end(), found.begin(), found.end());
        } else if (std::filesystem::exists(path)) {
            images.push_back(path);
        } else {
            std::cerr << "vision: no such image or directory: " << entry << "\n";
            return kExitUsage;
        }
    }
    if (images.empty()) {
        std::cerr << "vision: no input images\n";
        return kExitUsage;
    }

    taxonomy::Taxonomy tax = load_taxonomy(config);
    std::unique_ptr<gateway::Gateway> gw;
    try {
        gw = make_gateway(config);
    } catch (const std::exception& e) {
        std::cerr << "vision: backend unavailable: " << e.what() << "\n";
        return kExitBackend;
    }

    long ok = 0;
    long failed = 0;
    for (const std::filesystem::path& image : images) {
        if (util::abort_flag().load()) break;
        try {
            vision::PipelineResult result =
                vision::run_pipeline(image, tax, *gw, chat_params(config), config.output_dir);
            std::cout << "vision: " << result.image_id << ": " << result.annotations.size()
                      << " annotations -> " << result.run_dir << "\n";
            ++ok;
        } catch (const std::exception& e) {
            std::cerr << "vision: " << image << ": " << e.what() << "\n";
            ++failed;
        }
    }
    manifest.counts["images"] = images.size();
    manifest.counts["ok"] = ok;
    manifest.counts["failed"] = failed;
    gateway::Usage usage = gw->usage();
    const int code = (failed > 0 || util::abort_flag().load()) ? kExitPartial : kExitOk;
    manifest.write(code, &usage);
    return code;
}

int cmd_bench(const Config& config, const BenchArgs& args) {
    RunManifest manifest{config, "bench"};
    if (args.mode != "single" && args.mode != "ensemble") {
        std::cerr << "bench: --mode must be single or ensemble\n";
        return kExitUsage;
    }
    if (args.prompt_index < 1 || args.prompt_index > 10) {
        std::cerr << "bench: --prompt-index must be in 1..10\n";
        return kExitUsage;
    }
    std::vector<rulevqa::VqaSample> samples;
    try {
        samples = rulevqa::load_manifest(args.manifest);
    } catch (const rulevqa::ManifestError& e) {
        std::cerr << "bench: " << e.what() << "\n";
        return kExitUsage;
    }
    rulevqa::SafetyRule rule = rulevqa::ppe_rule();
    if (!args.rule_line.empty()) {
        rule.rule_line = args.rule_line;
    }
    std::unique_ptr<gateway::Gateway> gw;
    try {
        gw = make_gateway(config);
    } catch (const std::exception& e) {
        std::cerr << "bench: backend unavailable: " << e.what() << "\n";
        return kExitBackend;
    }

    const rulevqa::EvalMode mode =
        args.mode == "single" ? rulevqa::EvalMode::single : rulevqa::EvalMode::ensemble;
    rulevqa::EvalResult result = rulevqa::evaluate(samples, rule, mode, args.prompt_index, *gw,
                                                   chat_params(config), config.jobs);

    util::write_text_file_atomic(config.output_dir / "results.jsonl",
                                 rulevqa::results_to_jsonl(result));
    rulevqa::ReportRow row;
    row.name = config.model_name + (mode == rulevqa::EvalMode::single
                                        ? " (single prompt " + std::to_string(args.prompt_index) + ")"
                                        : " (10 prompt)");
    row.precision = result.metrics.precision * 100.0;
    row.recall = result.metrics.recall * 100.0;
    rulevqa::RenderedReport report = rulevqa::report_table({row});
    util::write_text_file_atomic(config.output_dir / "metrics.csv", report.csv);
    util::write_text_file_atomic(config.output_dir / "table.txt", report.text);
    std::cout << report.text;
    std::cout << "bench: tp=" << result.metrics.tp << " fp=" << result.metrics.fp
              << " fn=" << result.metrics.fn << " tn=" << result.metrics.tn
              << " failed=" << result.failed_count << "\n";

    manifest.counts["samples"] = samples.size();
    manifest.counts["failed"] = result.failed_count;
    manifest.counts["tp"] = result.metrics.tp;
    manifest.counts["fp"] = result.metrics.fp;
    manifest.counts["fn"] = result.metrics.fn;
    manifest.counts["tn"] = result.metrics.tn;
    gateway::Usage usage = gw->usage();
    const int code =
        (result.failed_count > 0 || util::abort_flag().load()) ? kExitPartial : kExitOk;
    manifest.write(code, &usage);
    return code;
}

int cmd_replay_record(const Config& config, const RecordArgs& args) {
    RunManifest manifest{config, "replay-record"};
    if (config.backend != "live") {
        std::cerr << "replay-record: requires --backend live (responses are recorded from a "
                     "real endpoint)\n";
        return kExitUsage;
    }
    if (!std::filesystem::exists(args.requests_path)) {
        std::cerr << "replay-record: requests file not found: " << args.requests_path << "\n";
        return kExitUsage;
    }
    std::unique_ptr<gateway::Gateway> gw;
    try {
        gw = make_gateway(config);
        gw->set_record_path(config.fixture_path);
    } catch (const std::exception& e) {
        std::cerr << "replay-record: backend unavailable: " << e.what() << "\n";
        return kExitBackend;
    }

    long ok = 0;
    long failed = 0;
    std::size_t line_no = 0;
    for (const std::string& line : util::read_lines(args.requests_path)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        if (util::abort_flag().load()) break;
        try {
            gateway::ChatRequest request =
                gateway::from_wire_json(nlohmann::json::parse(line));
            gw->send_chat(request);
            ++ok;
        } catch (const std::exception& e) {
            std::cerr << "replay-record: line " << line_no << ": " << e.what() << "\n";
            ++failed;
        }
    }
    std::cout << "replay-record: recorded " << ok << ", failed " << failed << " -> "
              << config.fixture_path << "\n";
    manifest.counts["recorded"] = ok;
    manifest.counts["failed"] = failed;
    gateway::Usage usage = gw->usage();
    int code = kExitOk;
    if (failed > 0) code = ok > 0 ? kExitPartial : kExitBackend;
    if (util::abort_flag().load()) code = kExitPartial;
    manifest.write(code, &usage);
    return code;
}

}  // namespace hazardkit::cli
