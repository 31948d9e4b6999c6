// SPDX-License-Identifier: Apache-2.0
// hazardkit: construction-safety analysis pipelines behind one executable.
#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "hazardkit/cli.hpp"
#include "hazardkit/util.hpp"

namespace {

void handle_sigint(int) { hazardkit::util::abort_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
    using namespace hazardkit;

    CLI::App app{"hazardkit: accident-report extraction, visual hazard localization, and "
                 "rule-compliance benchmarking against chat-completion endpoints"};
    app.require_subcommand(1);

    std::string config_file;
    cli::ConfigOverrides overrides;
    app.add_option("--config", config_file, "key = value config file");
    app.add_option("--backend", overrides.backend, "live or replay");
    app.add_option("--endpoint", overrides.endpoint_url, "chat-completions endpoint URL");
    app.add_option("--model", overrides.model_name, "model name sent with every request");
    app.add_option("--fixture", overrides.fixture_path, "replay fixture file (JSON lines)");
    app.add_option("--output-dir", overrides.output_dir, "where run outputs land");
    app.add_option("--corpus-dir", overrides.corpus_dir, "report corpus directory");
    app.add_option("--taxonomy", overrides.taxonomy_file, "taxonomy override JSON file");
    app.add_option("--rpm", overrides.rate_limit_rpm, "request rate limit per minute");
    app.add_option("--jobs", overrides.jobs, "parallel workers");
    app.add_option("--temperature", overrides.temperature, "sampling temperature");
    app.add_option("--max-tokens", overrides.max_output_tokens, "max output tokens");
    app.add_option("--token-env", overrides.token_env,
                   "environment variable holding the auth token");
    app.add_option("--politeness-ms", overrides.politeness_delay_ms,
                   "delay between live page fetches");
    bool no_strict = false;
    app.add_flag("--no-strict-replay", no_strict, "serve UNRECORDED on fixture misses");

    auto* crawl = app.add_subcommand("crawl", "crawl the accident search index into a corpus");
    cli::CrawlArgs crawl_args;
    crawl->add_option("--start-date", crawl_args.start_date, "YYYY-MM-DD")->required();
    crawl->add_option("--end-date", crawl_args.end_date, "YYYY-MM-DD")->required();
    crawl->add_option("--search-url", crawl_args.search_url, "search endpoint base URL");
    crawl->add_option("--param", crawl_args.query_params,
                      "opaque key=value search filter (repeatable)");
    crawl->add_option("--pages-dir", crawl_args.pages_dir,
                      "serve pages from fixture files instead of HTTP");
    crawl->add_option("--max-pages", crawl_args.max_pages, "pagination safety cap");

    auto* extract = app.add_subcommand("extract", "run structured extraction over the corpus");
    cli::ExtractArgs extract_args;
    extract->add_option("--gold", extract_args.gold_csv,
                        "gold labels CSV (report_id,ids;semicolon-separated)");

    auto* stats = app.add_subcommand("stats", "frequency statistics over extracted records");
    cli::StatsArgs stats_args;
    stats->add_option("--records", stats_args.records_path, "records.jsonl path");

    auto* vision = app.add_subcommand("vision", "run the visual hazard pipeline over images");
    cli::VisionArgs vision_args;
    vision->add_option("images", vision_args.images, "image files or directories")->required();

    auto* bench = app.add_subcommand("bench", "rule-compliance VQA benchmark");
    cli::BenchArgs bench_args;
    bench->add_option("--manifest", bench_args.manifest, "sample manifest CSV")->required();
    bench->add_option("--mode", bench_args.mode, "single or ensemble");
    bench->add_option("--prompt-index", bench_args.prompt_index,
                      "prompt used in single mode (1..10)");
    bench->add_option("--rule-line", bench_args.rule_line, "override the built-in rule text");

    auto* record = app.add_subcommand("replay-record",
                                      "send requests to a live endpoint, recording fixtures");
    cli::RecordArgs record_args;
    record->add_option("--requests", record_args.requests_path,
                       "JSONL of chat-completions request bodies")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitUsage;
    }

    std::signal(SIGINT, handle_sigint);

    cli::Config config;
    try {
        if (!config_file.empty()) {
            config = cli::load_config_file(config_file);
        }
        cli::apply_env_overrides(config);
        cli::apply_overrides(config, overrides);
        if (no_strict) {
            config.replay_strict = false;
        }
        cli::validate_config(config);
        std::filesystem::create_directories(config.output_dir);
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitUsage;
    }

    try {
        if (crawl->parsed()) return cli::cmd_crawl(config, crawl_args);
        if (extract->parsed()) return cli::cmd_extract(config, extract_args);
        if (stats->parsed()) return cli::cmd_stats(config, stats_args);
        if (vision->parsed()) return cli::cmd_vision(config, vision_args);
        if (bench->parsed()) return cli::cmd_bench(config, bench_args);
        if (record->parsed()) return cli::cmd_replay_record(config, record_args);
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return cli::kExitPartial;
    }
    return cli::kExitUsage;
}
