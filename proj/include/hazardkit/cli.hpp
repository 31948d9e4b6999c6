// SPDX-License-Identifier: Apache-2.0
// Subcommand implementations behind the hazardkit executable. Exit codes:
// 0 success, 1 partial failures, 2 usage/config error, 3 backend unavailable.
#pragma once

#include <string>
#include <vector>

#include "hazardkit/config.hpp"

namespace hazardkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBackend = 3;

struct CrawlArgs {
    std::string start_date;  // YYYY-MM-DD
    std::string end_date;
    std::string search_url;
    std::vector<std::string> query_params;  // key=value, passed through opaquely
    std::string pages_dir;                  // fixture pages instead of live HTTP
    int max_pages = 10000;
};
int cmd_crawl(const Config& config, const CrawlArgs& args);

struct ExtractArgs {
    std::string gold_csv;  // optional; prints accuracy when given
};
int cmd_extract(const Config& config, const ExtractArgs& args);

struct StatsArgs {
    std::string records_path;  // defaults to <output_dir>/records.jsonl
};
int cmd_stats(const Config& config, const StatsArgs& args);

struct VisionArgs {
    std::vector<std::string> images;  // files or directories
};
int cmd_vision(const Config& config, const VisionArgs& args);

struct BenchArgs {
    std::string manifest;
    std::string mode = "ensemble";  // "single" or "ensemble"
    int prompt_index = 1;
    std::string rule_line;  // optional override of the built-in PPE rule
};
int cmd_bench(const Config& config, const BenchArgs& args);

struct RecordArgs {
    std::string requests_path;  // JSONL of wire-shape chat requests
};
int cmd_replay_record(const Config& config, const RecordArgs& args);

}  // namespace hazardkit::cli
