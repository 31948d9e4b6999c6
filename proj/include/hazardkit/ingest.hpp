// SPDX-License-Identifier: Apache-2.0
// Crawl the accident search interface, fetch inspection detail pages, and
// reduce them to truncated narrative text.
#pragma once

#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hazardkit::ingest {

struct ReportRef {
    std::string inspection_id;
    std::string detail_url;
};

struct AccidentReport {
    std::string inspection_id;
    std::string detail_url;
    std::string raw_text;    // UTF-8, at most kTruncationLimit scalar values
    std::string fetched_at;  // RFC 3339 UTC
    bool truncated = false;
};

struct CrawlWindow {
    std::string start_date;  // YYYY-MM-DD
    std::string end_date;
};

// Returns the page body for a URL; throws FetchError on transport problems.
using PageFetcher = std::function<std::string(const std::string& url)>;

class PageParseError : public std::runtime_error {
  public:
    PageParseError(const std::string& url, const std::string& reason)
        : std::runtime_error("cannot parse page " + url + ": " + reason), url_(url) {}
    const std::string& url() const { return url_; }

  private:
    std::string url_;
};

class FetchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class EmptyReport : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class BadWindow : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kTruncationLimit = 4000;

struct CrawlOptions {
    std::string search_url;  // base search endpoint, query appended
    std::vector<std::pair<std::string, std::string>> query_params;  // opaque filters
    std::string start_param = "startdate";
    std::string end_param = "enddate";
    std::string page_param = "page";
    int max_pages = 10000;
};

// start_date <= end_date, both YYYY-MM-DD; throws BadWindow otherwise.
void validate_window(const CrawlWindow& window);

std::string build_search_page_url(const CrawlOptions& options, const CrawlWindow& window,
                                  int page);

// Result-row anchors of one index page (href contains "inspection_detail"),
// in document order. A page without a single anchor anywhere is treated as
// malformed. The inspection id is the value of the id query parameter, or
// the last path segment when there is none.
std::vector<ReportRef> parse_index_page(const std::string& url, std::string_view html);

// Walks search pages until one yields no result rows; de-duplicates by
// inspection id keeping first occurrence.
std::vector<ReportRef> crawl_index(const CrawlWindow& window, const CrawlOptions& options,
                                   const PageFetcher& fetch);

// First `limit` characters counted in Unicode scalar values; a scalar is
// never split. Returns the (possibly shortened) text and whether anything
// was cut.
std::pair<std::string, bool> truncate_text(std::string_view text,
                                           std::size_t limit = kTruncationLimit);

// Visible text of the detail document, truncated. Throws EmptyReport when
// nothing but chrome remains.
AccidentReport fetch_report(const ReportRef& ref, const PageFetcher& fetch);

// Live fetcher over HTTP(S) with a politeness delay between requests and
// the same retry posture as the model gateway.
PageFetcher make_http_fetcher(std::chrono::milliseconds politeness_delay);

}  // namespace hazardkit::ingest
