// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/ingest.hpp"

#include <httplib.h>

#include <cctype>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "hazardkit/html.hpp"
#include "hazardkit/util.hpp"

namespace hazardkit::ingest {

namespace {

bool parse_iso_date(std::string_view s, int* y, int* m, int* d) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    *y = std::stoi(std::string(s.substr(0, 4)));
    *m = std::stoi(std::string(s.substr(5, 2)));
    *d = std::stoi(std::string(s.substr(8, 2)));
    return *m >= 1 && *m <= 12 && *d >= 1 && *d <= 31;
}

std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

std::string query_param(const std::string& url, const std::string& key) {
    std::size_t q = url.find('?');
    if (q == std::string::npos) return {};
    for (const std::string& pair : util::split(url.substr(q + 1), '&')) {
        std::size_t eq = pair.find('=');
        if (eq != std::string::npos && pair.substr(0, eq) == key) {
            return pair.substr(eq + 1);
        }
    }
    return {};
}

std::string resolve_href(const std::string& page_url, const std::string& href) {
    if (href.find("://") != std::string::npos) return href;
    auto scheme_end = page_url.find("://");
    if (scheme_end == std::string::npos) return href;
    if (href.starts_with('/')) {
        auto host_end = page_url.find('/', scheme_end + 3);
        return (host_end == std::string::npos ? page_url : page_url.substr(0, host_end)) + href;
    }
    auto last_slash = page_url.rfind('/');
    if (last_slash <= scheme_end + 2) return page_url + "/" + href;
    return page_url.substr(0, last_slash + 1) + href;
}

}  // namespace

void validate_window(const CrawlWindow& window) {
    int y0, m0, d0, y1, m1, d1;
    if (!parse_iso_date(window.start_date, &y0, &m0, &d0) ||
        !parse_iso_date(window.end_date, &y1, &m1, &d1)) {
        throw BadWindow("dates must be YYYY-MM-DD: " + window.start_date + " .. " +
                        window.end_date);
    }
    if (std::tuple(y0, m0, d0) > std::tuple(y1, m1, d1)) {
        throw BadWindow("start_date is after end_date");
    }
}

std::string build_search_page_url(const CrawlOptions& options, const CrawlWindow& window,
                                  int page) {
    std::string url = options.search_url;
    char sep = url.find('?') == std::string::npos ? '?' : '&';
    for (const auto& [key, value] : options.query_params) {
        url += sep;
        url += url_encode(key) + "=" + url_encode(value);
        sep = '&';
    }
    url += sep;
    url += options.start_param + "=" + url_encode(window.start_date);
    url += "&" + options.end_param + "=" + url_encode(window.end_date);
    url += "&" + options.page_param + "=" + std::to_string(page);
    return url;
}

std::vector<ReportRef> parse_index_page(const std::string& url, std::string_view html) {
    std::vector<Anchor> anchors = extract_anchors(html);
    if (anchors.empty()) {
        throw PageParseError(url, "no anchors found");
    }
    std::vector<ReportRef> refs;
    for (const Anchor& a : anchors) {
        if (a.href.find("inspection_detail") == std::string::npos) continue;
        ReportRef ref;
        ref.detail_url = resolve_href(url, a.href);
        ref.inspection_id = query_param(ref.detail_url, "id");
        if (ref.inspection_id.empty()) {
            std::size_t q = ref.detail_url.find('?');
            std::string path = ref.detail_url.substr(0, q);
            std::size_t slash = path.rfind('/');
            ref.inspection_id = slash == std::string::npos ? path : path.substr(slash + 1);
        }
        if (ref.inspection_id.empty()) {
            throw PageParseError(url, "result row without an inspection id: " + a.href);
        }
        refs.push_back(std::move(ref));
    }
    return refs;
}

std::vector<ReportRef> crawl_index(const CrawlWindow& window, const CrawlOptions& options,
                                   const PageFetcher& fetch) {
    validate_window(window);
    std::vector<ReportRef> out;
    std::unordered_set<std::string> seen;
    for (int page = 1; page <= options.max_pages; ++page) {
        const std::string url = build_search_page_url(options, window, page);
        std::vector<ReportRef> refs = parse_index_page(url, fetch(url));
        if (refs.empty()) break;  // empty results page ends pagination
        for (ReportRef& ref : refs) {
            if (seen.insert(ref.inspection_id).second) {
                out.push_back(std::move(ref));
            }
        }
    }
    return out;
}

std::pair<std::string, bool> truncate_text(std::string_view text, std::size_t limit) {
    std::size_t scalars = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (scalars == limit) {
            return {std::string(text.substr(0, i)), true};
        }
        unsigned char lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        // Invalid sequences advance one byte and count as one scalar.
        if (len > 1) {
            std::size_t ok = 1;
            while (ok < len && i + ok < text.size() &&
                   (static_cast<unsigned char>(text[i + ok]) & 0xC0) == 0x80) {
                ++ok;
            }
            len = ok;
        }
        i += len;
        ++scalars;
    }
    return {std::string(text), false};
}

AccidentReport fetch_report(const ReportRef& ref, const PageFetcher& fetch) {
    const std::string html = fetch(ref.detail_url);
    const std::string text = html_to_text(html);
    if (util::trim(text).empty()) {
        throw EmptyReport("no visible report text at " + ref.detail_url);
    }
    AccidentReport report;
    report.inspection_id = ref.inspection_id;
    report.detail_url = ref.detail_url;
    auto [truncated_text, truncated] = truncate_text(text);
    report.raw_text = std::move(truncated_text);
    report.truncated = truncated;
    report.fetched_at = util::rfc3339_utc_now();
    return report;
}

PageFetcher make_http_fetcher(std::chrono::milliseconds politeness_delay) {
    auto last = std::make_shared<std::chrono::steady_clock::time_point>(
        std::chrono::steady_clock::now() - politeness_delay);
    auto mutex = std::make_shared<std::mutex>();
    return [politeness_delay, last, mutex](const std::string& url) -> std::string {
        {
            std::lock_guard<std::mutex> lock(*mutex);
            auto next = *last + politeness_delay;
            auto now = std::chrono::steady_clock::now();
            if (next > now) {
                std::this_thread::sleep_until(next);
            }
            *last = std::chrono::steady_clock::now();
        }
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) {
            throw FetchError("URL must include a scheme: " + url);
        }
        auto path_start = url.find('/', scheme_end + 3);
        std::string host = path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
        httplib::Client client(host);
        client.set_follow_location(true);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        auto result = client.Get(path);
        if (!result) {
            throw FetchError("fetch failed for " + url + ": " +
                             httplib::to_string(result.error()));
        }
        if (result->status != 200) {
            throw FetchError("fetch failed for " + url + ": status " +
                             std::to_string(result->status));
        }
        return result->body;
    };
}

}  // namespace hazardkit::ingest
