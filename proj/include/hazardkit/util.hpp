// SPDX-License-Identifier: Apache-2.0
// Small filesystem / string / time helpers shared by all modules.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hazardkit::util {

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

// Write-temp-then-rename; the destination is never observed half-written.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_binary_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void append_line(const std::filesystem::path& path, std::string_view line);
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string rfc3339_utc(std::chrono::system_clock::time_point tp);
std::string rfc3339_utc_now();

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string rtrim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Maps a URL onto a filesystem-safe fixture filename (used by the
// fixture-page fetcher and the tests that lay fixture pages down).
std::string sanitize_for_filename(std::string_view s);

// Runs fn(0..n-1) on up to `jobs` worker threads; rethrows the first failure.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

// Cooperative cancellation flag; SIGINT in the CLI sets it.
std::atomic<bool>& abort_flag();

}  // namespace hazardkit::util
