// SPDX-License-Identifier: Apache-2.0
// Shared CLI configuration: defaults < config file < environment < flags.
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "hazardkit/gateway.hpp"

namespace hazardkit::cli {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string endpoint_url = "http://localhost:8000";
    std::string model_name = "gpt-4o-mini";
    std::string backend = "replay";  // "live" or "replay"
    std::filesystem::path fixture_path = "fixtures.jsonl";
    bool replay_strict = true;
    int rate_limit_rpm = 60;
    std::filesystem::path corpus_dir = "corpus";
    std::filesystem::path output_dir = "out";
    std::filesystem::path taxonomy_file;  // empty = built-in table
    int politeness_delay_ms = 1000;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    double price_input = 5e-6;
    double price_output = 15e-6;
    std::string token_env = "HAZARDKIT_API_KEY";
    unsigned jobs = 1;
};

// key = value lines, '#' comments. Unknown keys are errors, and so is any
// secret-looking key: tokens come from the environment, never from files.
Config load_config_file(const std::filesystem::path& path, Config base = {});

// HAZARDKIT_* variables override file values.
void apply_env_overrides(Config& config);

// Flag-level overrides collected by the CLI parser.
struct ConfigOverrides {
    std::optional<std::string> endpoint_url;
    std::optional<std::string> model_name;
    std::optional<std::string> backend;
    std::optional<std::string> fixture_path;
    std::optional<bool> replay_strict;
    std::optional<int> rate_limit_rpm;
    std::optional<std::string> corpus_dir;
    std::optional<std::string> output_dir;
    std::optional<std::string> taxonomy_file;
    std::optional<int> politeness_delay_ms;
    std::optional<double> temperature;
    std::optional<int> max_output_tokens;
    std::optional<std::string> token_env;
    std::optional<unsigned> jobs;
};

void apply_overrides(Config& config, const ConfigOverrides& overrides);

void validate_config(const Config& config);  // throws ConfigError

std::unique_ptr<gateway::Gateway> make_gateway(const Config& config);
gateway::ChatParams chat_params(const Config& config);

}  // namespace hazardkit::cli
