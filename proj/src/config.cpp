// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/config.hpp"

#include <cstdlib>

#include "hazardkit/util.hpp"

namespace hazardkit::cli {

namespace {

bool looks_like_secret(const std::string& key) {
    static const char* kSecretKeys[] = {"api_key", "apikey",        "token",  "auth_token",
                                        "secret",  "authorization", "password"};
    const std::string lower = util::to_lower(key);
    for (const char* s : kSecretKeys) {
        if (lower == s) return true;
    }
    return false;
}

void apply_key(Config& config, const std::string& key, const std::string& value,
               const std::string& origin) {
    if (looks_like_secret(key)) {
        throw ConfigError(origin + ": key '" + key +
                          "' looks like a credential; tokens must come from the environment "
                          "variable named by token_env");
    }
    try {
        if (key == "endpoint_url") config.endpoint_url = value;
        else if (key == "model_name") config.model_name = value;
        else if (key == "backend") config.backend = value;
        else if (key == "fixture_path") config.fixture_path = value;
        else if (key == "replay_strict") config.replay_strict = (value == "true" || value == "1");
        else if (key == "rate_limit_rpm") config.rate_limit_rpm = std::stoi(value);
        else if (key == "corpus_dir") config.corpus_dir = value;
        else if (key == "output_dir") config.output_dir = value;
        else if (key == "taxonomy_file") config.taxonomy_file = value;
        else if (key == "politeness_delay_ms") config.politeness_delay_ms = std::stoi(value);
        else if (key == "temperature") config.temperature = std::stod(value);
        else if (key == "max_output_tokens") config.max_output_tokens = std::stoi(value);
        else if (key == "price_input") config.price_input = std::stod(value);
        else if (key == "price_output") config.price_output = std::stod(value);
        else if (key == "token_env") config.token_env = value;
        else if (key == "jobs") config.jobs = static_cast<unsigned>(std::stoul(value));
        else throw ConfigError(origin + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw ConfigError(origin + ": bad value for '" + key + "': " + value);
    } catch (const std::out_of_range&) {
        throw ConfigError(origin + ": bad value for '" + key + "': " + value);
    }
}

}  // namespace

Config load_config_file(const std::filesystem::path& path, Config base) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    std::size_t line_no = 0;
    for (const std::string& raw : util::read_lines(path)) {
        ++line_no;
        std::string line = util::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value");
        }
        apply_key(base, util::trim(line.substr(0, eq)), util::trim(line.substr(eq + 1)),
                  path.string() + ":" + std::to_string(line_no));
    }
    return base;
}

void apply_env_overrides(Config& config) {
    static const std::pair<const char*, const char*> kEnvKeys[] = {
        {"HAZARDKIT_ENDPOINT", "endpoint_url"},
        {"HAZARDKIT_MODEL", "model_name"},
        {"HAZARDKIT_BACKEND", "backend"},
        {"HAZARDKIT_FIXTURE", "fixture_path"},
        {"HAZARDKIT_REPLAY_STRICT", "replay_strict"},
        {"HAZARDKIT_RPM", "rate_limit_rpm"},
        {"HAZARDKIT_CORPUS_DIR", "corpus_dir"},
        {"HAZARDKIT_OUTPUT_DIR", "output_dir"},
        {"HAZARDKIT_TAXONOMY", "taxonomy_file"},
        {"HAZARDKIT_POLITENESS_MS", "politeness_delay_ms"},
        {"HAZARDKIT_TEMPERATURE", "temperature"},
        {"HAZARDKIT_MAX_TOKENS", "max_output_tokens"},
        {"HAZARDKIT_PRICE_INPUT", "price_input"},
        {"HAZARDKIT_PRICE_OUTPUT", "price_output"},
        {"HAZARDKIT_TOKEN_ENV", "token_env"},
        {"HAZARDKIT_JOBS", "jobs"},
    };
    for (const auto& [env, key] : kEnvKeys) {
        const char* value = std::getenv(env);
        if (value != nullptr && *value != '\0') {
            apply_key(config, key, value, std::string("env ") + env);
        }
    }
}

void apply_overrides(Config& config, const ConfigOverrides& o) {
    if (o.endpoint_url) config.endpoint_url = *o.endpoint_url;
    if (o.model_name) config.model_name = *o.model_name;
    if (o.backend) config.backend = *o.backend;
    if (o.fixture_path) config.fixture_path = *o.fixture_path;
    if (o.replay_strict) config.replay_strict = *o.replay_strict;
    if (o.rate_limit_rpm) config.rate_limit_rpm = *o.rate_limit_rpm;
    if (o.corpus_dir) config.corpus_dir = *o.corpus_dir;
    if (o.output_dir) config.output_dir = *o.output_dir;
    if (o.taxonomy_file) config.taxonomy_file = *o.taxonomy_file;
    if (o.politeness_delay_ms) config.politeness_delay_ms = *o.politeness_delay_ms;
    if (o.temperature) config.temperature = *o.temperature;
    if (o.max_output_tokens) config.max_output_tokens = *o.max_output_tokens;
    if (o.token_env) config.token_env = *o.token_env;
    if (o.jobs) config.jobs = *o.jobs;
}

void validate_config(const Config& config) {
    if (config.backend != "live" && config.backend != "replay") {
        throw ConfigError("backend must be 'live' or 'replay', got '" + config.backend + "'");
    }
    if (config.rate_limit_rpm < 1) {
        throw ConfigError("rate_limit_rpm must be >= 1");
    }
    if (config.temperature < 0.0 || config.temperature > 2.0) {
        throw ConfigError("temperature must lie in [0, 2]");
    }
    if (config.max_output_tokens <= 0) {
        throw ConfigError("max_output_tokens must be positive");
    }
    if (config.price_input < 0.0 || config.price_output < 0.0) {
        throw ConfigError("prices must be non-negative");
    }
    if (config.jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
}

std::unique_ptr<gateway::Gateway> make_gateway(const Config& config) {
    gateway::PriceTable prices{config.price_input, config.price_output};
    if (config.backend == "live") {
        return std::make_unique<gateway::Gateway>(
            gateway::LiveBackend{config.endpoint_url, config.token_env}, gateway::RetryPolicy{},
            config.rate_limit_rpm, prices);
    }
    return std::make_unique<gateway::Gateway>(
        gateway::ReplayBackend{config.fixture_path, config.replay_strict},
        gateway::RetryPolicy{}, config.rate_limit_rpm, prices);
}

gateway::ChatParams chat_params(const Config& config) {
    return gateway::ChatParams{config.model_name, config.temperature,
                               config.max_output_tokens};
}

}  // namespace hazardkit::cli
