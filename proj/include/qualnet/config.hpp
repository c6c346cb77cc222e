#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qualnet/provider.hpp"

namespace qualnet::config {

// Reads the TOML subset used by service config files: [table] headers,
// bare keys, basic and literal strings, integers, floats, booleans, and
// single-line arrays. Returns {table: {key: value}}; root keys sit at the
// top level. Throws InvalidInput with the line number on anything else.
nlohmann::json parse_toml(std::string_view text);

struct ServiceConfig {
    std::string bind = "127.0.0.1";
    std::uint16_t port = 8080;
    std::filesystem::path data_dir = "qualnet-data";
    std::string provider = "mock";  // same syntax as the CLI --provider flag
    std::size_t parallelism = 4;
    std::size_t workers = 2;
    std::optional<std::filesystem::path> prompts_dir;
    std::optional<std::filesystem::path> cue_rules;
    provider::HttpSettings http;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

// Process environment.
std::optional<std::string> getenv_lookup(const char* name);

// Applies QUALNET_BIND ("host" or "host:port") and QUALNET_API_KEY.
void apply_env(ServiceConfig& config, const EnvLookup& env = getenv_lookup);

ServiceConfig from_toml(std::string_view text, const EnvLookup& env = getenv_lookup);
ServiceConfig load(const std::filesystem::path& path, const EnvLookup& env = getenv_lookup);

}  // namespace qualnet::config
