#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "futuremind/domain.hpp"
#include "futuremind/evalkit.hpp"
#include "futuremind/gateway.hpp"
#include "futuremind/orchestrator.hpp"
#include "futuremind/search.hpp"
#include "futuremind/thinking.hpp"

namespace futuremind {

// A TOML subset: [dotted.section] headers, `key = value` pairs, # comments, and values that
// are basic or literal strings, integers, floats, booleans, or single-line arrays of those.
// Values are kept uninterpolated so serializing never expands ${VAR} references.
ordered_json parse_config_text(std::string_view text);
std::string serialize_config(const ordered_json& doc);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Expands ${NAME}; an unset variable is a ConfigError naming it. "$$" escapes a dollar.
std::string interpolate_env(std::string_view s, const EnvLookup& env);

struct SearchConfig {
    std::string backend = "fixture";  // fixture | live
    std::filesystem::path corpus;
    LiveWebSearch::Options live;
    ParallelSearchOptions parallel;
};

struct RunConfig {
    std::map<std::string, ModelRef> models;  // student, teacher, judge
    SearchConfig search;
    PipelineConfig pipeline;
    PriceTable prices;
    std::optional<std::filesystem::path> cache_dir;
    std::size_t workers = 4;
    std::filesystem::path output_dir = "out";
    std::filesystem::path prompts_dir;
    int max_retries = 3;
    std::int64_t backoff_ms = 1000;
    std::optional<std::int64_t> token_budget;
    std::ptrdiff_t max_in_flight = 4;
    ordered_json raw;  // uninterpolated document, used for digests and echoing

    const ModelRef& model(const std::string& alias) const;
    bool has_model(const std::string& alias) const { return models.count(alias) != 0; }
};

// Relative paths and scripted:<file> endpoints resolve against base_dir.
RunConfig run_config_from_doc(const ordered_json& doc, const std::filesystem::path& base_dir,
                              const EnvLookup& env = process_env());
RunConfig load_run_config(const std::filesystem::path& file, const EnvLookup& env = process_env());

// Everything a command needs, built from a RunConfig. Scripted endpoints get ScriptedTransports;
// http(s) endpoints check their key variable up front.
struct Runtime {
    RunConfig config;
    std::shared_ptr<ResponseCache> cache;
    std::unique_ptr<Gateway> gateway;
    std::map<std::string, std::shared_ptr<Transport>> transports;
    std::unique_ptr<ParallelSearch> search;
    std::unique_ptr<ThinkingTool> thinking;

    std::size_t transport_calls() const;
};

std::unique_ptr<Runtime> make_runtime(RunConfig config, const EnvLookup& env = process_env());

}  // namespace futuremind
