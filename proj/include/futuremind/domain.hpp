#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace futuremind {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Dataset { TwoWiki, Musique, Bamboogle, Frames, Custom };

enum class Role { System, User, Assistant, Tool };

enum class Pipeline { Naive, Rag, SearchO1, Tc, TcFm };

enum class TokenSource { EndpointReported, Estimated };

enum class StrategyKind { A, B, C };

std::string_view to_string(Dataset d);
std::string_view to_string(Role r);
std::string_view to_string(Pipeline p);
std::string_view to_string(TokenSource s);
char to_char(StrategyKind k);

std::optional<Dataset> parse_dataset(std::string_view s);
std::optional<Role> parse_role(std::string_view s);
std::optional<Pipeline> parse_pipeline(std::string_view s);
std::optional<StrategyKind> parse_strategy_kind(char c);

struct Question {
    std::string id;
    std::string text;
    std::vector<std::string> gold_answers;
    Dataset dataset = Dataset::Custom;
};

// tool_name is set exactly when role == Tool; the factories enforce it.
struct ChatMessage {
    Role role = Role::User;
    std::string content;
    std::optional<std::string> tool_name;

    static ChatMessage system(std::string content);
    static ChatMessage user(std::string content);
    static ChatMessage assistant(std::string content);
    static ChatMessage tool(std::string name, std::string content);

    bool well_formed() const { return tool_name.has_value() == (role == Role::Tool); }
    bool operator==(const ChatMessage&) const = default;
};

using ChatTranscript = std::vector<ChatMessage>;

struct GenerationParams {
    std::int64_t max_tokens = 32768;
    double temperature = 0.0;
    double top_p = 0.8;
    std::int64_t top_k = 20;
    double repetition_penalty = 1.05;

    bool operator==(const GenerationParams&) const = default;
};

GenerationParams default_generation_params();

struct ToolSchema {
    std::string name;
    std::string description;
    ordered_json parameters;
};

struct ToolInvocation {
    std::string name;
    json arguments = json::object();

    bool operator==(const ToolInvocation&) const = default;
};

struct RetrievalGuidance {
    std::string keywords;
    std::string resources;
    std::string sequence;
    std::string query;
    std::string screening;

    bool empty() const;
    bool operator==(const RetrievalGuidance&) const = default;
};

struct ThinkingPlan {
    std::string objectives;
    std::string attributes;
    std::string targets;
    std::vector<std::string> dimensions;
    std::string mechanism;
    std::vector<std::string> conditions;
    std::vector<StrategyKind> strategy;  // sorted, unique
    RetrievalGuidance guidance;
    std::string raw;
    bool parse_degraded = false;
};

struct CostLedger {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t search_queries = 0;
    TokenSource token_source = TokenSource::EndpointReported;

    CostLedger& operator+=(const CostLedger& other);
    bool operator==(const CostLedger&) const = default;
};

CostLedger merge_ledgers(const CostLedger& a, const CostLedger& b);

enum class RunStatus { Ok, Degraded, Failed };
std::string_view to_string(RunStatus s);

struct RunRecord {
    std::string question_id;
    Pipeline pipeline = Pipeline::Naive;
    ChatTranscript transcript;
    std::optional<std::string> final_answer;
    std::int64_t steps_used = 0;
    bool forced_answer = false;
    std::vector<ThinkingPlan> plans;
    CostLedger ledger;
    RunStatus status = RunStatus::Ok;
    std::vector<std::string> notes;
};

void to_json(json& j, const ChatMessage& m);
void from_json(const json& j, ChatMessage& m);
void to_json(json& j, const GenerationParams& p);
void from_json(const json& j, GenerationParams& p);
void to_json(json& j, const CostLedger& l);
void from_json(const json& j, CostLedger& l);
void to_json(json& j, const ThinkingPlan& p);
void from_json(const json& j, ThinkingPlan& p);
void to_json(json& j, const RunRecord& r);
void from_json(const json& j, RunRecord& r);

// One RunRecord per line.
std::string to_jsonl_line(const RunRecord& r);
RunRecord run_record_from_jsonl_line(std::string_view line);

}  // namespace futuremind
