#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "futuremind/domain.hpp"
#include "futuremind/gateway.hpp"
#include "futuremind/search.hpp"
#include "futuremind/thinking.hpp"

namespace futuremind {

class PipelineError : public Error {
public:
    using Error::Error;
};

struct PipelineConfig {
    Pipeline pipeline = Pipeline::TcFm;
    std::int64_t step_budget = 10;   // assistant turns in the tool loop
    std::int64_t search_limit = 10;  // Search-o1 MAX_SEARCH_LIMIT
    std::size_t rag_top_k = 10;
    bool force_answer_on_budget = true;
    RenderOptions render;
};

inline constexpr std::string_view kSystemPrompt = "You are a helpful assistant.";
inline constexpr std::string_view kForcedAnswerPrompt =
    "Based on the information gathered, provide the final answer in <answer></answer> tags.";
// Sent after a turn that neither calls a tool nor answers.
inline constexpr std::string_view kContinuePrompt =
    "Continue: call a tool if you need more information, otherwise provide the final answer in "
    "<answer></answer> tags.";

struct ToolOutput {
    std::string content;
    CostLedger ledger;
    std::optional<ThinkingPlan> plan;
};

using ToolHandler = std::function<ToolOutput(const json& arguments)>;

// Lower-case alphanumerics only: "Parallel Search", "parallel_search" and "ParallelSearch" coincide.
std::string canonical_tool_name(std::string_view name);

class ToolRegistry {
public:
    struct Entry {
        ToolSchema schema;
        ToolHandler handler;
        std::vector<std::string> aliases;  // canonical forms
    };

    void add(ToolSchema schema, ToolHandler handler, std::vector<std::string> aliases = {});
    const Entry* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    std::vector<ToolSchema> schemas() const;
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<Entry> entries_;
};

// Accepts {"queries": [...]} and the {"query": "..." | [...]} variant models also emit.
ToolHandler make_search_handler(ParallelSearch& search, RenderOptions render = {});
// Accepts {"query": "..."} or a list of strings, joined by spaces.
ToolHandler make_futuremind_handler(const ThinkingTool& tool);

ToolRegistry make_tc_registry(ParallelSearch& search, RenderOptions render = {});
ToolRegistry make_tc_fm_registry(ParallelSearch& search, const ThinkingTool& tool, RenderOptions render = {});

std::string tc_user_prompt(std::string_view question);
std::string tc_fm_user_prompt(std::string_view question);
std::string naive_prompt(std::string_view question);
std::string rag_prompt(std::string_view question, std::string_view documents);
std::string search_o1_prompt(std::string_view question, std::int64_t limit);

// The TC / TC+FM tool loop. One step is one assistant turn; a turn may carry several
// tool calls, dispatched in order. Tool calls take priority over an answer in the same turn.
RunRecord run_pipeline(const Question& question, const PipelineConfig& config, const ModelRef& student,
                       Gateway& gateway, const ToolRegistry& tools);

RunRecord run_naive(const Question& question, const ModelRef& model, Gateway& gateway);

RunRecord run_standard_rag(const Question& question, const ModelRef& model, Gateway& gateway, ParallelSearch& search,
                           std::size_t top_k, RenderOptions render = {});

RunRecord run_search_o1(const Question& question, const ModelRef& model, Gateway& gateway, ParallelSearch& search,
                        std::int64_t limit, RenderOptions render = {});

// Everything a pipeline may need; thinking is required only for tc_fm.
struct PipelineContext {
    Gateway& gateway;
    ModelRef student;
    ParallelSearch* search = nullptr;
    const ThinkingTool* thinking = nullptr;
};

RunRecord run_question(const Question& question, const PipelineConfig& config, const PipelineContext& context);

// Every tool message follows an assistant turn (or sibling tool message) that carries a
// matching tool call, and the first message is system or user.
bool transcript_well_formed(const ChatTranscript& transcript);

}  // namespace futuremind
