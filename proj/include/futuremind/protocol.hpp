#pragma once

// Tagged wire protocol spoken in every prompt and model turn.
//
//   <think>…</think>            reasoning, ignored by the orchestrator
//   <tool_call>{json}</tool_call>  one invocation: {"name": …, "arguments": {…}}
//   <tool_response>…</tool_response>  framing for tool output
//   <answer>…</answer>          final answer, last block wins
//   <tools>…</tools>            tool descriptors inside the system prompt
//   <|begin_search_query|>…<|end_search_query|>    Search-o1 query span
//   <|begin_search_result|>…<|end_search_result|>  Search-o1 result span
//
// Tags are case-sensitive and never nest: the first closing tag ends a block.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "futuremind/domain.hpp"

namespace futuremind {

class ProtocolError : public Error {
public:
    using Error::Error;
};

namespace tags {
inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kToolCallOpen = "<tool_call>";
inline constexpr std::string_view kToolCallClose = "</tool_call>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::string_view kToolResponseOpen = "<tool_response>";
inline constexpr std::string_view kToolResponseClose = "</tool_response>";
inline constexpr std::string_view kBeginSearchQuery = "<|begin_search_query|>";
inline constexpr std::string_view kEndSearchQuery = "<|end_search_query|>";
inline constexpr std::string_view kBeginSearchResult = "<|begin_search_result|>";
inline constexpr std::string_view kEndSearchResult = "<|end_search_result|>";
}  // namespace tags

enum class SegmentKind { Think, ToolCall, Answer, Plain };

std::string_view to_string(SegmentKind k);

struct TurnSegment {
    SegmentKind kind = SegmentKind::Plain;
    std::string text;    // inner content, untrimmed
    std::string source;  // exact span of the original turn, tags included
    std::optional<ToolInvocation> invocation;  // tool_call only, when decodable
    std::optional<std::string> error;          // MalformedToolCall note
};

// Never throws. Concatenating every segment's `source` yields `text`.
std::vector<TurnSegment> parse_assistant_turn(std::string_view text);

std::optional<std::string> extract_final_answer(const std::vector<TurnSegment>& segments);

// Decodes a tool_call body. Returns the invocation or an error note.
struct DecodedCall {
    std::optional<ToolInvocation> invocation;
    std::optional<std::string> error;
};
DecodedCall decode_tool_call(std::string_view body);

std::string render_tool_call(const ToolInvocation& call);

// Re-renders parsed segments into wire text.
std::string render_segments(const std::vector<TurnSegment>& segments);

// Tool-call template with one descriptor per schema. Throws ProtocolError on empty input.
std::string render_tool_block(const std::vector<ToolSchema>& schemas);

std::string render_tool_response(std::string_view name, std::string_view content);
std::optional<std::string> parse_tool_response(std::string_view framed);

struct SearchO1Turn {
    std::vector<std::string> queries;
    std::string answer_continuation;  // text after the last complete query span
    bool unterminated_query = false;
};

SearchO1Turn parse_search_o1_turn(std::string_view text);
std::string render_search_result(std::string_view results);

// The two tools the student can call.
ToolSchema parallel_search_schema();
ToolSchema futuremind_schema();

}  // namespace futuremind
