#include "futuremind/protocol.hpp"

#include <algorithm>
#include <array>

#include "futuremind/text.hpp"

namespace futuremind {

std::string_view to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::Think: return "think";
        case SegmentKind::ToolCall: return "tool_call";
        case SegmentKind::Answer: return "answer";
        case SegmentKind::Plain: return "plain";
    }
    return "?";
}

namespace {

struct Opening {
    SegmentKind kind;
    std::size_t pos;
};

std::optional<Opening> next_opening(std::string_view text, std::size_t from) {
    static constexpr std::array<std::pair<std::string_view, SegmentKind>, 3> kOpeners{{
        {tags::kThinkOpen, SegmentKind::Think},
        {tags::kToolCallOpen, SegmentKind::ToolCall},
        {tags::kAnswerOpen, SegmentKind::Answer},
    }};
    std::optional<Opening> best;
    for (const auto& [tag, kind] : kOpeners) {
        auto p = text.find(tag, from);
        if (p != std::string_view::npos && (!best || p < best->pos)) best = Opening{kind, p};
    }
    return best;
}

std::string_view opener_for(SegmentKind k) {
    switch (k) {
        case SegmentKind::Think: return tags::kThinkOpen;
        case SegmentKind::ToolCall: return tags::kToolCallOpen;
        case SegmentKind::Answer: return tags::kAnswerOpen;
        case SegmentKind::Plain: return {};
    }
    return {};
}

std::string_view closer_for(SegmentKind k) {
    switch (k) {
        case SegmentKind::Think: return tags::kThinkClose;
        case SegmentKind::ToolCall: return tags::kToolCallClose;
        case SegmentKind::Answer: return tags::kAnswerClose;
        case SegmentKind::Plain: return {};
    }
    return {};
}

}  // namespace

DecodedCall decode_tool_call(std::string_view body) {
    auto trimmed = text::trim(body);
    auto doc = json::parse(trimmed.begin(), trimmed.end(), nullptr, false);
    if (doc.is_discarded()) return {std::nullopt, "MalformedToolCall: body is not valid JSON"};
    if (!doc.is_object()) return {std::nullopt, "MalformedToolCall: body is not a JSON object"};
    auto name = doc.find("name");
    if (name == doc.end() || !name->is_string() || name->get<std::string>().empty()) {
        return {std::nullopt, "MalformedToolCall: missing \"name\""};
    }
    auto args = doc.find("arguments");
    if (args == doc.end()) return {std::nullopt, "MalformedToolCall: missing \"arguments\""};
    json arguments = *args;
    if (arguments.is_string()) {
        // Some models emit the arguments object as an encoded string.
        arguments = json::parse(arguments.get<std::string>(), nullptr, false);
    }
    if (!arguments.is_object()) return {std::nullopt, "MalformedToolCall: \"arguments\" is not a JSON object"};
    return {ToolInvocation{name->get<std::string>(), std::move(arguments)}, std::nullopt};
}

std::vector<TurnSegment> parse_assistant_turn(std::string_view text) {
    std::vector<TurnSegment> out;
    std::size_t pos = 0;
    auto emit_plain = [&](std::size_t from, std::size_t to) {
        if (to > from) {
            std::string span(text.substr(from, to - from));
            out.push_back(TurnSegment{SegmentKind::Plain, span, span, std::nullopt, std::nullopt});
        }
    };

    while (pos < text.size()) {
        auto open = next_opening(text, pos);
        if (!open) {
            emit_plain(pos, text.size());
            break;
        }
        emit_plain(pos, open->pos);

        const auto inner_begin = open->pos + opener_for(open->kind).size();
        std::size_t inner_end = std::string_view::npos;
        std::size_t span_end = std::string_view::npos;
        bool terminated = true;

        auto close = text.find(closer_for(open->kind), inner_begin);
        if (open->kind == SegmentKind::Answer) {
            // A second <answer> before any </answer> is taken as the closing tag.
            auto stray = text.find(tags::kAnswerOpen, inner_begin);
            if (stray != std::string_view::npos && (close == std::string_view::npos || stray < close)) {
                inner_end = stray;
                span_end = stray + tags::kAnswerOpen.size();
            }
        }
        if (span_end == std::string_view::npos) {
            if (close != std::string_view::npos) {
                inner_end = close;
                span_end = close + closer_for(open->kind).size();
            } else {
                terminated = false;
                inner_end = text.size();
                if (open->kind == SegmentKind::Think) {
                    // Unclosed reasoning stops at the next recognized block.
                    if (auto next = next_opening(text, inner_begin)) inner_end = next->pos;
                }
                span_end = inner_end;
            }
        }

        TurnSegment seg;
        seg.kind = open->kind;
        seg.text = std::string(text.substr(inner_begin, inner_end - inner_begin));
        seg.source = std::string(text.substr(open->pos, span_end - open->pos));
        if (seg.kind == SegmentKind::ToolCall) {
            if (!terminated) {
                seg.error = "MalformedToolCall: unterminated <tool_call> block";
            } else {
                auto decoded = decode_tool_call(seg.text);
                seg.invocation = std::move(decoded.invocation);
                seg.error = std::move(decoded.error);
            }
        }
        out.push_back(std::move(seg));
        pos = span_end;
    }
    return out;
}

std::optional<std::string> extract_final_answer(const std::vector<TurnSegment>& segments) {
    for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
        if (it->kind == SegmentKind::Answer) return std::string(text::trim(it->text));
    }
    return std::nullopt;
}

std::string render_tool_call(const ToolInvocation& call) {
    ordered_json body;
    body["name"] = call.name;
    body["arguments"] = call.arguments;
    return std::string(tags::kToolCallOpen) + "\n" + body.dump() + "\n" + std::string(tags::kToolCallClose);
}

std::string render_segments(const std::vector<TurnSegment>& segments) {
    std::string out;
    for (const auto& s : segments) {
        if (s.kind == SegmentKind::Plain) {
            out += s.text;
        } else {
            out += opener_for(s.kind);
            out += s.text;
            out += closer_for(s.kind);
        }
    }
    return out;
}

std::string render_tool_block(const std::vector<ToolSchema>& schemas) {
    if (schemas.empty()) throw ProtocolError("EmptyRegistry: no tools to render");
    std::string out =
        "# Tools\n\n"
        "You may call one or more functions to assist with the user query.\n\n"
        "You are provided with function signatures within <tools></tools> XML tags:\n"
        "<tools>\n";
    for (const auto& s : schemas) {
        ordered_json fn;
        fn["name"] = s.name;
        fn["description"] = s.description;
        fn["parameters"] = s.parameters;
        ordered_json desc;
        desc["type"] = "function";
        desc["function"] = std::move(fn);
        out += desc.dump();
        out += '\n';
    }
    out +=
        "</tools>\n\n"
        "For each function call, return a json object with function name and arguments within "
        "<tool_call></tool_call> XML tags:\n"
        "<tool_call>\n"
        "{\"name\": <function-name>, \"arguments\": <args-json-object>}\n"
        "</tool_call>";
    return out;
}

std::string render_tool_response(std::string_view /*name*/, std::string_view content) {
    std::string out(tags::kToolResponseOpen);
    out += content;
    out += tags::kToolResponseClose;
    return out;
}

std::optional<std::string> parse_tool_response(std::string_view framed) {
    if (!framed.starts_with(tags::kToolResponseOpen) || !framed.ends_with(tags::kToolResponseClose) ||
        framed.size() < tags::kToolResponseOpen.size() + tags::kToolResponseClose.size()) {
        return std::nullopt;
    }
    framed.remove_prefix(tags::kToolResponseOpen.size());
    framed.remove_suffix(tags::kToolResponseClose.size());
    return std::string(framed);
}

SearchO1Turn parse_search_o1_turn(std::string_view text) {
    SearchO1Turn out;
    std::size_t pos = 0;
    std::size_t after_last = 0;
    while (true) {
        auto b = text.find(tags::kBeginSearchQuery, pos);
        if (b == std::string_view::npos) break;
        auto inner = b + tags::kBeginSearchQuery.size();
        auto e = text.find(tags::kEndSearchQuery, inner);
        if (e == std::string_view::npos) {
            out.unterminated_query = true;
            break;
        }
        auto q = text::trim(text.substr(inner, e - inner));
        if (!q.empty()) out.queries.emplace_back(q);
        pos = e + tags::kEndSearchQuery.size();
        after_last = pos;
    }
    out.answer_continuation = std::string(text.substr(after_last));
    return out;
}

std::string render_search_result(std::string_view results) {
    std::string out(tags::kBeginSearchResult);
    out += results;
    out += tags::kEndSearchResult;
    return out;
}

ToolSchema parallel_search_schema() {
    ToolSchema s;
    s.name = "google_search";
    s.description =
        "You should invoke the Parallel_Search Tool (google) whenever the user's query falls into one of the "
        "following categories:\n"
        "1. Your internal knowledge base and training data are insufficient to answer the question accurately.\n"
        "2. The user asks about a specific example, product, or piece of information that you can retrieve in "
        "greater detail via the web.\n"
        "3. The question involves the latest data, dynamic information, or any knowledge that postdates your "
        "training cutoff and requires real-time updates.\n"
        "4. The answer exists in external knowledge sources you cannot directly access; you must search to "
        "retrieve it.\n"
        "5. Although you possess general knowledge of the topic, an online search would yield more detailed or "
        "up-to-date information (e.g. current buzzwords or trending topics).\n"
        "6. You encounter an unfamiliar term or concept and must avoid fabrication by verifying it through the "
        "search tool.\n"
        "7. You need to consult a product manual or official specification to support your response.\n\n"
        "The search tool supports both parallel and sequential queries:\n"
        "1. If multiple searches are independent, you may issue them in parallel.\n"
        "2. If queries depend on each other (i.e. require ordered steps), perform them sequentially.";
    s.parameters = ordered_json::parse(R"({
  "type": "object",
  "properties": {
    "queries": {
      "type": "array",
      "items": {"type": "string"},
      "description": "List of search keywords:- Parallel search: supply multiple keywords at once;- Iterative search: supply a single-element array.",
      "examples": [
        {"queries": ["Xiaomi SU7 Ultra official price", "Tesla Model S latest price"]},
        {"queries": ["Mishi wolffin fish namer"]}
      ]
    }
  },
  "required": ["queries"]
})");
    return s;
}

ToolSchema futuremind_schema() {
    ToolSchema s;
    s.name = "futuremind";
    s.description =
        "Upon receiving a query, the FutureMind Tool is invoked first to obtain a systematic thinking pattern and "
        "solution roadmap for the problem.\n\n"
        "For retrieval-oriented questions:\n"
        "1. It produces a structured problem-solving workflow and retrieval strategy.\n"
        "2. It explicitly delineates the logical chain from \"Problem Definition\" through \"Condition "
        "Decomposition\" to \"Conclusion Derivation.\"\n"
        "3. It provides executable search sequences and combined query conditions as retrieval guidance, thereby "
        "enhancing information acquisition efficiency and ensuring retrieval accuracy.";
    s.parameters = ordered_json::parse(R"({
  "type": "object",
  "properties": {
    "query": {
      "type": "string",
      "description": "A query that requires systematic problem analysis and retrieval-strategy formulation"
    }
  },
  "required": ["query"]
})");
    return s;
}

}  // namespace futuremind
