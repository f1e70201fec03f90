#include "futuremind/orchestrator.hpp"

#include <algorithm>
#include <cctype>

#include "futuremind/protocol.hpp"
#include "futuremind/text.hpp"

namespace futuremind {

namespace {

constexpr std::string_view kSearchCanonical = "googlesearch";
constexpr std::string_view kFutureMindCanonical = "futuremind";
constexpr std::string_view kInvalidToolName = "invalid_tool_call";

const std::vector<std::string> kSearchAliases{"parallelsearch", "parallelsearchgoogle", "search", "websearch"};

std::vector<std::string> string_list(const json& v) {
    std::vector<std::string> out;
    if (v.is_string()) {
        out.push_back(v.get<std::string>());
    } else if (v.is_array()) {
        for (const auto& item : v) {
            if (!item.is_string()) throw PipelineError("expected a list of strings, got " + v.dump());
            out.push_back(item.get<std::string>());
        }
    } else {
        throw PipelineError("expected a string or a list of strings, got " + v.dump());
    }
    return out;
}

}  // namespace

std::string canonical_tool_name(std::string_view name) {
    std::string out;
    for (char c : name) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
    }
    return out;
}

void ToolRegistry::add(ToolSchema schema, ToolHandler handler, std::vector<std::string> aliases) {
    auto canonical = canonical_tool_name(schema.name);
    if (contains(canonical)) throw PipelineError("duplicate tool name: " + schema.name);
    for (auto& a : aliases) a = canonical_tool_name(a);
    entries_.push_back(Entry{std::move(schema), std::move(handler), std::move(aliases)});
}

const ToolRegistry::Entry* ToolRegistry::find(std::string_view name) const {
    auto canonical = canonical_tool_name(name);
    for (const auto& e : entries_) {
        if (canonical_tool_name(e.schema.name) == canonical) return &e;
        if (std::find(e.aliases.begin(), e.aliases.end(), canonical) != e.aliases.end()) return &e;
    }
    return nullptr;
}

std::vector<ToolSchema> ToolRegistry::schemas() const {
    std::vector<ToolSchema> out;
    for (const auto& e : entries_) out.push_back(e.schema);
    return out;
}

ToolHandler make_search_handler(ParallelSearch& search, RenderOptions render) {
    return [&search, render](const json& args) {
        std::vector<std::string> queries;
        if (args.contains("queries")) {
            queries = string_list(args.at("queries"));
        } else if (args.contains("query")) {
            queries = string_list(args.at("query"));
        } else {
            throw PipelineError("search arguments need \"queries\"");
        }
        ToolOutput out;
        try {
            out.content = render_hits(search.run(queries, out.ledger), render);
        } catch (const AllQueriesFailed& e) {
            out.content = std::string("Error: ") + e.what();
        }
        return out;
    };
}

ToolHandler make_futuremind_handler(const ThinkingTool& tool) {
    return [&tool](const json& args) {
        if (!args.contains("query")) throw PipelineError("futuremind arguments need \"query\"");
        std::string query;
        for (const auto& part : string_list(args.at("query"))) {
            if (!query.empty()) query += ' ';
            query += part;
        }
        auto result = tool(query);
        ToolOutput out;
        out.content = result.plan.raw;
        out.ledger = result.ledger;
        out.plan = std::move(result.plan);
        return out;
    };
}

ToolRegistry make_tc_registry(ParallelSearch& search, RenderOptions render) {
    ToolRegistry r;
    r.add(parallel_search_schema(), make_search_handler(search, render), kSearchAliases);
    return r;
}

ToolRegistry make_tc_fm_registry(ParallelSearch& search, const ThinkingTool& tool, RenderOptions render) {
    ToolRegistry r;
    r.add(parallel_search_schema(), make_search_handler(search, render), kSearchAliases);
    r.add(futuremind_schema(), make_futuremind_handler(tool));
    return r;
}

// --- prompts -------------------------------------------------------------------

namespace {

constexpr std::string_view kThinkAnswerInstruction =
    "You FIRST think about the reasoning process as an internal monologue and then provide the final answer. "
    "The reasoning process MUST BE enclosed within <think> </think> tags. The final answer MUST BE put in "
    "<answer> </answer> tags.";

}  // namespace

std::string tc_user_prompt(std::string_view question) {
    std::string out = "Question: ";
    out += question;
    out += '\n';
    out += kThinkAnswerInstruction;
    return out;
}

std::string tc_fm_user_prompt(std::string_view question) {
    return tc_user_prompt(question) +
           " First, invoke the \"futuremind\" tool to obtain a systematic thinking strategy and solution roadmap "
           "for the given Question (original question text verbatim). After that, you may call the search tool "
           "multiple times as needed to gather or verify information until you have sufficient material to answer. "
           "Once all necessary information is confirmed, provide the final answer using concise, focused language "
           "without unnecessary elaboration.";
}

std::string naive_prompt(std::string_view question) {
    std::string out =
        "Please answer the below questions.You should think step by step to solve it.The final answer MUST BE put "
        "in <answer> </answer> tags.\n\n[Question:]\n";
    out += question;
    return out;
}

std::string rag_prompt(std::string_view question, std::string_view documents) {
    std::string out =
        "You are a knowledgeable assistant that utilizes the provided documents to answer the user\xE2\x80\x99s "
        "question accurately.\n\n"
        "Guidelines:\n"
        "- Analyze the provided documents to extract relevant information. Synthesize the information to "
        "formulate a coherent and accurate answer.\n"
        "- Ensure that your response directly addresses the user\xE2\x80\x99s question using the information from "
        "the documents.\n\n"
        "[Question:]\n";
    out += question;
    out += "\n\n[Documents:]\n";
    out += documents;
    return out;
}

std::string search_o1_prompt(std::string_view question, std::int64_t limit) {
    std::string out =
        "You are a reasoning assistant with the ability to perform web searches to help you answer the user's "
        "question accurately. You have special tools:\n"
        "To perform a search: write <|begin_search_query|> your query here <|end_search_query|>.\n"
        "Then, the system will search and analyze relevant web pages, then provide you with helpful information "
        "in the format <|begin_search_result|> ...search results... <|end_search_result|>.\n"
        "You can repeat the search process multiple times if necessary. The maximum number of search attempts is "
        "limited to ";
    out += std::to_string(limit);
    out +=
        ".\n"
        "Once you have all the information you need, continue your reasoning.\n"
        "Example:\n"
        "Question: \"...\"\n"
        "Assistant thinking steps:\n"
        "- I might need to look up details about ...\n"
        "Assistant:\n"
        "<|begin_search_query|>...<|end_search_query|>\n"
        "(System returns processed information from relevant web pages)\n"
        "Assistant continues reasoning with the new information...\n"
        "Remember:\n"
        "- Use <|begin_search_query|> to request a web search and end with <|end_search_query|>.\n"
        "- When done searching, continue your reasoning.\n\n"
        "The final answer MUST BE put in <answer> </answer> tags.\n\n"
        "Question: ";
    out += question;
    return out;
}

// --- pipelines -----------------------------------------------------------------

namespace {

// Runs one completion and records it; returns nullopt after marking the record failed.
std::optional<std::string> take_turn(RunRecord& rec, const ModelRef& model, Gateway& gateway) {
    try {
        auto completion = gateway.complete(model, rec.transcript);
        rec.ledger += completion.ledger();
        rec.transcript.push_back(ChatMessage::assistant(completion.text));
        return completion.text;
    } catch (const std::exception& e) {
        rec.status = RunStatus::Failed;
        rec.notes.push_back(std::string("model call failed: ") + e.what());
        return std::nullopt;
    }
}

RunRecord new_record(const Question& q, Pipeline p) {
    RunRecord rec;
    rec.question_id = q.id;
    rec.pipeline = p;
    return rec;
}

void degrade(RunRecord& rec, std::string note) {
    if (rec.status == RunStatus::Ok) rec.status = RunStatus::Degraded;
    rec.notes.push_back(std::move(note));
}

// Answer tags when present, else the whole reply with a degraded flag.
void settle_answer(RunRecord& rec, std::string_view reply, bool flag_untagged) {
    if (auto answer = extract_final_answer(parse_assistant_turn(reply))) {
        rec.final_answer = *answer;
        return;
    }
    rec.final_answer = std::string(text::trim(reply));
    if (flag_untagged) degrade(rec, "reply carried no <answer> tags; using the full reply");
}

void dispatch(RunRecord& rec, const TurnSegment& seg, const ToolRegistry& tools) {
    if (!seg.invocation) {
        rec.transcript.push_back(ChatMessage::tool(
            std::string(kInvalidToolName),
            render_tool_response(kInvalidToolName, "Error: " + seg.error.value_or("MalformedToolCall"))));
        return;
    }
    const auto& call = *seg.invocation;
    const auto* entry = tools.find(call.name);
    if (entry == nullptr) {
        rec.transcript.push_back(ChatMessage::tool(
            call.name, render_tool_response(call.name, "Error: unknown tool \"" + call.name + "\"")));
        return;
    }
    const auto& name = entry->schema.name;
    try {
        auto out = entry->handler(call.arguments);
        rec.ledger += out.ledger;
        if (out.plan) rec.plans.push_back(std::move(*out.plan));
        rec.transcript.push_back(ChatMessage::tool(name, render_tool_response(name, out.content)));
    } catch (const std::exception& e) {
        rec.transcript.push_back(ChatMessage::tool(name, render_tool_response(name, std::string("Error: ") + e.what())));
    }
}

void forced_answer_turn(RunRecord& rec, const ModelRef& model, Gateway& gateway) {
    rec.transcript.push_back(ChatMessage::user(std::string(kForcedAnswerPrompt)));
    rec.forced_answer = true;
    auto reply = take_turn(rec, model, gateway);
    if (!reply) return;
    if (auto answer = extract_final_answer(parse_assistant_turn(*reply))) {
        rec.final_answer = *answer;
    } else {
        degrade(rec, "forced-answer turn carried no <answer> tags");
    }
}

}  // namespace

RunRecord run_pipeline(const Question& question, const PipelineConfig& config, const ModelRef& student,
                       Gateway& gateway, const ToolRegistry& tools) {
    if (config.step_budget < 1) throw PipelineError("step_budget must be at least 1");
    const bool with_thinking = config.pipeline == Pipeline::TcFm;
    if (config.pipeline != Pipeline::Tc && !with_thinking) {
        throw PipelineError("run_pipeline handles tc and tc_fm only");
    }
    if (!tools.contains(kSearchCanonical) || tools.contains(kFutureMindCanonical) != with_thinking ||
        tools.size() != (with_thinking ? 2u : 1u)) {
        throw PipelineError(with_thinking ? "tc_fm needs exactly the search and futuremind tools"
                                          : "tc needs exactly the search tool");
    }

    RunRecord rec = new_record(question, config.pipeline);
    rec.transcript.push_back(
        ChatMessage::system(std::string(kSystemPrompt) + "\n\n" + render_tool_block(tools.schemas())));
    rec.transcript.push_back(
        ChatMessage::user(with_thinking ? tc_fm_user_prompt(question.text) : tc_user_prompt(question.text)));

    for (std::int64_t step = 1; step <= config.step_budget; ++step) {
        auto reply = take_turn(rec, student, gateway);
        if (!reply) return rec;
        rec.steps_used = step;

        auto segments = parse_assistant_turn(*reply);
        bool called = false;
        for (const auto& seg : segments) {
            if (seg.kind != SegmentKind::ToolCall) continue;
            called = true;
            dispatch(rec, seg, tools);
        }
        if (called) continue;
        if (auto answer = extract_final_answer(segments)) {
            rec.final_answer = *answer;
            return rec;
        }
        if (step < config.step_budget) rec.transcript.push_back(ChatMessage::user(std::string(kContinuePrompt)));
    }

    if (config.force_answer_on_budget) {
        forced_answer_turn(rec, student, gateway);
    } else {
        degrade(rec, "step budget exhausted without an answer");
    }
    return rec;
}

RunRecord run_naive(const Question& question, const ModelRef& model, Gateway& gateway) {
    RunRecord rec = new_record(question, Pipeline::Naive);
    rec.transcript.push_back(ChatMessage::user(naive_prompt(question.text)));
    auto reply = take_turn(rec, model, gateway);
    if (!reply) return rec;
    rec.steps_used = 1;
    settle_answer(rec, *reply, true);
    return rec;
}

RunRecord run_standard_rag(const Question& question, const ModelRef& model, Gateway& gateway, ParallelSearch& search,
                           std::size_t top_k, RenderOptions render) {
    RunRecord rec = new_record(question, Pipeline::Rag);
    std::string documents;
    try {
        auto results = search.run({question.text}, rec.ledger);
        for (auto& group : results) {
            if (group.hits.size() > top_k) group.hits.resize(top_k);
        }
        documents = render_hits(results, render);
    } catch (const std::exception& e) {
        documents = std::string(kNoResults);
        degrade(rec, std::string("retrieval failed: ") + e.what());
    }
    rec.transcript.push_back(ChatMessage::user(rag_prompt(question.text, documents)));
    auto reply = take_turn(rec, model, gateway);
    if (!reply) return rec;
    rec.steps_used = 1;
    settle_answer(rec, *reply, false);
    return rec;
}

RunRecord run_search_o1(const Question& question, const ModelRef& model, Gateway& gateway, ParallelSearch& search,
                        std::int64_t limit, RenderOptions render) {
    if (limit < 1) throw PipelineError("search limit must be at least 1");
    RunRecord rec = new_record(question, Pipeline::SearchO1);
    rec.transcript.push_back(ChatMessage::user(search_o1_prompt(question.text, limit)));

    std::int64_t attempts = 0;
    while (true) {
        auto reply = take_turn(rec, model, gateway);
        if (!reply) return rec;
        ++rec.steps_used;
        auto turn = parse_search_o1_turn(*reply);
        if (turn.unterminated_query) rec.notes.push_back("unterminated search query tag ignored");
        if (turn.queries.empty()) {
            settle_answer(rec, turn.answer_continuation.empty() ? *reply : turn.answer_continuation, true);
            return rec;
        }
        if (attempts >= limit) {
            forced_answer_turn(rec, model, gateway);
            return rec;
        }
        ++attempts;
        std::string results;
        try {
            results = render_hits(search.run({turn.queries.front()}, rec.ledger), render);
        } catch (const std::exception& e) {
            results = std::string(kNoResults);
            rec.notes.push_back(std::string("search failed: ") + e.what());
        }
        rec.transcript.push_back(ChatMessage::user(render_search_result(results)));
    }
}

RunRecord run_question(const Question& question, const PipelineConfig& config, const PipelineContext& context) {
    auto need_search = [&]() -> ParallelSearch& {
        if (context.search == nullptr) throw PipelineError("pipeline needs a search backend");
        return *context.search;
    };
    switch (config.pipeline) {
        case Pipeline::Naive:
            return run_naive(question, context.student, context.gateway);
        case Pipeline::Rag:
            return run_standard_rag(question, context.student, context.gateway, need_search(), config.rag_top_k,
                                    config.render);
        case Pipeline::SearchO1:
            return run_search_o1(question, context.student, context.gateway, need_search(), config.search_limit,
                                 config.render);
        case Pipeline::Tc:
            return run_pipeline(question, config, context.student, context.gateway,
                                make_tc_registry(need_search(), config.render));
        case Pipeline::TcFm:
            if (context.thinking == nullptr) throw PipelineError("tc_fm needs a teacher model");
            return run_pipeline(question, config, context.student, context.gateway,
                                make_tc_fm_registry(need_search(), *context.thinking, config.render));
    }
    throw PipelineError("unknown pipeline");
}

bool transcript_well_formed(const ChatTranscript& transcript) {
    if (transcript.empty()) return true;
    if (transcript.front().role != Role::System && transcript.front().role != Role::User) return false;
    std::size_t pending_calls = 0;
    Role prev = transcript.front().role;
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        const auto& m = transcript[i];
        if (!m.well_formed()) return false;
        if (i > 0 && m.role == Role::Assistant && prev == Role::Assistant) return false;
        if (m.role == Role::Assistant) {
            pending_calls = 0;
            for (const auto& seg : parse_assistant_turn(m.content)) {
                if (seg.kind == SegmentKind::ToolCall) ++pending_calls;
            }
        } else if (m.role == Role::Tool) {
            if (pending_calls == 0) return false;
            --pending_calls;
        } else if (i > 0) {
            pending_calls = 0;
        }
        prev = m.role;
    }
    return true;
}

}  // namespace futuremind
