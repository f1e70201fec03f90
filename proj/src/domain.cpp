#include "futuremind/domain.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace futuremind {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<std::string_view, E>, N>& table, std::string_view s) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    return std::nullopt;
}

constexpr std::array<std::pair<std::string_view, Dataset>, 5> kDatasets{{
    {"2wiki", Dataset::TwoWiki},
    {"musique", Dataset::Musique},
    {"bamboogle", Dataset::Bamboogle},
    {"frames", Dataset::Frames},
    {"custom", Dataset::Custom},
}};

constexpr std::array<std::pair<std::string_view, Role>, 4> kRoles{{
    {"system", Role::System},
    {"user", Role::User},
    {"assistant", Role::Assistant},
    {"tool", Role::Tool},
}};

constexpr std::array<std::pair<std::string_view, Pipeline>, 5> kPipelines{{
    {"naive", Pipeline::Naive},
    {"rag", Pipeline::Rag},
    {"search_o1", Pipeline::SearchO1},
    {"tc", Pipeline::Tc},
    {"tc_fm", Pipeline::TcFm},
}};

template <typename E, std::size_t N>
std::string_view reverse(const std::array<std::pair<std::string_view, E>, N>& table, E v) {
    for (const auto& [name, value] : table) {
        if (value == v) return name;
    }
    return "?";
}

}  // namespace

std::string_view to_string(Dataset d) { return reverse(kDatasets, d); }
std::string_view to_string(Role r) { return reverse(kRoles, r); }
std::string_view to_string(Pipeline p) { return reverse(kPipelines, p); }

std::string_view to_string(TokenSource s) {
    return s == TokenSource::EndpointReported ? "endpoint_reported" : "estimated";
}

std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Ok: return "ok";
        case RunStatus::Degraded: return "degraded";
        case RunStatus::Failed: return "failed";
    }
    return "?";
}

char to_char(StrategyKind k) {
    switch (k) {
        case StrategyKind::A: return 'A';
        case StrategyKind::B: return 'B';
        case StrategyKind::C: return 'C';
    }
    return '?';
}

std::optional<Dataset> parse_dataset(std::string_view s) { return lookup(kDatasets, s); }
std::optional<Role> parse_role(std::string_view s) { return lookup(kRoles, s); }
std::optional<Pipeline> parse_pipeline(std::string_view s) { return lookup(kPipelines, s); }

std::optional<StrategyKind> parse_strategy_kind(char c) {
    switch (c) {
        case 'A': case 'a': return StrategyKind::A;
        case 'B': case 'b': return StrategyKind::B;
        case 'C': case 'c': return StrategyKind::C;
        default: return std::nullopt;
    }
}

ChatMessage ChatMessage::system(std::string content) { return {Role::System, std::move(content), std::nullopt}; }
ChatMessage ChatMessage::user(std::string content) { return {Role::User, std::move(content), std::nullopt}; }
ChatMessage ChatMessage::assistant(std::string content) { return {Role::Assistant, std::move(content), std::nullopt}; }
ChatMessage ChatMessage::tool(std::string name, std::string content) {
    return {Role::Tool, std::move(content), std::move(name)};
}

GenerationParams default_generation_params() { return GenerationParams{}; }

bool RetrievalGuidance::empty() const {
    return keywords.empty() && resources.empty() && sequence.empty() && query.empty() && screening.empty();
}

CostLedger& CostLedger::operator+=(const CostLedger& other) {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    search_queries += other.search_queries;
    if (other.token_source == TokenSource::Estimated) token_source = TokenSource::Estimated;
    return *this;
}

CostLedger merge_ledgers(const CostLedger& a, const CostLedger& b) {
    CostLedger out = a;
    out += b;
    return out;
}

// --- JSON ------------------------------------------------------------------

void to_json(json& j, const ChatMessage& m) {
    j = json{{"role", to_string(m.role)}, {"content", m.content}};
    if (m.tool_name) j["tool_name"] = *m.tool_name;
}

void from_json(const json& j, ChatMessage& m) {
    auto role = parse_role(j.at("role").get<std::string>());
    if (!role) throw Error("unknown chat role: " + j.at("role").dump());
    m.role = *role;
    m.content = j.at("content").get<std::string>();
    if (j.contains("tool_name")) {
        m.tool_name = j.at("tool_name").get<std::string>();
    } else {
        m.tool_name.reset();
    }
    if (!m.well_formed()) throw Error("tool_name must be present exactly when role is tool");
}

void to_json(json& j, const GenerationParams& p) {
    j = json{{"max_tokens", p.max_tokens},
             {"temperature", p.temperature},
             {"top_p", p.top_p},
             {"top_k", p.top_k},
             {"repetition_penalty", p.repetition_penalty}};
}

void from_json(const json& j, GenerationParams& p) {
    GenerationParams d;
    p.max_tokens = j.value("max_tokens", d.max_tokens);
    p.temperature = j.value("temperature", d.temperature);
    p.top_p = j.value("top_p", d.top_p);
    p.top_k = j.value("top_k", d.top_k);
    p.repetition_penalty = j.value("repetition_penalty", d.repetition_penalty);
}

void to_json(json& j, const CostLedger& l) {
    j = json{{"input_tokens", l.input_tokens},
             {"output_tokens", l.output_tokens},
             {"search_queries", l.search_queries},
             {"token_source", to_string(l.token_source)}};
}

void from_json(const json& j, CostLedger& l) {
    l.input_tokens = j.value("input_tokens", std::int64_t{0});
    l.output_tokens = j.value("output_tokens", std::int64_t{0});
    l.search_queries = j.value("search_queries", std::int64_t{0});
    l.token_source = j.value("token_source", std::string{"endpoint_reported"}) == "estimated"
                         ? TokenSource::Estimated
                         : TokenSource::EndpointReported;
    if (l.input_tokens < 0 || l.output_tokens < 0 || l.search_queries < 0) {
        throw Error("ledger counts must be nonnegative");
    }
}

void to_json(json& j, const ThinkingPlan& p) {
    std::string strategy;
    for (auto k : p.strategy) strategy.push_back(to_char(k));
    j = json{{"objectives", p.objectives},
             {"attributes", p.attributes},
             {"targets", p.targets},
             {"dimensions", p.dimensions},
             {"mechanism", p.mechanism},
             {"conditions", p.conditions},
             {"strategy", strategy},
             {"guidance",
              {{"keywords", p.guidance.keywords},
               {"resources", p.guidance.resources},
               {"sequence", p.guidance.sequence},
               {"query", p.guidance.query},
               {"screening", p.guidance.screening}}},
             {"raw", p.raw},
             {"parse_degraded", p.parse_degraded}};
}

void from_json(const json& j, ThinkingPlan& p) {
    p.objectives = j.value("objectives", "");
    p.attributes = j.value("attributes", "");
    p.targets = j.value("targets", "");
    p.dimensions = j.value("dimensions", std::vector<std::string>{});
    p.mechanism = j.value("mechanism", "");
    p.conditions = j.value("conditions", std::vector<std::string>{});
    p.strategy.clear();
    for (char c : j.value("strategy", std::string{})) {
        if (auto k = parse_strategy_kind(c)) p.strategy.push_back(*k);
    }
    if (j.contains("guidance")) {
        const auto& g = j.at("guidance");
        p.guidance.keywords = g.value("keywords", "");
        p.guidance.resources = g.value("resources", "");
        p.guidance.sequence = g.value("sequence", "");
        p.guidance.query = g.value("query", "");
        p.guidance.screening = g.value("screening", "");
    }
    p.raw = j.value("raw", "");
    p.parse_degraded = j.value("parse_degraded", false);
}

void to_json(json& j, const RunRecord& r) {
    j = json{{"question_id", r.question_id},
             {"pipeline", to_string(r.pipeline)},
             {"transcript", r.transcript},
             {"final_answer", r.final_answer ? json(*r.final_answer) : json(nullptr)},
             {"steps_used", r.steps_used},
             {"forced_answer", r.forced_answer},
             {"plans", r.plans},
             {"ledger", r.ledger},
             {"status", to_string(r.status)},
             {"notes", r.notes}};
}

void from_json(const json& j, RunRecord& r) {
    r.question_id = j.at("question_id").get<std::string>();
    auto p = parse_pipeline(j.at("pipeline").get<std::string>());
    if (!p) throw Error("unknown pipeline in record: " + j.at("pipeline").dump());
    r.pipeline = *p;
    r.transcript = j.value("transcript", ChatTranscript{});
    if (j.contains("final_answer") && !j.at("final_answer").is_null()) {
        r.final_answer = j.at("final_answer").get<std::string>();
    } else {
        r.final_answer.reset();
    }
    r.steps_used = j.value("steps_used", std::int64_t{0});
    r.forced_answer = j.value("forced_answer", false);
    r.plans = j.value("plans", std::vector<ThinkingPlan>{});
    r.ledger = j.value("ledger", CostLedger{});
    auto status = j.value("status", std::string{"ok"});
    r.status = status == "failed" ? RunStatus::Failed : status == "degraded" ? RunStatus::Degraded : RunStatus::Ok;
    r.notes = j.value("notes", std::vector<std::string>{});
}

std::string to_jsonl_line(const RunRecord& r) { return json(r).dump(); }

RunRecord run_record_from_jsonl_line(std::string_view line) {
    return json::parse(line).get<RunRecord>();
}

}  // namespace futuremind
