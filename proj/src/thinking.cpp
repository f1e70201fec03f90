#include "futuremind/thinking.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "futuremind/text.hpp"

namespace futuremind {

namespace {

std::string read_asset(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw MissingAsset("prompt asset not found: " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    auto body = std::string(text::trim(ss.str()));
    if (body.empty()) throw MissingAsset("prompt asset is empty: " + file.string());
    return body;
}

}  // namespace

TeacherPromptAssets TeacherPromptAssets::load(const std::filesystem::path& dir) {
    return TeacherPromptAssets{read_asset(dir / "problem_analysis.txt"), read_asset(dir / "logical_reasoning.txt"),
                               read_asset(dir / "strategy_planning.txt"), read_asset(dir / "retrieval_guidance.txt")};
}

ChatTranscript build_teacher_prompt(std::string_view query, const TeacherPromptAssets& assets) {
    if (text::trim(query).empty()) throw std::invalid_argument("build_teacher_prompt: query is empty");
    for (const auto* part : {&assets.problem_analysis, &assets.logical_reasoning, &assets.strategy_planning,
                             &assets.retrieval_guidance}) {
        if (text::trim(*part).empty()) throw MissingAsset("a module instruction is empty");
    }
    std::string prompt =
        "Apply the following four modules to the query in order. Respond with four numbered sections titled "
        "Problem Analysis, Logical Reasoning, Strategy Planning, and Retrieval Guidance.\n\n";
    prompt += assets.problem_analysis;
    prompt += "\n\n";
    prompt += assets.logical_reasoning;
    prompt += "\n\n";
    prompt += assets.strategy_planning;
    prompt += "\n\n";
    prompt += assets.retrieval_guidance;
    prompt += "\n\nQuery: ";
    prompt += text::trim(query);
    return {ChatMessage::user(std::move(prompt))};
}

// --- plan parsing ------------------------------------------------------------

namespace {

enum class Section { ProblemAnalysis, LogicalReasoning, StrategyPlanning, RetrievalGuidance };

// Strips LaTeX and markdown emphasis so markers like \(\mathbf{K_1}\) read as K_1.
std::string clean_line(std::string_view in) {
    std::string s(in);
    for (std::string_view cmd : {"\\textbf{", "\\mathbf{", "\\emph{", "\\textit{", "\\mathcal{"}) {
        std::size_t pos;
        while ((pos = s.find(cmd)) != std::string::npos) {
            auto close = s.find('}', pos + cmd.size());
            if (close == std::string::npos) {
                s.erase(pos, cmd.size());
            } else {
                s.erase(close, 1);
                s.erase(pos, cmd.size());
            }
        }
    }
    s = text::replace_all(std::move(s), "\\hspace*{2em}", "");
    s = text::replace_all(std::move(s), "\\rightarrow", "->");
    for (std::string_view token : {"\\(", "\\)", "\\\\", "**", "$", "\\{", "\\}"}) {
        s = text::replace_all(std::move(s), token, "");
    }
    return std::string(text::trim(s));
}

// Drops list bullets, heading hashes and leading "1." / "2)" numbering.
std::string_view strip_decoration(std::string_view s) {
    bool changed = true;
    while (changed) {
        changed = false;
        s = text::trim(s);
        while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '-' || s.front() == '>')) {
            s.remove_prefix(1);
            changed = true;
        }
        if (s.starts_with("\xE2\x80\xA2")) {  // bullet
            s.remove_prefix(3);
            changed = true;
        }
        std::size_t digits = 0;
        while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
        if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
            s.remove_prefix(digits + 1);
            changed = true;
        }
    }
    return s;
}

std::optional<Section> section_header(std::string_view line) {
    static const std::array<std::pair<std::string_view, Section>, 4> kNames{{
        {"problem analysis", Section::ProblemAnalysis},
        {"logical reasoning", Section::LogicalReasoning},
        {"strategy planning", Section::StrategyPlanning},
        {"retrieval guidance", Section::RetrievalGuidance},
    }};
    auto lower = text::to_lower_ascii(strip_decoration(line));
    for (const auto& [name, section] : kNames) {
        if (!lower.starts_with(name)) continue;
        std::string_view rest = text::trim(std::string_view(lower).substr(name.size()));
        if (rest.starts_with("module")) rest = text::trim(rest.substr(6));
        if (rest.empty() || rest.front() == ':') return section;
    }
    return std::nullopt;
}

// Text after the first ':' of a header line, if any.
std::string after_colon(std::string_view line) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return {};
    return std::string(text::trim(line.substr(colon + 1)));
}

std::vector<std::string> first_words(std::string_view s, std::size_t n) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
            if (out.size() == n) return out;
        }
    }
    if (!cur.empty() && out.size() < n) out.push_back(std::move(cur));
    return out;
}

// Matches a short subsection header such as "Keywords:" or "3. Retrieval Sequence (Recommended)".
template <typename Key>
std::optional<Key> subsection_header(std::string_view line, const std::vector<std::pair<std::string_view, Key>>& stems) {
    auto body = strip_decoration(line);
    auto colon = body.find(':');
    std::string_view label;
    if (colon != std::string_view::npos) {
        label = body.substr(0, colon);
        if (label.size() > 40) return std::nullopt;
    } else {
        if (body.size() > 60) return std::nullopt;
        label = body;
    }
    for (const auto& word : first_words(label, 3)) {
        for (const auto& [stem, key] : stems) {
            if (word.starts_with(stem)) return key;
        }
    }
    return std::nullopt;
}

// "K1 …", "K_1: …", "C_2 (…)" definition lines. Returns (index, text).
std::optional<std::pair<int, std::string>> marker_line(std::string_view line, char letter) {
    auto s = strip_decoration(line);
    if (s.empty() || s.front() != letter) return std::nullopt;
    std::size_t i = 1;
    while (i < s.size() && (s[i] == ' ' || s[i] == '_' || s[i] == '{')) ++i;
    std::size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == start) return std::nullopt;
    int index = std::stoi(std::string(s.substr(start, i - start)));
    if (i < s.size() && s[i] == '}') ++i;
    if (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) return std::nullopt;
    std::string_view rest = text::trim(s.substr(i));
    while (!rest.empty() && (rest.front() == ':' || rest.front() == '-' || rest.front() == '.')) {
        rest = text::trim(rest.substr(1));
    }
    if (rest.starts_with("\xE2\x80\x94")) rest = text::trim(rest.substr(3));  // em dash
    if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')' &&
        rest.find(')') == rest.size() - 1) {
        rest = rest.substr(1, rest.size() - 2);
    }
    return std::pair{index, std::string(rest)};
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        if (l.empty()) continue;
        if (!out.empty()) out += '\n';
        out += l;
    }
    return out;
}

std::set<StrategyKind> strategy_mentions(std::string_view line) {
    std::set<StrategyKind> out;
    auto lower = text::to_lower_ascii(line);
    auto letter_at = [&](std::size_t i) -> std::optional<StrategyKind> {
        if (i >= line.size()) return std::nullopt;
        char c = line[i];
        if (c != 'A' && c != 'B' && c != 'C') return std::nullopt;
        if (i + 1 < line.size() && std::isalnum(static_cast<unsigned char>(line[i + 1]))) return std::nullopt;
        return parse_strategy_kind(c);
    };
    auto skip_separators = [&](std::size_t i) {
        while (i < line.size()) {
            auto c = static_cast<unsigned char>(line[i]);
            if (c == ' ' || c == ':' || c == '-' || c >= 0x80) {
                ++i;
            } else {
                break;
            }
        }
        return i;
    };

    std::size_t pos = 0;
    while ((pos = lower.find("strateg", pos)) != std::string::npos) {
        std::size_t i = pos + 7;
        while (i < lower.size() && std::isalpha(static_cast<unsigned char>(lower[i]))) ++i;
        i = skip_separators(i);
        if (auto k = letter_at(i)) {
            out.insert(*k);
            i += 1;
            // Continuations: "A and C", "A, C", "A + C", "A / strategy C".
            while (true) {
                std::size_t j = i;
                while (j < line.size() && line[j] == ' ') ++j;
                bool sep = false;
                for (std::string_view s : {",", "+", "&", "/", "and", "or"}) {
                    if (lower.compare(j, s.size(), s) == 0) {
                        j += s.size();
                        sep = true;
                        break;
                    }
                }
                if (!sep) break;
                while (j < line.size() && line[j] == ' ') ++j;
                if (lower.compare(j, 8, "strategy") == 0) j = skip_separators(j + 8);
                auto next = letter_at(j);
                if (!next) break;
                out.insert(*next);
                i = j + 1;
            }
        }
        pos += 7;
    }
    static const std::array<std::pair<std::string_view, StrategyKind>, 3> kNames{{
        {"forward stepwise", StrategyKind::A},
        {"backward constraint", StrategyKind::B},
        {"parallel intersection", StrategyKind::C},
    }};
    for (const auto& [name, kind] : kNames) {
        if (lower.find(name) != std::string::npos) out.insert(kind);
    }
    return out;
}

bool declarative_strategy_line(std::string_view line) {
    auto lower = text::to_lower_ascii(line);
    for (std::string_view cue : {"selected strateg", "chosen strateg", "strategy selected", "strategy chosen",
                                 "recommended strateg", "strategy selection"}) {
        if (lower.find(cue) != std::string::npos) return true;
    }
    return false;
}

enum class PaField { Objectives, Attributes, Targets, Dimensions };
enum class GuideField { Keywords, Resources, Sequence, Query, Screening };

}  // namespace

ThinkingPlan parse_plan_text(std::string_view raw) {
    ThinkingPlan plan;
    plan.raw = std::string(raw);

    std::map<Section, std::vector<std::string>> sections;
    std::optional<Section> current;
    for (auto line : text::split_lines(raw)) {
        auto cleaned = clean_line(line);
        if (auto header = section_header(cleaned)) {
            current = *header;
            auto& body = sections[*header];
            if (auto tail = after_colon(strip_decoration(cleaned)); !tail.empty()) body.push_back(tail);
            continue;
        }
        if (current) sections[*current].push_back(cleaned);
    }

    // Problem analysis: O, A, T and dimensions C.
    if (auto it = sections.find(Section::ProblemAnalysis); it != sections.end()) {
        static const std::vector<std::pair<std::string_view, PaField>> kStems{
            {"objective", PaField::Objectives},   {"attribute", PaField::Attributes},
            {"target", PaField::Targets},         {"dimension", PaField::Dimensions},
            {"critical", PaField::Dimensions},
        };
        std::map<PaField, std::vector<std::string>> fields;
        std::vector<std::string> loose;
        std::optional<PaField> field;
        std::set<int> seen;
        for (const auto& l : it->second) {
            if (auto m = marker_line(l, 'C')) {
                if (seen.insert(m->first).second) plan.dimensions.push_back(m->second);
                continue;
            }
            if (auto h = subsection_header(l, kStems)) {
                field = *h;
                fields[*h].push_back(after_colon(strip_decoration(l)));
                continue;
            }
            (field ? fields[*field] : loose).push_back(l);
        }
        if (fields.empty()) {
            for (auto& l : loose) {
                std::string_view v = text::trim(l);
                if (v.starts_with("- ") || v.starts_with("* ")) l = std::string(text::trim(v.substr(2)));
            }
            plan.objectives = join_lines(loose);
        } else {
            plan.objectives = join_lines(fields[PaField::Objectives]);
            plan.attributes = join_lines(fields[PaField::Attributes]);
            plan.targets = join_lines(fields[PaField::Targets]);
        }
    }

    // Logical reasoning: mechanism M and ordered conditions K.
    if (auto it = sections.find(Section::LogicalReasoning); it != sections.end()) {
        std::vector<std::string> mechanism;
        std::set<int> seen;
        for (const auto& l : it->second) {
            if (auto m = marker_line(l, 'K')) {
                if (seen.insert(m->first).second) plan.conditions.push_back(m->second);
                continue;
            }
            auto lower = text::to_lower_ascii(strip_decoration(l));
            if (lower.starts_with("key conditional elements") || lower.starts_with("mechanism:")) {
                auto tail = after_colon(strip_decoration(l));
                if (!tail.empty() && lower.starts_with("mechanism:")) mechanism.push_back(tail);
                continue;
            }
            mechanism.push_back(l);
        }
        plan.mechanism = join_lines(mechanism);
    }

    // Strategy planning: declared strategy set R*.
    if (auto it = sections.find(Section::StrategyPlanning); it != sections.end()) {
        std::set<StrategyKind> kinds;
        for (const auto& l : it->second) {
            if (declarative_strategy_line(l)) {
                auto found = strategy_mentions(l);
                kinds.insert(found.begin(), found.end());
            }
        }
        if (kinds.empty()) {
            bool started = false;
            for (const auto& l : it->second) {
                if (l.empty()) {
                    if (started) break;
                    continue;
                }
                started = true;
                auto found = strategy_mentions(l);
                kinds.insert(found.begin(), found.end());
            }
        }
        plan.strategy.assign(kinds.begin(), kinds.end());
    }

    // Retrieval guidance: five sections of Gamma.
    if (auto it = sections.find(Section::RetrievalGuidance); it != sections.end()) {
        static const std::vector<std::pair<std::string_view, GuideField>> kStems{
            {"keyword", GuideField::Keywords}, {"resource", GuideField::Resources},
            {"sequence", GuideField::Sequence}, {"quer", GuideField::Query},
            {"screening", GuideField::Screening},
        };
        std::map<GuideField, std::vector<std::string>> fields;
        std::optional<GuideField> field;
        for (const auto& l : it->second) {
            if (auto h = subsection_header(l, kStems)) {
                field = *h;
                fields[*h].push_back(after_colon(strip_decoration(l)));
                continue;
            }
            if (field) fields[*field].push_back(l);
        }
        plan.guidance.keywords = join_lines(fields[GuideField::Keywords]);
        plan.guidance.resources = join_lines(fields[GuideField::Resources]);
        plan.guidance.sequence = join_lines(fields[GuideField::Sequence]);
        plan.guidance.query = join_lines(fields[GuideField::Query]);
        plan.guidance.screening = join_lines(fields[GuideField::Screening]);
    }

    plan.parse_degraded = sections.size() < 4 || plan.strategy.empty();
    return plan;
}

std::string render_plan(const ThinkingPlan& plan) {
    std::ostringstream out;
    auto field = [&out](std::string_view label, const std::string& value) {
        if (!value.empty()) out << label << ": " << value << '\n';
    };
    out << "1. Problem Analysis\n";
    field("Core Objectives", plan.objectives);
    field("Intrinsic Attributes", plan.attributes);
    field("Target Outcomes", plan.targets);
    for (std::size_t i = 0; i < plan.dimensions.size(); ++i) out << "C" << i + 1 << ": " << plan.dimensions[i] << '\n';
    out << "2. Logical Reasoning\n";
    field("Mechanism", plan.mechanism);
    for (std::size_t i = 0; i < plan.conditions.size(); ++i) out << "K" << i + 1 << ": " << plan.conditions[i] << '\n';
    out << "3. Strategy Planning\n";
    if (!plan.strategy.empty()) {
        out << "Selected strategy: ";
        for (std::size_t i = 0; i < plan.strategy.size(); ++i) {
            if (i > 0) out << ", ";
            out << to_char(plan.strategy[i]);
        }
        out << '\n';
    }
    out << "4. Retrieval Guidance\n";
    field("Keywords", plan.guidance.keywords);
    field("Resources", plan.guidance.resources);
    field("Sequence", plan.guidance.sequence);
    field("Query", plan.guidance.query);
    field("Screening", plan.guidance.screening);
    return out.str();
}

PlanResult generate_plan(std::string_view query, const ModelRef& teacher, Gateway& gateway,
                         const TeacherPromptAssets& assets) {
    auto transcript = build_teacher_prompt(query, assets);
    auto completion = gateway.complete(teacher, transcript);
    return PlanResult{parse_plan_text(completion.text), completion.ledger()};
}

}  // namespace futuremind
