#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "futuremind/domain.hpp"
#include "futuremind/gateway.hpp"

namespace futuremind {

class MissingAsset : public Error {
public:
    using Error::Error;
};

// The four module instructions, loaded verbatim from a prompts directory.
struct TeacherPromptAssets {
    std::string problem_analysis;
    std::string logical_reasoning;
    std::string strategy_planning;
    std::string retrieval_guidance;

    // Reads problem_analysis.txt, logical_reasoning.txt, strategy_planning.txt and
    // retrieval_guidance.txt from `dir`.
    static TeacherPromptAssets load(const std::filesystem::path& dir);
};

// One user message: the four instructions in pipeline order, then the query.
ChatTranscript build_teacher_prompt(std::string_view query, const TeacherPromptAssets& assets);

// Total: never throws. Sections are located by fuzzy headers (case-insensitive, optional
// numbering, markdown or LaTeX bold). Missing sections or an empty strategy set mark the
// plan as degraded; `raw` is always kept.
ThinkingPlan parse_plan_text(std::string_view raw);

// Canonical text form; parse_plan_text(render_plan(p)) reproduces p's structured fields.
std::string render_plan(const ThinkingPlan& plan);

struct PlanResult {
    ThinkingPlan plan;
    CostLedger ledger;
};

PlanResult generate_plan(std::string_view query, const ModelRef& teacher, Gateway& gateway,
                         const TeacherPromptAssets& assets);

// Callable form used as the futuremind tool. Holds no state between calls.
class ThinkingTool {
public:
    ThinkingTool(Gateway& gateway, ModelRef teacher, TeacherPromptAssets assets)
        : gateway_(gateway), teacher_(std::move(teacher)), assets_(std::move(assets)) {}

    PlanResult operator()(std::string_view query) const {
        return generate_plan(query, teacher_, gateway_, assets_);
    }

    const ModelRef& teacher() const { return teacher_; }

private:
    Gateway& gateway_;
    ModelRef teacher_;
    TeacherPromptAssets assets_;
};

}  // namespace futuremind
