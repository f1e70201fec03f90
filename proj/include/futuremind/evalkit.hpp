#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "futuremind/domain.hpp"
#include "futuremind/gateway.hpp"

namespace futuremind {

class DatasetError : public Error {
public:
    using Error::Error;
};

// NFKC with case folding, punctuation replaced by spaces, articles a/an/the dropped,
// whitespace collapsed. Idempotent.
std::string normalize_text(std::string_view text);

// 1 iff some gold's normalized token sequence occurs contiguously in the normalized
// prediction. A gold that normalizes to nothing never matches.
int acc_e(std::string_view prediction, const std::vector<std::string>& golds);

struct JudgeVerdict {
    int verdict = 0;
    std::string raw;
    bool flagged = false;  // no True/False token found
    CostLedger ledger;
};

std::string judge_prompt(std::string_view question, std::string_view gold, std::string_view prediction);

// First case-insensitive "true" or "false" word decides; anything else is 0 and flagged.
JudgeVerdict parse_judge_reply(std::string_view raw);

// Several gold aliases are joined with " / " into the single golden-answer slot.
JudgeVerdict acc_l(const Question& question, std::string_view prediction, const ModelRef& judge, Gateway& gateway);

struct SampleSpec {
    std::size_t n = 0;
    std::uint64_t seed = 42;
};

// Family defaults: 500 sampled questions for 2wiki and musique, full sets otherwise.
std::optional<SampleSpec> default_sample(Dataset dataset);

struct LoadedDataset {
    std::vector<Question> questions;
    std::vector<std::string> warnings;
};

// JSON array, JSONL, or {"data": [...]}. Question/answer keys are mapped per family
// (question/Prompt, answer/Answer/golden_answers/answer_aliases, id/_id/qid).
// Sampling keeps the selected questions in file order.
LoadedDataset load_dataset(const std::filesystem::path& path, Dataset dataset,
                           std::optional<SampleSpec> sample = std::nullopt);
LoadedDataset parse_dataset_text(std::string_view content, Dataset dataset, std::optional<SampleSpec> sample = std::nullopt);

struct EvalRecord {
    std::string question_id;
    Dataset dataset = Dataset::Custom;
    Pipeline pipeline = Pipeline::TcFm;
    std::string prediction;
    int acc_e = 0;
    std::optional<int> acc_l;
    std::optional<std::string> judge_raw;
    bool judge_flagged = false;
    CostLedger ledger;
};

void to_json(json& j, const EvalRecord& r);
void from_json(const json& j, EvalRecord& r);

struct ReportCell {
    std::optional<double> acc_e;  // percent
    std::optional<double> acc_l;
    std::size_t count = 0;
};

struct ReportRow {
    Pipeline pipeline = Pipeline::TcFm;
    std::vector<std::pair<Dataset, ReportCell>> cells;  // report column order
    std::optional<double> avg_acc_e;
    std::optional<double> avg_acc_l;
};

// Column order: 2wiki, bamboogle, frames, musique, then custom when present.
std::vector<Dataset> report_columns(const std::vector<EvalRecord>& records);

// Mean x100 per dataset x pipeline; AVG is the mean of the row's present cells.
std::vector<ReportRow> aggregate(const std::vector<EvalRecord>& records);

// Mean of the given cells; the AVG rule applied to already-rounded table values.
double row_average(const std::vector<double>& cells);

// pipeline,<ds>_acc_e,<ds>_acc_l,...,avg_acc_e,avg_acc_l with two decimals; absent cells empty.
std::string report_csv(const std::vector<EvalRecord>& records);

struct PriceTable {
    double input_per_million = 0.15;
    double output_per_million = 0.60;
    double per_thousand_queries = 5.00;

    void validate() const;
};

// Rounded to 4 decimals.
double compute_cost(const CostLedger& ledger, const PriceTable& prices = {});

// "$0.1170"-style line with the ledger components.
std::string format_cost_line(std::string_view label, const CostLedger& ledger, const PriceTable& prices);

}  // namespace futuremind
