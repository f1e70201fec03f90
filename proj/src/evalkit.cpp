#include "futuremind/evalkit.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "futuremind/text.hpp"

namespace futuremind {

// --- normalization & ACC_E ---------------------------------------------------

namespace {

bool is_article(const std::string& token) { return token == "a" || token == "an" || token == "the"; }

std::vector<std::string> normalized_tokens(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc_cf = icu::Normalizer2::getNFKCCasefoldInstance(status);
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString folded;
    if (U_SUCCESS(status)) folded = nfkc_cf->normalize(in, status);
    if (U_FAILURE(status)) folded = in.foldCase();

    std::vector<std::string> tokens;
    icu::UnicodeString current;
    auto flush = [&] {
        if (current.isEmpty()) return;
        std::string utf8;
        current.toUTF8String(utf8);
        if (!is_article(utf8)) tokens.push_back(std::move(utf8));
        current.remove();
    };
    for (int32_t i = 0; i < folded.length();) {
        UChar32 c = folded.char32At(i);
        i += U16_LENGTH(c);
        if (u_ispunct(c) || u_isUWhiteSpace(c) || u_isspace(c)) {
            flush();
        } else {
            current.append(c);
        }
    }
    flush();
    return tokens;
}

}  // namespace

std::string normalize_text(std::string_view text) {
    std::string out;
    for (const auto& t : normalized_tokens(text)) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

int acc_e(std::string_view prediction, const std::vector<std::string>& golds) {
    const auto pred = normalized_tokens(prediction);
    for (const auto& g : golds) {
        const auto gold = normalized_tokens(g);
        if (gold.empty()) continue;
        if (std::search(pred.begin(), pred.end(), gold.begin(), gold.end()) != pred.end()) return 1;
    }
    return 0;
}

// --- ACC_L ---------------------------------------------------------------------

std::string judge_prompt(std::string_view question, std::string_view gold, std::string_view prediction) {
    std::string out =
        "Given a Question and its Golden Answer, verify whether the Predicted Answer is correct. The prediction is "
        "correct if it fully aligns with the meaning and key information of the Golden Answer. Respond with True if "
        "the prediction is correct and False otherwise.\n\n[Question:]\n";
    out += question;
    out += "\n\n[Golden Answer]\n";
    out += gold;
    out += "\n\n[Predicted Answer]\n";
    out += prediction;
    return out;
}

JudgeVerdict parse_judge_reply(std::string_view raw) {
    JudgeVerdict v;
    v.raw = std::string(raw);
    std::string word;
    auto decide = [&]() -> bool {
        if (word == "true") {
            v.verdict = 1;
            return true;
        }
        if (word == "false") {
            v.verdict = 0;
            return true;
        }
        word.clear();
        return false;
    };
    for (char c : raw) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalpha(u)) {
            word.push_back(static_cast<char>(std::tolower(u)));
        } else if (!word.empty() && decide()) {
            return v;
        }
    }
    if (!word.empty() && decide()) return v;
    v.verdict = 0;
    v.flagged = true;
    return v;
}

JudgeVerdict acc_l(const Question& question, std::string_view prediction, const ModelRef& judge, Gateway& gateway) {
    std::string gold;
    for (const auto& g : question.gold_answers) {
        if (!gold.empty()) gold += " / ";
        gold += g;
    }
    ChatTranscript t{ChatMessage::user(judge_prompt(question.text, gold, prediction))};
    auto completion = gateway.complete(judge, t);
    auto v = parse_judge_reply(completion.text);
    v.ledger = completion.ledger();
    return v;
}

// --- datasets --------------------------------------------------------------------

std::optional<SampleSpec> default_sample(Dataset dataset) {
    if (dataset == Dataset::TwoWiki || dataset == Dataset::Musique) return SampleSpec{500, 42};
    return std::nullopt;
}

namespace {

struct FieldMap {
    std::vector<std::string> question;
    std::vector<std::string> answer;   // string or list
    std::vector<std::string> aliases;  // appended when present
    std::vector<std::string> id;
};

FieldMap field_map(Dataset dataset) {
    switch (dataset) {
        case Dataset::TwoWiki:
            return {{"question"}, {"answer", "golden_answers"}, {"answer_aliases"}, {"_id", "id"}};
        case Dataset::Musique:
            return {{"question"}, {"answer", "golden_answers"}, {"answer_aliases"}, {"id", "_id"}};
        case Dataset::Bamboogle:
            return {{"Question", "question"}, {"Answer", "answer", "golden_answers"}, {}, {"id", "_id"}};
        case Dataset::Frames:
            return {{"Prompt", "prompt", "question"}, {"Answer", "answer", "golden_answers"}, {}, {"id", "Unnamed: 0"}};
        case Dataset::Custom:
            break;
    }
    return {{"question", "Question", "Prompt", "prompt", "query"},
            {"golden_answers", "answers", "answer", "Answer"},
            {"answer_aliases"},
            {"id", "_id", "qid"}};
}

std::string scalar_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void append_answers(const json& v, std::vector<std::string>& out) {
    if (v.is_array()) {
        for (const auto& item : v) out.push_back(scalar_text(item));
    } else if (!v.is_null()) {
        out.push_back(scalar_text(v));
    }
}

const json* first_key(const json& record, const std::vector<std::string>& keys) {
    for (const auto& k : keys) {
        auto it = record.find(k);
        if (it != record.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

std::string joined(const std::vector<std::string>& keys) {
    std::string out;
    for (const auto& k : keys) out += (out.empty() ? "" : ", ") + k;
    return out;
}

std::vector<json> split_records(std::string_view content) {
    auto body = text::trim(content);
    if (body.empty()) return {};
    if (body.front() == '[' || body.front() == '{') {
        try {
            json whole = json::parse(body);
            if (whole.is_array()) return whole.get<std::vector<json>>();
            if (whole.is_object() && whole.contains("data") && whole["data"].is_array()) {
                return whole["data"].get<std::vector<json>>();
            }
            if (whole.is_object()) return {whole};
        } catch (const json::parse_error&) {
            // fall through to JSONL
        }
    }
    std::vector<json> out;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(body)) {
        ++line_no;
        line = text::trim(line);
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw DatasetError("UnknownSchema: line " + std::to_string(line_no) + " is not JSON: " + e.what());
        }
    }
    return out;
}

}  // namespace

LoadedDataset parse_dataset_text(std::string_view content, Dataset dataset, std::optional<SampleSpec> sample) {
    const auto records = split_records(content);
    if (records.empty()) throw DatasetError("EmptyDataset: no records");

    const FieldMap map = field_map(dataset);
    LoadedDataset out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.is_object()) throw DatasetError("UnknownSchema: record " + std::to_string(i) + " is not an object");
        const json* q = first_key(r, map.question);
        if (q == nullptr) {
            throw DatasetError("UnknownSchema: record " + std::to_string(i) + " has none of the question keys (" +
                               joined(map.question) + ")");
        }
        const json* a = first_key(r, map.answer);
        if (a == nullptr) {
            throw DatasetError("UnknownSchema: record " + std::to_string(i) + " has none of the answer keys (" +
                               joined(map.answer) + ")");
        }
        Question question;
        question.dataset = dataset;
        question.text = scalar_text(*q);
        append_answers(*a, question.gold_answers);
        if (const json* aliases = first_key(r, map.aliases)) append_answers(*aliases, question.gold_answers);
        if (const json* id = first_key(r, map.id)) {
            question.id = scalar_text(*id);
        } else {
            question.id = std::string(to_string(dataset)) + "-" + std::to_string(i);
        }
        if (question.gold_answers.empty()) out.warnings.push_back("question " + question.id + " has no gold answers");
        if (!seen.insert(question.id).second) out.warnings.push_back("duplicate question id " + question.id);
        out.questions.push_back(std::move(question));
    }

    if (!sample) sample = default_sample(dataset);
    if (sample) {
        const auto total = out.questions.size();
        if (sample->n == 0) throw DatasetError("sample size must be at least 1");
        if (sample->n > total) {
            out.warnings.push_back("requested sample of " + std::to_string(sample->n) + " exceeds the " +
                                   std::to_string(total) + " available questions; using the full set");
        } else if (sample->n < total) {
            std::vector<std::size_t> idx(total);
            std::iota(idx.begin(), idx.end(), 0);
            std::mt19937_64 rng(sample->seed);
            for (std::size_t i = 0; i < sample->n; ++i) {
                auto j = i + static_cast<std::size_t>(rng() % (total - i));
                std::swap(idx[i], idx[j]);
            }
            idx.resize(sample->n);
            std::sort(idx.begin(), idx.end());
            std::vector<Question> picked;
            picked.reserve(idx.size());
            for (auto k : idx) picked.push_back(std::move(out.questions[k]));
            out.questions = std::move(picked);
        }
    }
    return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path, Dataset dataset, std::optional<SampleSpec> sample) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open dataset file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_dataset_text(buf.str(), dataset, sample);
}

// --- records & aggregation -----------------------------------------------------

void to_json(json& j, const EvalRecord& r) {
    j = json{{"question_id", r.question_id},
             {"dataset", to_string(r.dataset)},
             {"pipeline", to_string(r.pipeline)},
             {"prediction", r.prediction},
             {"acc_e", r.acc_e},
             {"acc_l", r.acc_l ? json(*r.acc_l) : json(nullptr)},
             {"judge_raw", r.judge_raw ? json(*r.judge_raw) : json(nullptr)},
             {"judge_flagged", r.judge_flagged},
             {"ledger", r.ledger}};
}

void from_json(const json& j, EvalRecord& r) {
    r.question_id = j.at("question_id").get<std::string>();
    auto ds = parse_dataset(j.at("dataset").get<std::string>());
    auto p = parse_pipeline(j.at("pipeline").get<std::string>());
    if (!ds || !p) throw DatasetError("eval record has an unknown dataset or pipeline");
    r.dataset = *ds;
    r.pipeline = *p;
    r.prediction = j.at("prediction").get<std::string>();
    r.acc_e = j.at("acc_e").get<int>();
    r.acc_l = j.contains("acc_l") && !j["acc_l"].is_null() ? std::optional<int>(j["acc_l"].get<int>()) : std::nullopt;
    r.judge_raw = j.contains("judge_raw") && !j["judge_raw"].is_null()
                      ? std::optional<std::string>(j["judge_raw"].get<std::string>())
                      : std::nullopt;
    r.judge_flagged = j.value("judge_flagged", false);
    r.ledger = j.value("ledger", CostLedger{});
}

std::vector<Dataset> report_columns(const std::vector<EvalRecord>& records) {
    std::vector<Dataset> cols{Dataset::TwoWiki, Dataset::Bamboogle, Dataset::Frames, Dataset::Musique};
    bool custom = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.dataset == Dataset::Custom; });
    if (custom) cols.push_back(Dataset::Custom);
    return cols;
}

double row_average(const std::vector<double>& cells) {
    if (cells.empty()) return 0.0;
    return std::accumulate(cells.begin(), cells.end(), 0.0) / static_cast<double>(cells.size());
}

std::vector<ReportRow> aggregate(const std::vector<EvalRecord>& records) {
    struct Acc {
        std::size_t n = 0, e = 0, l_n = 0, l = 0;
    };
    std::map<Pipeline, std::map<Dataset, Acc>> table;
    for (const auto& r : records) {
        auto& a = table[r.pipeline][r.dataset];
        ++a.n;
        a.e += r.acc_e ? 1 : 0;
        if (r.acc_l) {
            ++a.l_n;
            a.l += *r.acc_l ? 1 : 0;
        }
    }

    const auto cols = report_columns(records);
    std::vector<ReportRow> rows;
    for (const auto& [pipeline, by_ds] : table) {
        ReportRow row;
        row.pipeline = pipeline;
        std::vector<double> es, ls;
        for (auto ds : cols) {
            ReportCell cell;
            if (auto it = by_ds.find(ds); it != by_ds.end()) {
                const auto& a = it->second;
                cell.count = a.n;
                cell.acc_e = 100.0 * static_cast<double>(a.e) / static_cast<double>(a.n);
                es.push_back(*cell.acc_e);
                if (a.l_n > 0) {
                    cell.acc_l = 100.0 * static_cast<double>(a.l) / static_cast<double>(a.l_n);
                    ls.push_back(*cell.acc_l);
                }
            }
            row.cells.emplace_back(ds, cell);
        }
        if (!es.empty()) row.avg_acc_e = row_average(es);
        if (!ls.empty()) row.avg_acc_l = row_average(ls);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string two_decimals(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

}  // namespace

std::string report_csv(const std::vector<EvalRecord>& records) {
    const auto cols = report_columns(records);
    std::string out = "pipeline";
    for (auto ds : cols) {
        out += ',' + std::string(to_string(ds)) + "_acc_e";
        out += ',' + std::string(to_string(ds)) + "_acc_l";
    }
    out += ",avg_acc_e,avg_acc_l\n";
    for (const auto& row : aggregate(records)) {
        out += to_string(row.pipeline);
        for (const auto& [ds, cell] : row.cells) {
            out += ',' + two_decimals(cell.acc_e);
            out += ',' + two_decimals(cell.acc_l);
        }
        out += ',' + two_decimals(row.avg_acc_e);
        out += ',' + two_decimals(row.avg_acc_l);
        out += '\n';
    }
    return out;
}

// --- cost ------------------------------------------------------------------------

void PriceTable::validate() const {
    if (input_per_million < 0 || output_per_million < 0 || per_thousand_queries < 0) {
        throw ConfigError("prices must be nonnegative");
    }
}

double compute_cost(const CostLedger& ledger, const PriceTable& prices) {
    const double raw = static_cast<double>(ledger.input_tokens) / 1e6 * prices.input_per_million +
                       static_cast<double>(ledger.output_tokens) / 1e6 * prices.output_per_million +
                       static_cast<double>(ledger.search_queries) / 1e3 * prices.per_thousand_queries;
    return std::round(raw * 1e4) / 1e4;
}

std::string format_cost_line(std::string_view label, const CostLedger& ledger, const PriceTable& prices) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.*s: input_tokens=%lld output_tokens=%lld search_queries=%lld cost=$%.4f%s",
                  static_cast<int>(label.size()), label.data(), static_cast<long long>(ledger.input_tokens),
                  static_cast<long long>(ledger.output_tokens), static_cast<long long>(ledger.search_queries),
                  compute_cost(ledger, prices), ledger.token_source == TokenSource::Estimated ? " (estimated tokens)" : "");
    return buf;
}

}  // namespace futuremind
