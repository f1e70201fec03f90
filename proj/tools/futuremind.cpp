// futuremind: command-line front end for the pipelines, evaluation, and simulators.
//
// Exit status: 0 success, 1 run failure (any question aborted, equivalence violated),
// 2 usage error, 3 configuration or input error.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "futuremind/config.hpp"
#include "futuremind/evalkit.hpp"
#include "futuremind/orchestrator.hpp"
#include "futuremind/protocol.hpp"
#include "futuremind/strategy.hpp"
#include "futuremind/thinking.hpp"

namespace fs = std::filesystem;
using namespace futuremind;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;

std::atomic<bool> g_cancelled{false};

extern "C" void on_sigint(int) { g_cancelled.store(true); }

const std::vector<std::string> kPipelines{"naive", "rag", "search_o1", "tc", "tc_fm"};
const std::vector<std::string> kFamilies{"2wiki", "musique", "bamboogle", "frames", "custom"};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
}

std::string run_id(const RunConfig& config, std::string_view extra) {
    return sha256_hex(serialize_config(config.raw) + "\n" + std::string(extra)).substr(0, 16);
}

PipelineConfig pipeline_for(const RunConfig& config, const std::string& name) {
    PipelineConfig p = config.pipeline;
    if (!name.empty()) p.pipeline = *parse_pipeline(name);
    return p;
}

void print_transcript(const RunRecord& rec, std::ostream& os) {
    for (const auto& m : rec.transcript) {
        os << "=== " << to_string(m.role);
        if (m.tool_name) os << " (" << *m.tool_name << ")";
        os << " ===\n" << m.content << "\n";
    }
    os << "=== end ===\n";
}

// --- ask ---------------------------------------------------------------------------

struct AskArgs {
    std::string pipeline;
    std::string question;
    bool transcript = false;
};

int cmd_ask(const fs::path& config_path, const AskArgs& args) {
    auto rt = make_runtime(load_run_config(config_path));
    auto pcfg = pipeline_for(rt->config, args.pipeline);
    Question q{"ask-" + sha256_hex(args.question).substr(0, 12), args.question, {}, Dataset::Custom};
    PipelineContext ctx{*rt->gateway, rt->config.model("student"), rt->search.get(), rt->thinking.get()};
    auto rec = run_question(q, pcfg, ctx);

    auto dir = rt->config.output_dir / run_id(rt->config, std::string(to_string(pcfg.pipeline)) + "\n" + args.question);
    write_file(dir / "records.jsonl", to_jsonl_line(rec) + "\n");

    if (args.transcript) print_transcript(rec, std::cout);
    for (const auto& note : rec.notes) std::cerr << "note: " << note << "\n";
    std::cerr << "record: " << (dir / "records.jsonl").string() << "\n";
    if (rec.status == RunStatus::Failed || !rec.final_answer) {
        std::cerr << "error: run " << to_string(rec.status) << " without a final answer\n";
        return kExitFailure;
    }
    std::cout << *rec.final_answer << "\n";
    return 0;
}

// --- eval --------------------------------------------------------------------------

struct EvalArgs {
    std::string dataset_path;
    std::string family = "custom";
    std::string pipeline;
    std::optional<std::size_t> sample;
    std::uint64_t seed = 42;
    bool no_judge = false;
};

EvalRecord score(const Question& q, const RunRecord& rec, Runtime& rt, bool judge) {
    EvalRecord e;
    e.question_id = q.id;
    e.dataset = q.dataset;
    e.pipeline = rec.pipeline;
    e.prediction = rec.final_answer.value_or("");
    e.acc_e = rec.final_answer ? acc_e(*rec.final_answer, q.gold_answers) : 0;
    e.ledger = rec.ledger;
    if (judge && rec.final_answer) {
        auto v = acc_l(q, *rec.final_answer, rt.config.model("judge"), *rt.gateway);
        e.acc_l = v.verdict;
        e.judge_raw = v.raw;
        e.judge_flagged = v.flagged;
        e.ledger += v.ledger;
    } else if (judge) {
        e.acc_l = 0;
    }
    return e;
}

CostLedger judge_ledger(const std::vector<EvalRecord>& evals, const std::vector<RunRecord>& records) {
    // EvalRecord ledgers carry the run plus the judge call; the difference is the judge's share.
    CostLedger total;
    for (std::size_t i = 0; i < evals.size(); ++i) {
        total.input_tokens += evals[i].ledger.input_tokens - records[i].ledger.input_tokens;
        total.output_tokens += evals[i].ledger.output_tokens - records[i].ledger.output_tokens;
        if (evals[i].ledger.token_source == TokenSource::Estimated) total.token_source = TokenSource::Estimated;
    }
    return total;
}

std::string cost_summary(const std::vector<RunRecord>& records, const std::vector<EvalRecord>& evals,
                         const PriceTable& prices) {
    CostLedger models, search;
    for (const auto& r : records) {
        models.input_tokens += r.ledger.input_tokens;
        models.output_tokens += r.ledger.output_tokens;
        if (r.ledger.token_source == TokenSource::Estimated) models.token_source = TokenSource::Estimated;
        search.search_queries += r.ledger.search_queries;
    }
    auto judge = judge_ledger(evals, records);
    auto total = merge_ledgers(merge_ledgers(models, search), judge);
    std::string out;
    out += format_cost_line("models", models, prices) + "\n";
    out += format_cost_line("judge", judge, prices) + "\n";
    out += format_cost_line("search", search, prices) + "\n";
    out += format_cost_line("total", total, prices) + "\n";
    return out;
}

int cmd_eval(const fs::path& config_path, const EvalArgs& args) {
    auto rt = make_runtime(load_run_config(config_path));
    auto pcfg = pipeline_for(rt->config, args.pipeline);
    const bool judge = !args.no_judge && rt->config.has_model("judge");

    auto family = *parse_dataset(args.family);
    std::optional<SampleSpec> sample;
    if (args.sample) sample = SampleSpec{*args.sample, args.seed};
    auto data = load_dataset(args.dataset_path, family, sample);
    for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
    const auto& questions = data.questions;

    const auto id = run_id(rt->config, std::string(to_string(pcfg.pipeline)) + "\n" + args.family + "\n" +
                                           slurp(args.dataset_path) + "\n" +
                                           (sample ? std::to_string(sample->n) + ":" + std::to_string(sample->seed) : ""));
    const auto dir = rt->config.output_dir / id;

    std::vector<std::optional<RunRecord>> records(questions.size());
    std::vector<std::optional<EvalRecord>> evals(questions.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::vector<std::string> errors;

    auto prev = std::signal(SIGINT, on_sigint);
    {
        std::vector<std::jthread> pool;
        const auto workers = std::min(rt->config.workers, std::max<std::size_t>(questions.size(), 1));
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < questions.size() && !g_cancelled.load(); i = next++) {
                    try {
                        PipelineContext ctx{*rt->gateway, rt->config.model("student"), rt->search.get(),
                                            rt->thinking.get()};
                        auto rec = run_question(questions[i], pcfg, ctx);
                        auto ev = score(questions[i], rec, *rt, judge);
                        records[i] = std::move(rec);
                        evals[i] = std::move(ev);
                    } catch (const std::exception& e) {
                        std::lock_guard lock(err_mu);
                        errors.push_back(questions[i].id + ": " + e.what());
                    }
                }
            });
        }
    }
    std::signal(SIGINT, prev);

    std::vector<RunRecord> done_records;
    std::vector<EvalRecord> done_evals;
    std::string records_text, evals_text;
    std::size_t failed = errors.size();
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (!records[i]) continue;
        if (records[i]->status == RunStatus::Failed) ++failed;
        records_text += to_jsonl_line(*records[i]) + "\n";
        evals_text += json(*evals[i]).dump() + "\n";
        done_records.push_back(*records[i]);
        done_evals.push_back(*evals[i]);
    }
    const auto report = report_csv(done_evals);
    const auto cost = cost_summary(done_records, done_evals, rt->config.prices);
    write_file(dir / "records.jsonl", records_text);
    write_file(dir / "evals.jsonl", evals_text);
    write_file(dir / "report.csv", report);
    write_file(dir / "cost.txt", cost);

    std::cout << report << cost;
    std::cout << "questions: " << questions.size() << " completed: " << done_records.size() << " failed: " << failed
              << "\n";
    std::cout << "model transport calls: " << rt->transport_calls() << "\n";
    std::cout << "output: " << dir.string() << "\n";
    for (const auto& e : errors) std::cerr << "error: " << e << "\n";
    if (g_cancelled.load()) {
        std::cerr << "cancelled: completed records were flushed\n";
        return kExitFailure;
    }
    return failed > 0 ? kExitFailure : 0;
}

// --- plan --------------------------------------------------------------------------

int cmd_plan(const fs::path& config_path, const std::string& query, bool as_json) {
    auto rt = make_runtime(load_run_config(config_path));
    if (!rt->thinking) throw ConfigError("plan needs models.teacher and run.prompts_dir in the config");
    auto result = (*rt->thinking)(query);
    if (as_json) {
        std::cout << json(result.plan).dump(2) << "\n";
    } else {
        std::cout << render_plan(result.plan);
    }
    if (result.plan.parse_degraded) std::cerr << "warning: plan parse degraded; raw teacher text kept\n";
    std::cerr << format_cost_line("teacher", result.ledger, rt->config.prices) << "\n";
    return 0;
}

// --- strategy-sim ------------------------------------------------------------------

int cmd_strategy_sim(const std::string& universe_path, const std::string& conditions_path, bool explain) {
    auto universe = universe_from_json(json::parse(slurp(universe_path)));
    auto conditions = conditions_from_json(json::parse(slurp(conditions_path)));
    const auto oracle = brute_force_intersection(universe, conditions);

    std::cout << "kind,result_size,evaluations\n";
    bool ok = true;
    for (auto kind : {StrategyKind::A, StrategyKind::B, StrategyKind::C}) {
        auto run = run_strategy(kind, universe, conditions, kind == StrategyKind::C);
        std::cout << to_char(kind) << "," << run.result.size() << "," << run.evaluations << "\n";
        if (run.result != oracle) {
            std::cerr << "error: strategy " << to_char(kind) << " disagrees with the brute-force intersection\n";
            ok = false;
        }
    }
    if (explain) {
        std::vector<double> sel;
        for (const auto& c : conditions) sel.push_back(estimate_selectivity(universe, c, 64));
        std::cerr << select_strategy(conditions, sel, SelectionMode::Local).rationale << "\n";
    }
    return ok ? 0 : kExitFailure;
}

// --- judge -------------------------------------------------------------------------

int cmd_judge(const fs::path& config_path, const std::string& records_path, const std::string& dataset_path,
              const std::string& family, const std::string& out_dir) {
    auto rt = make_runtime(load_run_config(config_path));
    const bool judge = rt->config.has_model("judge");
    if (!judge) std::cerr << "warning: no models.judge configured; only ACC_E is scored\n";
    auto data = load_dataset(dataset_path, *parse_dataset(family), SampleSpec{std::numeric_limits<std::size_t>::max(), 0});
    std::map<std::string, Question> by_id;
    for (auto& q : data.questions) by_id.emplace(q.id, std::move(q));

    std::vector<EvalRecord> evals;
    std::string evals_text;
    std::istringstream lines(slurp(records_path));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        auto rec = run_record_from_jsonl_line(line);
        auto it = by_id.find(rec.question_id);
        if (it == by_id.end()) {
            std::cerr << "warning: no question " << rec.question_id << " in the dataset; skipped\n";
            continue;
        }
        auto ev = score(it->second, rec, *rt, judge);
        evals_text += json(ev).dump() + "\n";
        evals.push_back(std::move(ev));
    }
    fs::path dir = out_dir.empty() ? fs::path(records_path).parent_path() : fs::path(out_dir);
    write_file(dir / "evals.jsonl", evals_text);
    write_file(dir / "report.csv", report_csv(evals));
    std::cout << report_csv(evals);
    return 0;
}

// --- cost --------------------------------------------------------------------------

struct CostArgs {
    std::string ledger_path;
    std::int64_t input = 0;
    std::int64_t output = 0;
    std::int64_t queries = 0;
};

int cmd_cost(const std::optional<fs::path>& config_path, const CostArgs& args) {
    PriceTable prices;
    if (config_path) prices = load_run_config(*config_path).prices;
    if (args.ledger_path.empty()) {
        std::cout << format_cost_line("ledger", CostLedger{args.input, args.output, args.queries}, prices) << "\n";
        return 0;
    }
    std::istringstream lines(slurp(args.ledger_path));
    std::string line;
    CostLedger total;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = json::parse(line);
        std::string label = j.value("label", j.value("question_id", "entry " + std::to_string(n + 1)));
        CostLedger l = j.contains("ledger") ? j.at("ledger").get<CostLedger>() : j.get<CostLedger>();
        std::cout << format_cost_line(label, l, prices) << "\n";
        total += l;
        ++n;
    }
    if (n > 1) std::cout << format_cost_line("total", total, prices) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FutureMind: teacher-guided reasoning pipelines for small language models"};
    app.require_subcommand(1);
    std::string config;

    auto* ask = app.add_subcommand("ask", "Run one pipeline on one question and print the final answer");
    AskArgs ask_args;
    ask->add_option("-c,--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
    ask->add_option("-p,--pipeline", ask_args.pipeline, "Pipeline (default: the config's pipeline.name)")
        ->check(CLI::IsMember(kPipelines));
    ask->add_option("-q,--question", ask_args.question, "Question text")->required();
    ask->add_flag("--transcript", ask_args.transcript, "Print the full tagged conversation");

    auto* eval = app.add_subcommand("eval", "Run a pipeline over a dataset and score it");
    EvalArgs eval_args;
    eval->add_option("-c,--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
    eval->add_option("-d,--dataset", eval_args.dataset_path, "Dataset file (JSON, JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("-f,--family", eval_args.family, "Dataset family")->check(CLI::IsMember(kFamilies));
    eval->add_option("-p,--pipeline", eval_args.pipeline, "Pipeline")->check(CLI::IsMember(kPipelines));
    eval->add_option("-n,--sample", eval_args.sample, "Sample size (default: family default)");
    eval->add_option("--seed", eval_args.seed, "Sampling seed");
    eval->add_flag("--no-judge", eval_args.no_judge, "Skip ACC_L even when a judge is configured");

    auto* plan = app.add_subcommand("plan", "Ask the teacher for a thinking plan and print it");
    std::string plan_query;
    bool plan_json = false;
    plan->add_option("-c,--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
    plan->add_option("-q,--query", plan_query, "Query")->required();
    plan->add_flag("--json", plan_json, "Print the parsed plan as JSON");

    auto* sim = app.add_subcommand("strategy-sim", "Run strategies A, B, C over a universe and check them");
    std::string universe_path, conditions_path;
    bool explain = false;
    sim->add_option("-u,--universe", universe_path, "Universe JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("-k,--conditions", conditions_path, "Conditions JSON")->required()->check(CLI::ExistingFile);
    sim->add_flag("--explain", explain, "Print the local strategy selection to stderr");

    auto* judge = app.add_subcommand("judge", "Re-score a records file");
    std::string records_path, judge_dataset, judge_family = "custom", judge_out;
    judge->add_option("-c,--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
    judge->add_option("-r,--records", records_path, "records.jsonl")->required()->check(CLI::ExistingFile);
    judge->add_option("-d,--dataset", judge_dataset, "Dataset file with gold answers")
        ->required()
        ->check(CLI::ExistingFile);
    judge->add_option("-f,--family", judge_family, "Dataset family")->check(CLI::IsMember(kFamilies));
    judge->add_option("-o,--out-dir", judge_out, "Output directory (default: beside the records)");

    auto* cost = app.add_subcommand("cost", "Price a ledger");
    CostArgs cost_args;
    std::string cost_config;
    cost->add_option("-c,--config", cost_config, "Configuration with a [prices] table")->check(CLI::ExistingFile);
    cost->add_option("-l,--ledger", cost_args.ledger_path, "JSONL of ledgers, run records or eval records")
        ->check(CLI::ExistingFile);
    cost->add_option("--input-tokens", cost_args.input, "Input tokens");
    cost->add_option("--output-tokens", cost_args.output, "Output tokens");
    cost->add_option("--queries", cost_args.queries, "Search queries");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*ask) return cmd_ask(config, ask_args);
        if (*eval) return cmd_eval(config, eval_args);
        if (*plan) return cmd_plan(config, plan_query, plan_json);
        if (*sim) return cmd_strategy_sim(universe_path, conditions_path, explain);
        if (*judge) return cmd_judge(config, records_path, judge_dataset, judge_family, judge_out);
        if (*cost) {
            return cmd_cost(cost_config.empty() ? std::nullopt : std::optional<fs::path>(cost_config), cost_args);
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MissingAsset& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StrategyError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
