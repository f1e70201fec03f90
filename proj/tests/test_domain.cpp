#include <gtest/gtest.h>

#include "futuremind/domain.hpp"

using namespace futuremind;

TEST(Domain, EnumNamesRoundTrip) {
    for (auto p : {Pipeline::Naive, Pipeline::Rag, Pipeline::SearchO1, Pipeline::Tc, Pipeline::TcFm}) {
        EXPECT_EQ(parse_pipeline(to_string(p)), p);
    }
    for (auto d : {Dataset::TwoWiki, Dataset::Musique, Dataset::Bamboogle, Dataset::Frames, Dataset::Custom}) {
        EXPECT_EQ(parse_dataset(to_string(d)), d);
    }
    EXPECT_FALSE(parse_pipeline("react").has_value());
    EXPECT_EQ(parse_strategy_kind('B'), StrategyKind::B);
    EXPECT_FALSE(parse_strategy_kind('D').has_value());
}

TEST(Domain, GenerationDefaults) {
    auto p = default_generation_params();
    EXPECT_EQ(p.max_tokens, 32768);
    EXPECT_DOUBLE_EQ(p.temperature, 0.0);
    EXPECT_DOUBLE_EQ(p.top_p, 0.8);
    EXPECT_EQ(p.top_k, 20);
    EXPECT_DOUBLE_EQ(p.repetition_penalty, 1.05);
    EXPECT_EQ(p, GenerationParams{});
}

TEST(Domain, ToolMessagesCarryName) {
    auto t = ChatMessage::tool("google_search", "x");
    EXPECT_TRUE(t.well_formed());
    EXPECT_EQ(t.tool_name, "google_search");
    EXPECT_TRUE(ChatMessage::user("q").well_formed());
    ChatMessage bad = ChatMessage::user("q");
    bad.tool_name = "oops";
    EXPECT_FALSE(bad.well_formed());
}

TEST(Domain, LedgerAdditionTracksEstimation) {
    CostLedger a{10, 2, 1, TokenSource::EndpointReported};
    CostLedger b{5, 1, 3, TokenSource::Estimated};
    auto sum = merge_ledgers(a, b);
    EXPECT_EQ(sum.input_tokens, 15);
    EXPECT_EQ(sum.output_tokens, 3);
    EXPECT_EQ(sum.search_queries, 4);
    EXPECT_EQ(sum.token_source, TokenSource::Estimated);
    a += CostLedger{};
    EXPECT_EQ(a.token_source, TokenSource::EndpointReported);
}

TEST(Domain, RunRecordJsonlRoundTrip) {
    RunRecord r;
    r.question_id = "q1";
    r.pipeline = Pipeline::TcFm;
    r.transcript = {ChatMessage::system("s"), ChatMessage::user("u"), ChatMessage::assistant("a\nb"),
                    ChatMessage::tool("futuremind", "<tool_response>p</tool_response>")};
    r.final_answer = "Paris";
    r.steps_used = 3;
    r.forced_answer = true;
    ThinkingPlan plan;
    plan.objectives = "o";
    plan.conditions = {"K1: x", "K2: y"};
    plan.strategy = {StrategyKind::A, StrategyKind::C};
    plan.guidance.keywords = "k";
    plan.raw = "raw";
    r.plans.push_back(plan);
    r.ledger = {100, 20, 4, TokenSource::Estimated};
    r.status = RunStatus::Degraded;
    r.notes = {"n"};

    auto line = to_jsonl_line(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    auto back = run_record_from_jsonl_line(line);
    EXPECT_EQ(to_jsonl_line(back), line);
    EXPECT_EQ(back.transcript, r.transcript);
    EXPECT_EQ(back.plans.at(0).strategy, plan.strategy);
    EXPECT_EQ(back.ledger, r.ledger);
    EXPECT_EQ(back.final_answer, "Paris");
}
