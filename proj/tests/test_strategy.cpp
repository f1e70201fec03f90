#include <gtest/gtest.h>

#include <numeric>

#include "futuremind/strategy.hpp"
#include "test_support.hpp"

using namespace futuremind;

namespace {

Condition cond(std::string id, std::string attr, PredicateOp op, Scalar v) {
    return Condition{std::move(id), Predicate{std::move(attr), op, std::move(v)}, std::nullopt};
}

CandidateUniverse painters() {
    return universe_from_json(json::parse(fmtest::slurp(fmtest::data_dir() / "strategy" / "universe.json")));
}

}  // namespace

TEST(Strategy, PredicateSemantics) {
    Entity e{"x", {{"n", std::int64_t{5}}, {"b", true}, {"w", std::string("redwood")}}};
    EXPECT_TRUE(Predicate({"n", PredicateOp::Eq, std::int64_t{5}})(e));
    EXPECT_TRUE(Predicate({"n", PredicateOp::Gt, std::int64_t{4}})(e));
    EXPECT_FALSE(Predicate({"n", PredicateOp::Lt, std::int64_t{5}})(e));
    EXPECT_TRUE(Predicate({"w", PredicateOp::Contains, std::string("red")})(e));
    EXPECT_TRUE(Predicate({"w", PredicateOp::Lt, std::string("zebra")})(e));
    EXPECT_FALSE(Predicate({"b", PredicateOp::Gt, false})(e));
    // type mismatch: only neq holds
    EXPECT_FALSE(Predicate({"n", PredicateOp::Eq, std::string("5")})(e));
    EXPECT_TRUE(Predicate({"n", PredicateOp::Neq, std::string("5")})(e));
    // missing attribute: nothing holds
    EXPECT_FALSE(Predicate({"missing", PredicateOp::Neq, std::int64_t{1}})(e));
}

TEST(Strategy, ShippedUniverseHasKnownIntersection) {
    auto u = painters();
    auto conds = conditions_from_json(json::parse(fmtest::slurp(fmtest::data_dir() / "strategy" / "conditions.json")));
    ASSERT_EQ(conds.size(), 4u);
    for (auto k : {StrategyKind::A, StrategyKind::B, StrategyKind::C}) {
        auto run = run_strategy(k, u, conds);
        EXPECT_EQ(run.result, (EntitySet{"painter-07"})) << to_char(k);
    }
    EXPECT_EQ(brute_force_intersection(u, conds), (EntitySet{"painter-07"}));
}

TEST(Strategy, ContradictoryConditionsGiveEmptyResult) {
    auto u = painters();
    auto conds = conditions_from_json(
        json::parse(fmtest::slurp(fmtest::data_dir() / "strategy" / "conditions_contradictory.json")));
    for (auto k : {StrategyKind::A, StrategyKind::B, StrategyKind::C}) EXPECT_TRUE(run_strategy(k, u, conds).result.empty());
}

TEST(Strategy, SingleConditionDegenerates) {
    auto u = painters();
    std::vector<Condition> conds{cond("K1", "children", PredicateOp::Eq, std::int64_t{5})};
    auto a = run_strategy(StrategyKind::A, u, conds);
    auto b = run_strategy(StrategyKind::B, u, conds);
    auto c = run_strategy(StrategyKind::C, u, conds);
    EXPECT_EQ(a.result, b.result);
    EXPECT_EQ(a.result, c.result);
    EXPECT_EQ(a.evaluations, static_cast<std::int64_t>(u.size()));
    EXPECT_EQ(c.evaluations, static_cast<std::int64_t>(u.size()));
}

TEST(Strategy, EmptyConditionListIsRejected) {
    EXPECT_THROW(run_strategy(StrategyKind::A, painters(), {}), StrategyError);
}

TEST(Strategy, IntermediateSetsShrink) {
    auto u = painters();
    auto conds = conditions_from_json(json::parse(fmtest::slurp(fmtest::data_dir() / "strategy" / "conditions.json")));
    auto a = run_strategy(StrategyKind::A, u, conds);
    ASSERT_EQ(a.intermediate_sets.size(), 4u);
    for (std::size_t i = 1; i < a.intermediate_sets.size(); ++i) {
        EXPECT_TRUE(std::includes(a.intermediate_sets[i - 1].begin(), a.intermediate_sets[i - 1].end(),
                                  a.intermediate_sets[i].begin(), a.intermediate_sets[i].end()));
    }
}

TEST(Strategy, RandomEquivalenceAndCountLaws) {
    std::mt19937_64 rng(99);
    for (int n = 0; n < 300; ++n) {
        auto inst = fmtest::random_instance(rng);
        const auto oracle = brute_force_intersection(inst.universe, inst.conditions);
        const auto m = inst.conditions.size();
        std::vector<std::size_t> fwd(m);
        std::iota(fwd.begin(), fwd.end(), 0);
        std::vector<std::size_t> rev(fwd.rbegin(), fwd.rend());

        auto a = run_strategy(StrategyKind::A, inst.universe, inst.conditions);
        auto b = run_strategy(StrategyKind::B, inst.universe, inst.conditions);
        auto c = run_strategy(StrategyKind::C, inst.universe, inst.conditions, n % 2 == 0);
        ASSERT_EQ(a.result, oracle);
        ASSERT_EQ(b.result, oracle);
        ASSERT_EQ(c.result, oracle);

        std::int64_t want_a = 0, want_b = 0;
        for (std::size_t j = 0; j < m; ++j) {
            want_a += static_cast<std::int64_t>(fmtest::prefix_survivors(inst, fwd, j));
            want_b += static_cast<std::int64_t>(fmtest::prefix_survivors(inst, rev, j));
        }
        ASSERT_EQ(a.evaluations, want_a);
        ASSERT_EQ(b.evaluations, want_b);
        ASSERT_EQ(c.evaluations, static_cast<std::int64_t>(m * inst.universe.size()));
    }
}

TEST(Strategy, ExpectedCostClosedForms) {
    std::vector<double> s{0.5, 0.1, 0.8};
    EXPECT_DOUBLE_EQ(expected_cost(StrategyKind::A, s), 1 + 0.5 + 0.05);
    EXPECT_DOUBLE_EQ(expected_cost(StrategyKind::B, s), 1 + 0.8 + 0.08);
    EXPECT_DOUBLE_EQ(expected_cost(StrategyKind::C, s), 3.0);
}

TEST(Strategy, LocalSelectionPicksCheapestWithTieOrder) {
    std::vector<Condition> conds(3);
    auto sel = select_strategy(conds, {0.5, 0.1, 0.8}, SelectionMode::Local);
    EXPECT_EQ(sel.kinds, (std::vector{StrategyKind::A}));
    EXPECT_NE(sel.rationale.find("stand-in"), std::string::npos);
    auto back = select_strategy(conds, {0.9, 0.9, 0.05}, SelectionMode::Local);
    EXPECT_EQ(back.kinds, (std::vector{StrategyKind::B}));
    // all selectivities 1: A = B = C = m, tie goes to A
    auto tie = select_strategy(conds, {1.0, 1.0, 1.0}, SelectionMode::Local);
    EXPECT_EQ(tie.kinds, (std::vector{StrategyKind::A}));
    EXPECT_THROW(select_strategy(conds, {0.5}, SelectionMode::Local), StrategyError);
}

TEST(Strategy, TeacherSelectionFollowsPlanUnlessDegraded) {
    std::vector<Condition> conds(2);
    ThinkingPlan plan;
    plan.strategy = {StrategyKind::B, StrategyKind::C};
    auto sel = select_strategy(conds, {0.5, 0.5}, SelectionMode::Teacher, &plan);
    EXPECT_EQ(sel.kinds, plan.strategy);
    plan.parse_degraded = true;
    auto fallback = select_strategy(conds, {0.5, 0.5}, SelectionMode::Teacher, &plan);
    EXPECT_EQ(fallback.kinds, (std::vector{StrategyKind::A}));
    EXPECT_NE(fallback.rationale.find("degraded"), std::string::npos);
}

TEST(Strategy, SelectivityEstimation) {
    auto u = painters();
    auto c = cond("K1", "children", PredicateOp::Eq, std::int64_t{5});
    std::size_t exact = 0;
    for (const auto& e : u.entities) exact += c.predicate(e) ? 1 : 0;
    EXPECT_DOUBLE_EQ(estimate_selectivity(u, c, 1000), static_cast<double>(exact) / u.size());
    EXPECT_DOUBLE_EQ(estimate_selectivity(u, c, 5), estimate_selectivity(u, c, 5));
    c.declared_selectivity = 0.25;
    EXPECT_DOUBLE_EQ(estimate_selectivity(u, c, 5), 0.25);
    EXPECT_DOUBLE_EQ(estimate_selectivity(CandidateUniverse{}, cond("x", "a", PredicateOp::Eq, true), 5), 0.0);
}

TEST(Strategy, JsonShapeErrors) {
    EXPECT_THROW(universe_from_json(json::parse(R"([{"id":"a"},{"id":"a"}])")), StrategyError);
    EXPECT_THROW(conditions_from_json(json::parse(R"([{"attribute":"a","op":"like","value":1}])")), StrategyError);
    EXPECT_THROW(conditions_from_json(json::parse(R"([{"attribute":"a","op":"contains","value":1}])")), StrategyError);
    EXPECT_THROW(universe_from_json(json::parse(R"([{"id":"a","attributes":{"x":1.5}}])")), StrategyError);
}
