#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "futuremind/domain.hpp"

namespace futuremind {

class StrategyError : public Error {
public:
    using Error::Error;
};

using Scalar = std::variant<bool, std::int64_t, std::string>;

struct Entity {
    std::string id;
    std::map<std::string, Scalar> attributes;
};

// The candidate space U. Entity ids are unique.
struct CandidateUniverse {
    std::vector<Entity> entities;

    void validate() const;
    std::size_t size() const { return entities.size(); }
};

enum class PredicateOp { Eq, Neq, Lt, Gt, Contains };

std::optional<PredicateOp> parse_predicate_op(std::string_view s);
std::string_view to_string(PredicateOp op);

// phi(K_i, x). A missing attribute makes every op false; a type mismatch makes
// only `neq` true.
struct Predicate {
    std::string attribute;
    PredicateOp op = PredicateOp::Eq;
    Scalar value;

    bool operator()(const Entity& e) const;
};

struct Condition {
    std::string id;
    Predicate predicate;
    std::optional<double> declared_selectivity;  // in (0, 1]
};

using EntitySet = std::set<std::string>;

struct StrategyRun {
    StrategyKind kind = StrategyKind::A;
    std::vector<EntitySet> intermediate_sets;  // in evaluation order
    EntitySet result;
    std::int64_t evaluations = 0;  // predicate applications
};

// A: K_1..K_m, each step over the previous survivors.
// B: K_m..K_1, each step over the previous survivors.
// C: every condition over all of U, then intersect. Scans run concurrently when
//    `parallel` is set; per-branch counts are summed after the join.
StrategyRun run_strategy(StrategyKind kind, const CandidateUniverse& universe, const std::vector<Condition>& conditions,
                         bool parallel = false);

// Direct evaluation of every (condition, entity) pair. No conditions yields all of U.
EntitySet brute_force_intersection(const CandidateUniverse& universe, const std::vector<Condition>& conditions);

// Fraction of a fixed-seed sample that satisfies the condition; exact once sample_size >= |U|.
// A declared selectivity wins over sampling.
double estimate_selectivity(const CandidateUniverse& universe, const Condition& condition, std::size_t sample_size);

// Expected predicate evaluations per candidate, assuming independent conditions.
double expected_cost(StrategyKind kind, const std::vector<double>& selectivities);

enum class SelectionMode { Local, Teacher };

struct StrategySelection {
    std::vector<StrategyKind> kinds;
    std::string rationale;
    std::array<double, 3> expected_costs{};  // A, B, C; zero in teacher mode
};

// Local: arg-min of expected_cost, ties broken A < B < C.
// Teacher: the plan's strategy set, falling back to local when the plan is degraded or empty.
StrategySelection select_strategy(const std::vector<Condition>& conditions, const std::vector<double>& selectivities,
                                  SelectionMode mode, const ThinkingPlan* plan = nullptr);

CandidateUniverse universe_from_json(const json& j);
std::vector<Condition> conditions_from_json(const json& j);

}  // namespace futuremind
