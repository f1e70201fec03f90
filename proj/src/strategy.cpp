#include "futuremind/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <sstream>

namespace futuremind {

void CandidateUniverse::validate() const {
    std::set<std::string> ids;
    for (const auto& e : entities) {
        if (!ids.insert(e.id).second) throw StrategyError("duplicate entity id: " + e.id);
    }
}

std::optional<PredicateOp> parse_predicate_op(std::string_view s) {
    if (s == "eq") return PredicateOp::Eq;
    if (s == "neq") return PredicateOp::Neq;
    if (s == "lt") return PredicateOp::Lt;
    if (s == "gt") return PredicateOp::Gt;
    if (s == "contains") return PredicateOp::Contains;
    return std::nullopt;
}

std::string_view to_string(PredicateOp op) {
    switch (op) {
        case PredicateOp::Eq: return "eq";
        case PredicateOp::Neq: return "neq";
        case PredicateOp::Lt: return "lt";
        case PredicateOp::Gt: return "gt";
        case PredicateOp::Contains: return "contains";
    }
    return "?";
}

bool Predicate::operator()(const Entity& e) const {
    auto it = e.attributes.find(attribute);
    if (it == e.attributes.end()) return false;
    const Scalar& lhs = it->second;
    if (lhs.index() != value.index()) return op == PredicateOp::Neq;
    switch (op) {
        case PredicateOp::Eq: return lhs == value;
        case PredicateOp::Neq: return lhs != value;
        case PredicateOp::Lt:
            if (std::holds_alternative<bool>(lhs)) return false;
            return lhs < value;
        case PredicateOp::Gt:
            if (std::holds_alternative<bool>(lhs)) return false;
            return lhs > value;
        case PredicateOp::Contains:
            if (!std::holds_alternative<std::string>(lhs)) return false;
            return std::get<std::string>(lhs).find(std::get<std::string>(value)) != std::string::npos;
    }
    return false;
}

namespace {

struct Filtered {
    std::vector<const Entity*> survivors;
    std::int64_t evaluations = 0;
};

Filtered filter(const std::vector<const Entity*>& input, const Condition& c) {
    Filtered out;
    for (const Entity* e : input) {
        ++out.evaluations;
        if (c.predicate(*e)) out.survivors.push_back(e);
    }
    return out;
}

EntitySet ids_of(const std::vector<const Entity*>& v) {
    EntitySet s;
    for (const Entity* e : v) s.insert(e->id);
    return s;
}

}  // namespace

StrategyRun run_strategy(StrategyKind kind, const CandidateUniverse& universe, const std::vector<Condition>& conditions,
                         bool parallel) {
    if (conditions.empty()) throw StrategyError("EmptyConditionList: a strategy needs at least one condition");

    std::vector<const Entity*> all;
    all.reserve(universe.entities.size());
    for (const auto& e : universe.entities) all.push_back(&e);

    StrategyRun run;
    run.kind = kind;

    if (kind == StrategyKind::C) {
        std::vector<Filtered> branches(conditions.size());
        if (parallel && conditions.size() > 1) {
            std::vector<std::future<Filtered>> futures;
            for (const auto& c : conditions) {
                futures.push_back(std::async(std::launch::async, [&all, &c] { return filter(all, c); }));
            }
            for (std::size_t i = 0; i < futures.size(); ++i) branches[i] = futures[i].get();
        } else {
            for (std::size_t i = 0; i < conditions.size(); ++i) branches[i] = filter(all, conditions[i]);
        }
        for (auto& b : branches) {
            run.evaluations += b.evaluations;
            run.intermediate_sets.push_back(ids_of(b.survivors));
        }
        run.result = run.intermediate_sets.front();
        for (std::size_t i = 1; i < run.intermediate_sets.size(); ++i) {
            EntitySet next;
            std::set_intersection(run.result.begin(), run.result.end(), run.intermediate_sets[i].begin(),
                                  run.intermediate_sets[i].end(), std::inserter(next, next.end()));
            run.result = std::move(next);
        }
        return run;
    }

    std::vector<std::size_t> order(conditions.size());
    std::iota(order.begin(), order.end(), 0);
    if (kind == StrategyKind::B) std::reverse(order.begin(), order.end());

    std::vector<const Entity*> current = all;
    for (auto idx : order) {
        auto step = filter(current, conditions[idx]);
        run.evaluations += step.evaluations;
        current = std::move(step.survivors);
        run.intermediate_sets.push_back(ids_of(current));
    }
    run.result = run.intermediate_sets.back();
    return run;
}

EntitySet brute_force_intersection(const CandidateUniverse& universe, const std::vector<Condition>& conditions) {
    EntitySet out;
    for (const auto& e : universe.entities) {
        bool all = true;
        for (const auto& c : conditions) all = c.predicate(e) && all;
        if (all) out.insert(e.id);
    }
    return out;
}

double estimate_selectivity(const CandidateUniverse& universe, const Condition& condition, std::size_t sample_size) {
    if (sample_size == 0) throw std::invalid_argument("estimate_selectivity: sample_size must be >= 1");
    if (condition.declared_selectivity) return *condition.declared_selectivity;
    const auto n = universe.entities.size();
    if (n == 0) return 0.0;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const auto k = std::min(sample_size, n);
    if (k < n) {
        // Partial Fisher-Yates with a fixed seed.
        std::mt19937_64 rng(0x5eedf00dULL);
        for (std::size_t i = 0; i < k; ++i) {
            auto j = i + static_cast<std::size_t>(rng() % (n - i));
            std::swap(idx[i], idx[j]);
        }
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) hits += condition.predicate(universe.entities[idx[i]]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

double expected_cost(StrategyKind kind, const std::vector<double>& selectivities) {
    const auto m = selectivities.size();
    if (kind == StrategyKind::C) return static_cast<double>(m);
    std::vector<double> s = selectivities;
    if (kind == StrategyKind::B) std::reverse(s.begin(), s.end());
    // Step j scans the survivors of steps 1..j-1.
    double cost = 0.0;
    double surviving = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
        cost += surviving;
        surviving *= s[j];
    }
    return cost;
}

StrategySelection select_strategy(const std::vector<Condition>& conditions, const std::vector<double>& selectivities,
                                  SelectionMode mode, const ThinkingPlan* plan) {
    if (conditions.size() != selectivities.size()) {
        throw StrategyError("LengthMismatch: " + std::to_string(conditions.size()) + " conditions but " +
                            std::to_string(selectivities.size()) + " selectivities");
    }
    if (mode == SelectionMode::Teacher && plan != nullptr && !plan->parse_degraded && !plan->strategy.empty()) {
        StrategySelection sel;
        sel.kinds = plan->strategy;
        sel.rationale = "teacher recommendation";
        return sel;
    }

    StrategySelection sel;
    constexpr std::array<StrategyKind, 3> kinds{StrategyKind::A, StrategyKind::B, StrategyKind::C};
    for (std::size_t i = 0; i < kinds.size(); ++i) sel.expected_costs[i] = expected_cost(kinds[i], selectivities);

    std::size_t best = 0;
    for (std::size_t i = 1; i < kinds.size(); ++i) {
        const double tol = 1e-12 * std::max(1.0, std::abs(sel.expected_costs[best]));
        if (sel.expected_costs[i] < sel.expected_costs[best] - tol) best = i;
    }
    sel.kinds = {kinds[best]};

    std::ostringstream why;
    if (mode == SelectionMode::Teacher) why << "teacher plan unavailable or degraded; ";
    why << "local expected-cost model (independent selectivities, stand-in for the teacher's cost judgement): "
        << "A=" << sel.expected_costs[0] << " B=" << sel.expected_costs[1] << " C=" << sel.expected_costs[2]
        << " evaluations per candidate; chose " << to_char(kinds[best]);
    sel.rationale = why.str();
    return sel;
}

namespace {

Scalar scalar_from_json(const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_string()) return v.get<std::string>();
    throw StrategyError("attribute values must be boolean, integer, or text; got " + v.dump());
}

}  // namespace

CandidateUniverse universe_from_json(const json& j) {
    const json& list = j.is_array() ? j : j.at("entities");
    CandidateUniverse u;
    for (const auto& item : list) {
        Entity e;
        const auto& id = item.at("id");
        e.id = id.is_string() ? id.get<std::string>() : id.dump();
        const json attributes = item.value("attributes", json::object());
        for (const auto& [k, v] : attributes.items()) {
            if (v.is_null()) continue;  // unknown, same as absent
            e.attributes.emplace(k, scalar_from_json(v));
        }
        u.entities.push_back(std::move(e));
    }
    u.validate();
    return u;
}

std::vector<Condition> conditions_from_json(const json& j) {
    const json& list = j.is_array() ? j : j.at("conditions");
    std::vector<Condition> out;
    for (const auto& item : list) {
        Condition c;
        c.id = item.value("id", "K" + std::to_string(out.size() + 1));
        c.predicate.attribute = item.at("attribute").get<std::string>();
        auto op = parse_predicate_op(item.at("op").get<std::string>());
        if (!op) throw StrategyError("unknown predicate op: " + item.at("op").dump());
        c.predicate.op = *op;
        c.predicate.value = scalar_from_json(item.at("value"));
        if (c.predicate.op == PredicateOp::Contains && !std::holds_alternative<std::string>(c.predicate.value)) {
            throw StrategyError("contains needs a text value in condition " + c.id);
        }
        if (item.contains("selectivity")) {
            double s = item.at("selectivity").get<double>();
            if (!(s > 0.0 && s <= 1.0)) throw StrategyError("declared selectivity must lie in (0, 1]");
            c.declared_selectivity = s;
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace futuremind
