#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "engine.hpp"
#include "numeric.hpp"
#include "oracle.hpp"
#include "process.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace snell {

// Margin used in float mode when deciding that a lambda lies strictly above
// the recovery threshold: closer than this, roundoff can flip the
// stop-or-continue test and recovery is not promised.
inline constexpr double kLambdaMargin = 1e-6;

// Backward-induction value of the optimal stopping problem on the subtree of
// `from`. `value` holds v on that subtree and is unset elsewhere; v(n) is the
// best achievable conditional expectation when play starts at n, because the
// recursion at n only looks below n.
template <class Scalar>
struct SnellSolution {
    const FiltrationTree* tree = nullptr;
    const Engine<Scalar>* engine = nullptr;
    NodeProcess<Scalar> reward;
    NodeProcess<Scalar> value;
    int from = -1;
    Comparator<Scalar> cmp;

    const Scalar& value_at(int node) const {
        require(tree->in_subtree(node, from), ErrorCode::NodeNotInSubtree,
                "node " + std::to_string(node) + " is outside the solved subtree");
        return value.at(node);
    }

    const Scalar& root_value() const { return value.at(from); }
};

// v = reward at the final step, v = max(reward, one-step expectation of v)
// above it. The caller keeps `tree` and `engine` alive for the solution's
// lifetime.
template <class Scalar>
SnellSolution<Scalar> snell(const Engine<Scalar>& engine, const FiltrationTree& tree,
                            const NodeProcess<Scalar>& reward, int from = -1) {
    require_reward(tree, reward);
    if (from < 0) from = tree.root();
    require(from >= 0 && from < tree.num_nodes(), ErrorCode::NodeNotInSubtree,
            "start node " + std::to_string(from) + " is not in the tree");
    SnellSolution<Scalar> sol;
    sol.tree = &tree;
    sol.engine = &engine;
    sol.reward = reward;
    sol.from = from;
    sol.value = NodeProcess<Scalar>(tree.num_nodes());
    const std::vector<int> order = tree.subtree_nodes(from); // parents before children
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int n = *it;
        if (tree.is_leaf(n)) {
            sol.value.set(n, reward.at(n));
            continue;
        }
        const auto& kids = tree.children(n);
        Vector<Scalar> vals(kids.size());
        for (std::size_t j = 0; j < kids.size(); ++j)
            vals[static_cast<Eigen::Index>(j)] = sol.value.at(kids[j]);
        Scalar cont = engine.one_step(n, vals);
        const Scalar& x = reward.at(n);
        sol.value.set(n, cont > x ? std::move(cont) : x);
    }
    return sol;
}

namespace detail {

// atoms of a start rule inside the solved subtree, validated canonical there
template <class Scalar>
std::vector<int> start_atoms(const SnellSolution<Scalar>& sol, const StoppingRule& start) {
    const FiltrationTree& tree = *sol.tree;
    require_same_tree(tree, start);
    require(is_canonical(tree, start, sol.from), ErrorCode::NonCanonicalRule,
            "start rule is not canonical on the solved subtree");
    std::vector<int> atoms;
    for (int n : start.flagged_nodes())
        if (tree.in_subtree(n, sol.from)) atoms.push_back(n);
    return atoms;
}

} // namespace detail

// The random variable v(S): value at each stop node of the start rule.
template <class Scalar>
std::map<int, Scalar> value_at(const SnellSolution<Scalar>& sol, const StoppingRule& start) {
    std::map<int, Scalar> out;
    for (int m : detail::start_atoms(sol, start)) out.emplace(m, sol.value.at(m));
    return out;
}

// First node at-or-after the start rule where the value touches the reward.
// This is the pathwise-smallest optimal rule: stopping later never helps once
// v = reward, and stopping earlier forfeits value where v > reward.
template <class Scalar>
StoppingRule minimal_optimal(const SnellSolution<Scalar>& sol, const StoppingRule& start) {
    const FiltrationTree& tree = *sol.tree;
    StoppingRule out(tree.num_nodes());
    std::vector<int> stack = detail::start_atoms(sol, start);
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (tree.is_leaf(n) || sol.cmp.eq(sol.value.at(n), sol.reward.at(n))) {
            out.set_flag(n);
            continue;
        }
        for (int c : tree.children(n)) stack.push_back(c);
    }
    return out;
}

template <class Scalar>
StoppingRule minimal_optimal(const SnellSolution<Scalar>& sol) {
    return minimal_optimal(sol, StoppingRule::stop_at(*sol.tree, sol.from));
}

// First node at-or-after the start rule where lambda * value <= reward.
// Leaves always qualify (value = reward >= 0 there), so the rule is canonical
// on the subtree; it never stops later than the minimal optimal rule.
template <class Scalar>
StoppingRule lambda_rule(const SnellSolution<Scalar>& sol, const StoppingRule& start,
                         const Scalar& lambda) {
    require(lambda > Scalar(0) && lambda < Scalar(1), ErrorCode::LambdaOutOfRange,
            "lambda must lie strictly between 0 and 1");
    const FiltrationTree& tree = *sol.tree;
    StoppingRule out(tree.num_nodes());
    std::vector<int> stack = detail::start_atoms(sol, start);
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (tree.is_leaf(n) || sol.cmp.leq(lambda * sol.value.at(n), sol.reward.at(n))) {
            out.set_flag(n);
            continue;
        }
        for (int c : tree.children(n)) stack.push_back(c);
    }
    return out;
}

template <class Scalar>
StoppingRule lambda_rule(const SnellSolution<Scalar>& sol, const Scalar& lambda) {
    return lambda_rule(sol, StoppingRule::stop_at(*sol.tree, sol.from), lambda);
}

// Largest reward/value ratio over the nodes where the minimal optimal rule
// keeps going after the start rule (0 if it stops immediately everywhere).
// For any lambda strictly above this, the lambda rule continues wherever the
// minimal optimal rule does, so the two coincide.
template <class Scalar>
Scalar lambda_threshold(const SnellSolution<Scalar>& sol, const StoppingRule& start) {
    const FiltrationTree& tree = *sol.tree;
    Scalar best(0);
    std::vector<int> stack = detail::start_atoms(sol, start);
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (tree.is_leaf(n) || sol.cmp.eq(sol.value.at(n), sol.reward.at(n))) continue;
        // v > reward >= 0 here, so the ratio is well defined and < 1
        Scalar ratio = sol.reward.at(n) / sol.value.at(n);
        if (ratio > best) best = std::move(ratio);
        for (int c : tree.children(n)) stack.push_back(c);
    }
    return best;
}

template <class Scalar>
Scalar lambda_threshold(const SnellSolution<Scalar>& sol) {
    return lambda_threshold(sol, StoppingRule::stop_at(*sol.tree, sol.from));
}

// The three equivalent faces of optimality for a candidate rule tau started
// from a rule S (tau must stop at or after S pathwise):
//   per_atom_attained  E_m[reward(tau)] = v(m) at every S-atom m
//   stops_on_contact   v = reward at every node where tau stops        | these
//   value_preserved    E_m[v(tau)] = v(m) at every S-atom m            | two
//                                                            together are (b)
//   overall_attained   E_from[v(S)] = E_from[reward(tau)]
// Strict monotonicity of the engines (all kernel weights >= min_prob > 0) is
// what lets the overall equality pull back to every atom, so the four flags
// must agree; a divergence is a solver bug, not a property of the instance.
struct OptimalityCertificate {
    bool per_atom_attained = false;
    bool stops_on_contact = false;
    bool value_preserved = false;
    bool overall_attained = false;

    double attained_worst_gap = 0.0;  // worst |E_m[reward(tau)] - v(m)|
    double contact_worst_gap = 0.0;   // worst |v - reward| over tau's stops
    double preserved_worst_gap = 0.0; // worst |E_m[v(tau)] - v(m)|
    double overall_lhs = 0.0;         // E_from[v(S)]
    double overall_rhs = 0.0;         // E_from[reward(tau)]

    bool optimal() const { return per_atom_attained; }
    bool consistent() const {
        return per_atom_attained == (stops_on_contact && value_preserved) &&
               per_atom_attained == overall_attained;
    }
};

template <class Scalar>
OptimalityCertificate check_optimality(const SnellSolution<Scalar>& sol, const StoppingRule& start,
                                       const StoppingRule& tau) {
    const FiltrationTree& tree = *sol.tree;
    const Engine<Scalar>& engine = *sol.engine;
    const std::vector<int> atoms = detail::start_atoms(sol, start);
    require(is_canonical(tree, tau, sol.from), ErrorCode::NonCanonicalRule,
            "candidate rule is not canonical on the solved subtree");
    require(rule_leq(tree, start, tau, sol.from), ErrorCode::OrderViolation,
            "candidate rule stops before the start rule on some path");

    OptimalityCertificate cert;
    cert.per_atom_attained = true;
    cert.value_preserved = true;
    for (int m : atoms) {
        const Scalar attained = stopped_value(engine, tree, sol.reward, tau, m);
        const Scalar preserved = stopped_value(engine, tree, sol.value, tau, m);
        if (!sol.cmp.eq(attained, sol.value.at(m))) {
            cert.per_atom_attained = false;
            cert.attained_worst_gap =
                std::max(cert.attained_worst_gap, sol.cmp.gap(attained, sol.value.at(m)));
        }
        if (!sol.cmp.eq(preserved, sol.value.at(m))) {
            cert.value_preserved = false;
            cert.preserved_worst_gap =
                std::max(cert.preserved_worst_gap, sol.cmp.gap(preserved, sol.value.at(m)));
        }
    }
    cert.stops_on_contact = true;
    for (int n : tau.flagged_nodes()) {
        if (!tree.in_subtree(n, sol.from)) continue;
        if (!sol.cmp.eq(sol.value.at(n), sol.reward.at(n))) {
            cert.stops_on_contact = false;
            cert.contact_worst_gap =
                std::max(cert.contact_worst_gap, sol.cmp.gap(sol.value.at(n), sol.reward.at(n)));
        }
    }
    const Scalar lhs = stopped_value(engine, tree, sol.value, start, sol.from);
    const Scalar rhs = stopped_value(engine, tree, sol.reward, tau, sol.from);
    cert.overall_attained = sol.cmp.eq(lhs, rhs);
    cert.overall_lhs = to_double(lhs);
    cert.overall_rhs = to_double(rhs);
    return cert;
}

// One grid point of the approximate-rule sweep.
template <class Scalar>
struct LambdaRow {
    Scalar lambda{};
    StoppingRule rule;
    Scalar attained{};    // E_from[reward(rule)]
    Scalar lower_bound{}; // lambda * E_from[v(S)]
    bool bound_holds = false;
    bool value_preserved = false; // E_m[v(rule)] = v(m) at every S-atom
    bool below_minimal = false;   // rule stops no later than the minimal one
    bool above_threshold = false; // strictly above, with a float-mode margin
    bool matches_minimal = false;
};

template <class Scalar>
struct LambdaReport {
    int from = -1;
    StoppingRule start;
    Scalar base{}; // E_from[v(S)]
    Scalar threshold{};
    StoppingRule minimal;
    std::vector<LambdaRow<Scalar>> rows;
    bool monotone = false;    // rules stop later as lambda grows
    bool bounds_hold = false; // lambda * E_from[v(S)] <= E_from[reward(rule)]
    bool preserved = false;
    bool ordered = false;     // every rule stops no later than the minimal one
    bool recovered = false;   // every above-threshold row matches the minimal rule

    bool ok() const { return monotone && bounds_hold && preserved && ordered && recovered; }
};

// Sweep a strictly increasing grid of lambdas in (0, 1) and record, for each,
// the approximate rule, its guaranteed fraction of the optimum, and whether
// it already coincides with the minimal optimal rule.
template <class Scalar>
LambdaReport<Scalar> eps_optimality_report(const SnellSolution<Scalar>& sol,
                                           const StoppingRule& start,
                                           const std::vector<Scalar>& grid) {
    require(!grid.empty(), ErrorCode::LambdaOutOfRange, "empty lambda grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] > Scalar(0) && grid[i] < Scalar(1), ErrorCode::LambdaOutOfRange,
                "lambda grid entries must lie strictly between 0 and 1");
        require(i == 0 || grid[i - 1] < grid[i], ErrorCode::LambdaOutOfRange,
                "lambda grid must be strictly increasing");
    }
    const FiltrationTree& tree = *sol.tree;
    const Engine<Scalar>& engine = *sol.engine;
    const std::vector<int> atoms = detail::start_atoms(sol, start);

    LambdaReport<Scalar> rep;
    rep.from = sol.from;
    rep.start = start;
    rep.base = stopped_value(engine, tree, sol.value, start, sol.from);
    rep.threshold = lambda_threshold(sol, start);
    rep.minimal = minimal_optimal(sol, start);
    rep.monotone = rep.bounds_hold = rep.preserved = rep.ordered = rep.recovered = true;

    for (const Scalar& lambda : grid) {
        LambdaRow<Scalar> row;
        row.lambda = lambda;
        row.rule = lambda_rule(sol, start, lambda);
        row.attained = stopped_value(engine, tree, sol.reward, row.rule, sol.from);
        row.lower_bound = lambda * rep.base;
        row.bound_holds = sol.cmp.leq(row.lower_bound, row.attained);
        row.value_preserved = true;
        for (int m : atoms) {
            const Scalar preserved = stopped_value(engine, tree, sol.value, row.rule, m);
            if (!sol.cmp.eq(preserved, sol.value.at(m))) row.value_preserved = false;
        }
        row.below_minimal = rule_leq(tree, row.rule, rep.minimal, sol.from);
        if constexpr (scalar_traits<Scalar>::exact) {
            row.above_threshold = lambda > rep.threshold;
        } else {
            row.above_threshold = to_double(lambda) > to_double(rep.threshold) + kLambdaMargin;
        }
        row.matches_minimal = row.rule == rep.minimal;

        if (!row.bound_holds) rep.bounds_hold = false;
        if (!row.value_preserved) rep.preserved = false;
        if (!row.below_minimal) rep.ordered = false;
        if (row.above_threshold && !row.matches_minimal) rep.recovered = false;
        if (!rep.rows.empty() && !rule_leq(tree, rep.rows.back().rule, row.rule, sol.from))
            rep.monotone = false;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

template <class Scalar>
LambdaReport<Scalar> eps_optimality_report(const SnellSolution<Scalar>& sol,
                                           const std::vector<Scalar>& grid) {
    return eps_optimality_report(sol, StoppingRule::stop_at(*sol.tree, sol.from), grid);
}

// Checks that the solved value is the smallest supermartingale enveloping the
// reward:
//   dominates          v >= reward on the subtree
//   recursion_tight    v = max(reward, one-step of v) at every node
//   optional_sampling  sampled rule pairs sigma <= tau obey
//                      E_m[v(tau)] <= v(sigma) at every sigma-atom
//   minimal            sampled competing supermartingale majorants of the
//                      reward sit above v everywhere
//   enumerated_sup     for sampled start rules S, E_from[v(S)] equals the
//                      exhaustive max of E_from[reward(tau)] over every rule
//                      tau at-or-after S (skipped when the subtree admits
//                      more rules than `sup_budget`; see sup_checks)
struct SupermartingaleReport {
    bool dominates = false;
    bool recursion_tight = false;
    bool optional_sampling = false;
    bool minimal = false;
    bool enumerated_sup = false;
    int pairs = 0;
    int envelopes = 0;
    int sup_checks = 0; // 0 means the enumerated-sup clause was skipped

    bool ok() const {
        return dominates && recursion_tight && optional_sampling && minimal && enumerated_sup;
    }
};

template <class Scalar>
SupermartingaleReport supermartingale_check(const SnellSolution<Scalar>& sol, int num_samples,
                                            std::uint64_t seed, std::uint64_t sup_budget = 10000,
                                            int max_sup_checks = 5) {
    require(num_samples >= 1, ErrorCode::SpecError, "need at least one sample");
    const FiltrationTree& tree = *sol.tree;
    const Engine<Scalar>& engine = *sol.engine;
    std::mt19937_64 rng(seed);
    SupermartingaleReport rep;
    rep.dominates = rep.recursion_tight = rep.optional_sampling = rep.minimal =
        rep.enumerated_sup = true;

    const std::vector<int> order = tree.subtree_nodes(sol.from);
    for (int n : order) {
        if (!sol.cmp.leq(sol.reward.at(n), sol.value.at(n))) rep.dominates = false;
        Scalar expect;
        if (tree.is_leaf(n)) {
            expect = sol.reward.at(n);
        } else {
            const auto& kids = tree.children(n);
            Vector<Scalar> vals(kids.size());
            for (std::size_t j = 0; j < kids.size(); ++j)
                vals[static_cast<Eigen::Index>(j)] = sol.value.at(kids[j]);
            Scalar cont = engine.one_step(n, vals);
            const Scalar& x = sol.reward.at(n);
            expect = cont > x ? std::move(cont) : x;
        }
        if (!sol.cmp.eq(sol.value.at(n), expect)) rep.recursion_tight = false;
    }

    for (int i = 0; i < num_samples; ++i) {
        StoppingRule late = random_rule(tree, rng, sol.from);
        StoppingRule other = random_rule(tree, rng, sol.from);
        StoppingRule early = meet(tree, late, other, sol.from);
        for (int m : early.flagged_nodes()) {
            const Scalar lifted = stopped_value(engine, tree, sol.value, late, m);
            if (!sol.cmp.leq(lifted, sol.value.at(m))) rep.optional_sampling = false;
        }
        ++rep.pairs;
    }

    for (int i = 0; i < num_samples; ++i) {
        // random supermartingale dominating the reward: tight recursion plus
        // nonnegative slack at every node
        NodeProcess<Scalar> competitor(tree.num_nodes());
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int n = *it;
            Scalar base;
            if (tree.is_leaf(n)) {
                base = sol.reward.at(n);
            } else {
                const auto& kids = tree.children(n);
                Vector<Scalar> vals(kids.size());
                for (std::size_t j = 0; j < kids.size(); ++j)
                    vals[static_cast<Eigen::Index>(j)] = competitor.at(kids[j]);
                Scalar cont = engine.one_step(n, vals);
                const Scalar& x = sol.reward.at(n);
                base = cont > x ? std::move(cont) : x;
            }
            Scalar slack;
            if constexpr (scalar_traits<Scalar>::exact) {
                slack = Scalar(Rational(static_cast<long>(rng_below(rng, 201)), 100));
            } else {
                slack = Scalar(static_cast<double>(rng_below(rng, 201)) / 100.0);
            }
            competitor.set(n, base + slack);
        }
        for (int n : order)
            if (!sol.cmp.leq(sol.value.at(n), competitor.at(n))) rep.minimal = false;
        ++rep.envelopes;
    }

    // E_from[v(S)] must equal the exhaustive max of E_from[reward(tau)] over
    // all rules tau at-or-after S; only run where the full enumeration fits.
    if (RuleEnumeration all(tree, sol.from); !all.saturated() && all.count() <= sup_budget) {
        const int checks = std::min(num_samples, max_sup_checks);
        for (int i = 0; i < checks; ++i) {
            const StoppingRule start = random_rule(tree, rng, sol.from);
            const RuleEnumeration en(tree, start, sol.from);
            Scalar best(0);
            for (std::uint64_t idx = 0; idx < en.count(); ++idx) {
                Scalar val =
                    stopped_value(engine, tree, sol.reward, en.rule_at(idx), sol.from);
                if (idx == 0 || val > best) best = std::move(val);
            }
            const Scalar lhs = stopped_value(engine, tree, sol.value, start, sol.from);
            if (!sol.cmp.eq(lhs, best)) rep.enumerated_sup = false;
            ++rep.sup_checks;
        }
    }
    return rep;
}

} // namespace snell
