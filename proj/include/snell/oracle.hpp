#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "engine.hpp"
#include "numeric.hpp"
#include "process.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace snell {

namespace detail {

// Counts saturate here instead of overflowing; any saturated total is far
// beyond every enumeration budget anyway.
inline constexpr std::uint64_t kSaturatedCount = std::uint64_t{1} << 62;

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a >= kSaturatedCount || b >= kSaturatedCount) return kSaturatedCount;
    if (a > kSaturatedCount / b) return kSaturatedCount;
    return a * b;
}

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    if (a >= kSaturatedCount || b >= kSaturatedCount || a + b >= kSaturatedCount)
        return kSaturatedCount;
    return a + b;
}

inline std::uint64_t sat_pow(std::uint64_t base, int exp) {
    std::uint64_t out = 1;
    for (int i = 0; i < exp; ++i) out = sat_mul(out, base);
    return out;
}

} // namespace detail

// Exhaustive indexing of the canonical stopping rules on a subtree, or of the
// rules stopping at-or-after a base rule. A rule at node n either stops there
// or picks one rule per child, so the per-node counts obey
//   T(leaf) = 1,   T(n) = 1 + prod_children T(c)
// and a rule at-or-after a base rule chooses independently under each base
// atom, for a total of prod_atoms T(atom). Every index below the total
// decodes to a distinct rule: per node, index 0 means "stop here" and index
// i >= 1 splits i-1 by mixed radix across the children, first child least
// significant; across atoms the first atom (smallest id) is least
// significant.
class RuleEnumeration {
  public:
    explicit RuleEnumeration(const FiltrationTree& tree, int top = -1)
        : RuleEnumeration(tree, top < 0 ? tree.root() : top, nullptr) {}

    RuleEnumeration(const FiltrationTree& tree, const StoppingRule& base, int top = -1)
        : RuleEnumeration(tree, top < 0 ? tree.root() : top, &base) {}

    int top() const { return top_; }
    const std::vector<int>& atoms() const { return atoms_; }
    std::uint64_t count() const { return total_; }
    std::uint64_t count_at(int node) const { return counts_[node]; }
    bool saturated() const { return total_ >= detail::kSaturatedCount; }

    StoppingRule rule_at(std::uint64_t index) const {
        require(!saturated(), ErrorCode::BudgetExceeded, "rule family too large to index");
        require(index < count(), ErrorCode::BudgetExceeded,
                "rule index " + std::to_string(index) + " out of range");
        StoppingRule out(tree_->num_nodes());
        for (int a : atoms_) {
            decode(a, index % counts_[a], out);
            index /= counts_[a];
        }
        return out;
    }

  private:
    RuleEnumeration(const FiltrationTree& tree, int top, const StoppingRule* base)
        : tree_(&tree), top_(top), counts_(tree.num_nodes(), 0) {
        if (base != nullptr) {
            require(is_canonical(tree, *base, top_), ErrorCode::NonCanonicalRule,
                    "base rule is not canonical on the subtree");
            for (int n : base->flagged_nodes())
                if (tree.in_subtree(n, top_)) atoms_.push_back(n);
        } else {
            atoms_.push_back(top_);
        }
        const std::vector<int> order = tree.subtree_nodes(top_);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int n = *it;
            if (tree.is_leaf(n)) {
                counts_[n] = 1;
                continue;
            }
            std::uint64_t prod = 1;
            for (int c : tree.children(n)) prod = detail::sat_mul(prod, counts_[c]);
            counts_[n] = detail::sat_add(1, prod);
        }
        total_ = 1;
        for (int a : atoms_) total_ = detail::sat_mul(total_, counts_[a]);
    }

    void decode(int node, std::uint64_t index, StoppingRule& out) const {
        if (index == 0) {
            out.set_flag(node);
            return;
        }
        std::uint64_t rest = index - 1;
        for (int c : tree_->children(node)) {
            decode(c, rest % counts_[c], out);
            rest /= counts_[c];
        }
    }

    const FiltrationTree* tree_;
    int top_;
    std::vector<int> atoms_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

// Every canonical rule stopping at-or-after `base` on every path of the
// subtree, exactly once.
inline RuleEnumeration enumerate_rules(const FiltrationTree& tree, const StoppingRule& base,
                                       int top = -1) {
    return RuleEnumeration(tree, base, top);
}

// Every optimal rule of the single-stopping problem, found by trying all of
// them. Small subtrees only; the point is independence from the backward
// recursion, not speed.
template <class Scalar>
struct BruteSingleResult {
    Scalar value{};
    std::vector<StoppingRule> optimal; // all rules attaining the value
    std::uint64_t searched = 0;
};

template <class Scalar>
BruteSingleResult<Scalar> brute_value_single(const Engine<Scalar>& engine,
                                             const FiltrationTree& tree,
                                             const NodeProcess<Scalar>& reward, int from = -1,
                                             std::uint64_t budget = 10000) {
    require_reward(tree, reward);
    if (from < 0) from = tree.root();
    RuleEnumeration en(tree, from);
    require(!en.saturated() && en.count() <= budget, ErrorCode::BudgetExceeded,
            "the subtree admits " +
                (en.saturated() ? std::string("more than 2^62")
                                : std::to_string(en.count())) +
                " rules, budget is " + std::to_string(budget));
    Comparator<Scalar> cmp;
    BruteSingleResult<Scalar> res;
    for (std::uint64_t i = 0; i < en.count(); ++i) {
        StoppingRule rule = en.rule_at(i);
        Scalar val = stopped_value(engine, tree, reward, rule, from);
        ++res.searched;
        if (res.optimal.empty()) {
            res.value = std::move(val);
            res.optimal.push_back(std::move(rule));
        } else if (cmp.eq(val, res.value)) {
            res.optimal.push_back(std::move(rule));
        } else if (val > res.value) {
            res.value = std::move(val);
            res.optimal.clear();
            res.optimal.push_back(std::move(rule));
        }
    }
    return res;
}

// Exhaustive search over d-tuples of rules, scored by a caller-supplied
// functional. Keeps every argmax tuple.
template <class Scalar>
struct BruteTupleResult {
    Scalar value{};
    std::vector<std::vector<StoppingRule>> optimal;
    std::uint64_t searched = 0;
};

template <class Scalar, class Eval>
BruteTupleResult<Scalar> brute_best_tuple(const FiltrationTree& tree, int d, Eval&& eval,
                                          std::uint64_t budget = 100000, int top = -1) {
    require(d >= 1, ErrorCode::SpecError, "need at least one stop");
    RuleEnumeration en(tree, top);
    const std::uint64_t total = detail::sat_pow(en.count(), d);
    require(!en.saturated() && total < detail::kSaturatedCount && total <= budget,
            ErrorCode::BudgetExceeded,
            "the tuple family needs " +
                (total >= detail::kSaturatedCount ? std::string("more than 2^62")
                                                  : std::to_string(total)) +
                " evaluations, budget is " + std::to_string(budget));

    std::vector<StoppingRule> cache;
    cache.reserve(static_cast<std::size_t>(en.count()));
    for (std::uint64_t i = 0; i < en.count(); ++i) cache.push_back(en.rule_at(i));

    Comparator<Scalar> cmp;
    BruteTupleResult<Scalar> res;
    std::vector<std::uint64_t> odo(static_cast<std::size_t>(d), 0);
    std::vector<StoppingRule> tuple(static_cast<std::size_t>(d));
    for (std::uint64_t step = 0; step < total; ++step) {
        for (int j = 0; j < d; ++j) tuple[static_cast<std::size_t>(j)] = cache[odo[j]];
        Scalar val = eval(static_cast<const std::vector<StoppingRule>&>(tuple));
        ++res.searched;
        if (res.optimal.empty()) {
            res.value = std::move(val);
            res.optimal.push_back(tuple);
        } else if (cmp.eq(val, res.value)) {
            res.optimal.push_back(tuple);
        } else if (val > res.value) {
            res.value = std::move(val);
            res.optimal.clear();
            res.optimal.push_back(tuple);
        }
        for (int j = 0; j < d; ++j) {
            if (++odo[j] < en.count()) break;
            odo[j] = 0;
        }
    }
    return res;
}

} // namespace snell
