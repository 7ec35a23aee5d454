#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "engine.hpp"
#include "numeric.hpp"
#include "oracle.hpp"
#include "process.hpp"
#include "single.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace snell {

// ---------------------------------------------------------------------------
// Tuple order
// ---------------------------------------------------------------------------

enum class TupleOrder { precedes, succeeds, equal, incomparable };

inline const char* tuple_order_name(TupleOrder o) {
    switch (o) {
        case TupleOrder::precedes: return "precedes";
        case TupleOrder::succeeds: return "succeeds";
        case TupleOrder::equal: return "equal";
        case TupleOrder::incomparable: return "incomparable";
    }
    return "?";
}

// Reflexive "a comes weakly before b" for time tuples: a's minimum is
// strictly smaller, or the minima tie, every slot where a attains its minimum
// also attains b's, and the tuples with that slot deleted recurse. For d = 1
// this is plain <=.
inline bool weakly_precedes(const std::vector<int>& a, const std::vector<int>& b) {
    require(a.size() == b.size(), ErrorCode::LengthMismatch,
            "comparing tuples of lengths " + std::to_string(a.size()) + " and " +
                std::to_string(b.size()));
    if (a.empty()) return true;
    const int ma = *std::min_element(a.begin(), a.end());
    const int mb = *std::min_element(b.begin(), b.end());
    if (ma < mb) return true;
    if (ma > mb) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != ma) continue;
        if (b[i] != mb) return false;
        std::vector<int> ra(a), rb(b);
        ra.erase(ra.begin() + static_cast<std::ptrdiff_t>(i));
        rb.erase(rb.begin() + static_cast<std::ptrdiff_t>(i));
        if (!weakly_precedes(ra, rb)) return false;
    }
    return true;
}

inline TupleOrder prec_d(const std::vector<int>& a, const std::vector<int>& b) {
    require(a.size() == b.size(), ErrorCode::LengthMismatch,
            "comparing tuples of lengths " + std::to_string(a.size()) + " and " +
                std::to_string(b.size()));
    require(!a.empty(), ErrorCode::LengthMismatch, "empty tuples have no order");
    if (a == b) return TupleOrder::equal;
    if (weakly_precedes(a, b)) return TupleOrder::precedes;
    if (weakly_precedes(b, a)) return TupleOrder::succeeds;
    return TupleOrder::incomparable;
}

// ---------------------------------------------------------------------------
// Rewards over node tuples
// ---------------------------------------------------------------------------

// A nonnegative reward paid for a tuple of d stop nodes that lie on one
// root-to-leaf path. Kinds:
//   additive           sum of a base process over the d nodes
//   refraction_swing   the same sum, but 0 unless all pairwise time gaps
//                      reach delta (the re-arming constraint lives in the
//                      reward, not in the set of admissible stop vectors)
//   table              an explicit value per ordered comparable tuple
// Freezing pins one slot at a node and restricts the remaining slots to that
// node's subtree; the pinned slots keep their original positions, so an
// asymmetric table is read correctly at any nesting depth.
template <class Scalar>
class DReward {
  public:
    enum class Kind { additive, refraction_swing, table };

    static DReward additive(const FiltrationTree& tree, NodeProcess<Scalar> base, int d) {
        DReward r(tree, Kind::additive, d);
        require_reward(tree, base);
        r.base_ = std::move(base);
        return r;
    }

    static DReward refraction_swing(const FiltrationTree& tree, NodeProcess<Scalar> base, int d,
                                    int delta) {
        DReward r(tree, Kind::refraction_swing, d);
        require_reward(tree, base);
        require(delta >= 0, ErrorCode::SpecError, "refraction gap must be nonnegative");
        r.base_ = std::move(base);
        r.delta_ = delta;
        return r;
    }

    static DReward table(const FiltrationTree& tree, int d,
                         std::map<std::vector<int>, Scalar> entries) {
        DReward r(tree, Kind::table, d);
        for (const auto& [key, val] : entries) {
            require(static_cast<int>(key.size()) == d, ErrorCode::LengthMismatch,
                    "table key with " + std::to_string(key.size()) + " nodes for arity " +
                        std::to_string(d));
            for (int n : key)
                require(n >= 0 && n < tree.num_nodes(), ErrorCode::NodeNotInSubtree,
                        "table key mentions unknown node " + std::to_string(n));
            require_comparable(tree, key);
            require(val >= Scalar(0), ErrorCode::NegativeReward,
                    "negative table entry");
        }
        r.table_ = std::move(entries);
        return r;
    }

    Kind kind() const { return kind_; }

    const char* kind_name() const {
        switch (kind_) {
            case Kind::additive: return "additive";
            case Kind::refraction_swing: return "refraction_swing";
            case Kind::table: return "table";
        }
        return "?";
    }

    // remaining free slots
    int arity() const { return total_arity_ - static_cast<int>(pins_.size()); }
    int total_arity() const { return total_arity_; }
    // the node whose subtree the free slots may range over
    int domain_root() const { return root_; }
    bool symmetric() const { return kind_ != Kind::table; }
    bool frozen() const { return !pins_.empty(); }
    const std::vector<std::pair<int, int>>& pins() const { return pins_; } // (slot, node)
    const NodeProcess<Scalar>& base() const { return base_; }
    int delta() const { return delta_; }
    const FiltrationTree& tree() const { return *tree_; }

    // Pin free slot i (0-based among the remaining slots) at node `at`; the
    // remaining slots of the result range over the subtree of `at`.
    DReward freeze(int i, int at) const {
        require(arity() >= 2, ErrorCode::SpecError,
                "freezing needs at least two free slots");
        require(i >= 0 && i < arity(), ErrorCode::CoordinateOutOfRange,
                "slot " + std::to_string(i) + " out of range for arity " +
                    std::to_string(arity()));
        require(at >= 0 && at < tree_->num_nodes() && tree_->in_subtree(at, root_),
                ErrorCode::NodeNotInSubtree,
                "freeze node " + std::to_string(at) + " outside the reward's domain");
        DReward out(*this);
        const int slot = out.free_slots()[static_cast<std::size_t>(i)];
        auto pos = std::lower_bound(out.pins_.begin(), out.pins_.end(),
                                    std::make_pair(slot, at));
        out.pins_.insert(pos, {slot, at});
        out.root_ = at;
        return out;
    }

    // Reward for the free-slot nodes (in free-slot order).
    Scalar value(const std::vector<int>& nodes) const {
        require(static_cast<int>(nodes.size()) == arity(), ErrorCode::LengthMismatch,
                std::to_string(nodes.size()) + " nodes supplied for arity " +
                    std::to_string(arity()));
        for (int n : nodes)
            require(n >= 0 && n < tree_->num_nodes() && tree_->in_subtree(n, root_),
                    ErrorCode::NodeNotInSubtree,
                    "stop node " + std::to_string(n) + " outside the reward's domain");
        std::vector<int> full(static_cast<std::size_t>(total_arity_), -1);
        for (const auto& [slot, node] : pins_) full[static_cast<std::size_t>(slot)] = node;
        std::size_t next = 0;
        for (auto& slot : full)
            if (slot == -1) slot = nodes[next++];
        require_comparable(*tree_, full);
        switch (kind_) {
            case Kind::additive:
            case Kind::refraction_swing: {
                if (kind_ == Kind::refraction_swing) {
                    for (std::size_t i = 0; i < full.size(); ++i)
                        for (std::size_t j = i + 1; j < full.size(); ++j) {
                            int gap = tree_->time(full[i]) - tree_->time(full[j]);
                            if (gap < 0) gap = -gap;
                            if (gap < delta_) return Scalar(0);
                        }
                }
                Scalar sum(0);
                for (int n : full) sum += base_.at(n);
                return sum;
            }
            case Kind::table: {
                auto it = table_.find(full);
                require(it != table_.end(), ErrorCode::SpecError,
                        "table reward has no entry for the supplied tuple");
                return it->second;
            }
        }
        fail(ErrorCode::SpecError, "unreachable reward kind");
    }

  private:
    DReward(const FiltrationTree& tree, Kind kind, int d)
        : tree_(&tree), kind_(kind), total_arity_(d), root_(tree.root()) {
        require(d >= 1, ErrorCode::SpecError, "reward arity must be at least 1");
    }

    static void require_comparable(const FiltrationTree& tree, const std::vector<int>& nodes) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (std::size_t j = i + 1; j < nodes.size(); ++j)
                require(tree.in_subtree(nodes[i], nodes[j]) ||
                            tree.in_subtree(nodes[j], nodes[i]),
                        ErrorCode::IncomparableNodes,
                        "nodes " + std::to_string(nodes[i]) + " and " +
                            std::to_string(nodes[j]) + " lie on different paths");
    }

    std::vector<int> free_slots() const {
        std::vector<int> out;
        std::size_t p = 0;
        for (int s = 0; s < total_arity_; ++s) {
            if (p < pins_.size() && pins_[p].first == s) {
                ++p;
                continue;
            }
            out.push_back(s);
        }
        return out;
    }

    const FiltrationTree* tree_;
    Kind kind_;
    int total_arity_;
    int delta_ = 0;
    int root_;
    NodeProcess<Scalar> base_;
    std::map<std::vector<int>, Scalar> table_;
    std::vector<std::pair<int, int>> pins_; // sorted by slot
};

template <class Scalar>
DReward<Scalar> freeze(const DReward<Scalar>& reward, int i, int at) {
    return reward.freeze(i, at);
}

// ---------------------------------------------------------------------------
// Stop vectors
// ---------------------------------------------------------------------------

struct StoppingVector {
    std::vector<StoppingRule> rules;

    int d() const { return static_cast<int>(rules.size()); }
};

// E_from of the reward paid by a fixed vector of rules: on each path read the
// d stop nodes (all on that path, hence comparable), price the tuple, and
// condition back down to `from`.
template <class Scalar>
Scalar evaluate_vector(const Engine<Scalar>& engine, const FiltrationTree& tree,
                       const DReward<Scalar>& reward, const StoppingVector& vec, int from = -1) {
    require(vec.d() == reward.arity(), ErrorCode::LengthMismatch,
            std::to_string(vec.d()) + " rules supplied for arity " +
                std::to_string(reward.arity()));
    if (from < 0) from = reward.domain_root();
    for (const StoppingRule& r : vec.rules) require_same_tree(tree, r);
    NodeProcess<Scalar> lifted(tree.num_nodes());
    std::vector<int> stops(static_cast<std::size_t>(vec.d()));
    for (int leaf : tree.leaves_under(from)) {
        for (int j = 0; j < vec.d(); ++j)
            stops[static_cast<std::size_t>(j)] =
                stop_node_at_or_after(tree, vec.rules[static_cast<std::size_t>(j)], leaf, from);
        lifted.set(leaf, reward.value(stops));
    }
    return detail::cond_exp_rec(engine, tree, lifted, from, tree.num_steps());
}

// ---------------------------------------------------------------------------
// The d-fold solver
// ---------------------------------------------------------------------------

// Solution of the d-fold problem on the subtree of `from`.
//   value               v_d, the optimal d-stop value per node
//   reduced             the one-shot reward: stop everything-now value, i.e.
//                       max over slots of spending one stop here and playing
//                       the remaining d-1 optimally below (0 outside the
//                       solved subtree)
//   coordinate_values   slot i's "spend slot i here" value per node
//   theta               minimal optimal rule of the reduced single problem;
//                       pathwise minimum of the assembled vector
//   witness             at each theta-stop node, the smallest slot whose
//                       coordinate value attains the reduced reward there
template <class Scalar>
struct MultiSolution {
    int from = -1;
    int d = 0;
    NodeProcess<Scalar> value;
    NodeProcess<Scalar> reduced;
    std::vector<NodeProcess<Scalar>> coordinate_values;
    StoppingVector optimal;
    StoppingRule theta;
    std::map<int, int> witness;
    Comparator<Scalar> cmp;
};

namespace detail {

template <class Scalar>
struct MultiCtx {
    const Engine<Scalar>* engine;
    const FiltrationTree* tree;
    std::map<std::vector<int>, MultiSolution<Scalar>> memo;
};

template <class Scalar>
std::vector<int> multi_key(const DReward<Scalar>& reward, int at) {
    std::vector<int> key{at};
    if (reward.symmetric()) {
        std::vector<int> ids;
        for (const auto& [slot, node] : reward.pins()) ids.push_back(node);
        std::sort(ids.begin(), ids.end());
        key.insert(key.end(), ids.begin(), ids.end());
    } else {
        for (const auto& [slot, node] : reward.pins()) {
            key.push_back(slot);
            key.push_back(node);
        }
    }
    return key;
}

template <class Scalar>
const MultiSolution<Scalar>& solve_rec(MultiCtx<Scalar>& ctx, const DReward<Scalar>& reward,
                                       int at) {
    const std::vector<int> key = multi_key(reward, at);
    if (auto it = ctx.memo.find(key); it != ctx.memo.end()) return it->second;

    const FiltrationTree& tree = *ctx.tree;
    const Engine<Scalar>& engine = *ctx.engine;
    const int d = reward.arity();
    const std::vector<int> sub_nodes = tree.subtree_nodes(at);

    MultiSolution<Scalar> out;
    out.from = at;
    out.d = d;
    out.coordinate_values.assign(static_cast<std::size_t>(d),
                                 NodeProcess<Scalar>(tree.num_nodes()));
    NodeProcess<Scalar> xhat = NodeProcess<Scalar>::zero(tree);

    if (d == 1) {
        for (int m : sub_nodes) {
            Scalar val = reward.value({m});
            out.coordinate_values[0].set(m, val);
            xhat.set(m, std::move(val));
        }
    } else {
        const int distinct = reward.symmetric() ? 1 : d;
        for (int m : sub_nodes) {
            Scalar best(0);
            for (int i = 0; i < distinct; ++i) {
                const MultiSolution<Scalar>& sub = solve_rec(ctx, reward.freeze(i, m), m);
                const Scalar& u = sub.value.at(m);
                out.coordinate_values[static_cast<std::size_t>(i)].set(m, u);
                if (i == 0 || u > best) best = u;
            }
            for (int i = distinct; i < d; ++i)
                out.coordinate_values[static_cast<std::size_t>(i)].set(
                    m, out.coordinate_values[0].at(m));
            xhat.set(m, std::move(best));
        }
    }

    SnellSolution<Scalar> ssol = snell(engine, tree, xhat, at);
    out.theta = minimal_optimal(ssol);
    out.reduced = std::move(xhat);
    out.value = std::move(ssol.value);

    std::vector<StoppingRule> rules(static_cast<std::size_t>(d),
                                    StoppingRule(tree.num_nodes()));
    for (int n : out.theta.flagged_nodes()) {
        int wit = 0;
        if (d > 1) {
            while (wit < d && !out.cmp.eq(out.coordinate_values[static_cast<std::size_t>(wit)].at(n),
                                          out.reduced.at(n)))
                ++wit;
            require(wit < d, ErrorCode::SpecError,
                    "no slot attains the reduced reward at node " + std::to_string(n));
        }
        out.witness[n] = wit;
        rules[static_cast<std::size_t>(wit)].set_flag(n);
        if (d > 1) {
            const MultiSolution<Scalar>& sub = solve_rec(ctx, reward.freeze(wit, n), n);
            for (int j = 0; j < d; ++j) {
                if (j == wit) continue;
                const int k = j < wit ? j : j - 1;
                for (int q : sub.optimal.rules[static_cast<std::size_t>(k)].flagged_nodes())
                    rules[static_cast<std::size_t>(j)].set_flag(q);
            }
        }
    }
    out.optimal.rules = std::move(rules);

    return ctx.memo.emplace(key, std::move(out)).first->second;
}

} // namespace detail

// Solve the d-fold stopping problem from `at` (default: the reward's domain
// root). Refuses upfront when nodes^d would exceed `budget` evaluator calls;
// memoized freezing usually needs far fewer, but the bound is the honest
// worst case for a fully general reward.
template <class Scalar>
MultiSolution<Scalar> solve_d(const Engine<Scalar>& engine, const FiltrationTree& tree,
                              const DReward<Scalar>& reward, int at = -1,
                              std::uint64_t budget = 2000000) {
    if (at < 0) at = reward.domain_root();
    require(at >= 0 && at < tree.num_nodes() && tree.in_subtree(at, reward.domain_root()),
            ErrorCode::NodeNotInSubtree,
            "start node " + std::to_string(at) + " outside the reward's domain");
    const std::uint64_t nodes = static_cast<std::uint64_t>(tree.subtree_nodes(at).size());
    const std::uint64_t cost = detail::sat_pow(nodes, reward.arity());
    require(cost <= budget, ErrorCode::BudgetExceeded,
            "worst-case cost " +
                (cost >= detail::kSaturatedCount ? std::string("over 2^62")
                                                 : std::to_string(cost)) +
                " evaluator calls exceeds the budget " + std::to_string(budget));
    detail::MultiCtx<Scalar> ctx{&engine, &tree, {}};
    return detail::solve_rec(ctx, reward, at);
}

// Exhaustive search over all d-tuples of canonical rules on the subtree.
template <class Scalar>
BruteTupleResult<Scalar> brute_value_d(const Engine<Scalar>& engine, const FiltrationTree& tree,
                                       const DReward<Scalar>& reward, int from = -1,
                                       std::uint64_t budget = 100000) {
    if (from < 0) from = reward.domain_root();
    auto eval = [&](const std::vector<StoppingRule>& rules) {
        StoppingVector vec{rules};
        return evaluate_vector(engine, tree, reward, vec, from);
    };
    return brute_best_tuple<Scalar>(tree, reward.arity(), eval, budget, from);
}

// Pathwise stop times of a vector at one leaf.
inline std::vector<int> stop_times_at_leaf(const FiltrationTree& tree, const StoppingVector& vec,
                                           int leaf, int from) {
    std::vector<int> out(static_cast<std::size_t>(vec.d()));
    for (int j = 0; j < vec.d(); ++j)
        out[static_cast<std::size_t>(j)] = tree.time(
            stop_node_at_or_after(tree, vec.rules[static_cast<std::size_t>(j)], leaf, from));
    return out;
}

// True when no other optimal vector (by exhaustive search) weakly precedes
// the solution's vector on every path and strictly on at least one. Every
// leaf carries positive mass (kernels are floored away from 0), so "some
// leaf" is exactly "a positive-probability set".
template <class Scalar>
bool is_d_minimal(const Engine<Scalar>& engine, const FiltrationTree& tree,
                  const DReward<Scalar>& reward, const MultiSolution<Scalar>& sol, int from = -1,
                  std::uint64_t budget = 100000) {
    if (from < 0) from = sol.from;
    const BruteTupleResult<Scalar> brute = brute_value_d(engine, tree, reward, from, budget);
    const std::vector<int> leaves = tree.leaves_under(from);
    std::vector<std::vector<int>> mine;
    mine.reserve(leaves.size());
    for (int leaf : leaves) mine.push_back(stop_times_at_leaf(tree, sol.optimal, leaf, from));
    for (const auto& tuple : brute.optimal) {
        StoppingVector cand{tuple};
        bool weakly_before = true;
        bool strictly = false;
        for (std::size_t li = 0; li < leaves.size(); ++li) {
            std::vector<int> theirs = stop_times_at_leaf(tree, cand, leaves[li], from);
            if (!weakly_precedes(theirs, mine[li])) {
                weakly_before = false;
                break;
            }
            if (theirs != mine[li]) strictly = true;
        }
        if (weakly_before && strictly) return false;
    }
    return true;
}

} // namespace snell
