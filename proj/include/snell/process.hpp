#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "numeric.hpp"
#include "tree.hpp"

namespace snell {

// Node-indexed values: the adapted processes of the model (rewards, value
// functions, conditional expectations). Storage is a dense Eigen vector plus
// a defined-mask, because several operations (conditional expectations of a
// time-u variable, subtree solves) legitimately produce partial processes.
// Reading an unset node is an error, never a silent zero.
template <class Scalar>
class NodeProcess {
  public:
    NodeProcess() = default;

    explicit NodeProcess(int num_nodes)
        : values_(Vector<Scalar>::Zero(num_nodes)), defined_(num_nodes, 0) {}

    static NodeProcess constant(const FiltrationTree& tree, const Scalar& c) {
        NodeProcess p(tree.num_nodes());
        p.values_.setConstant(c);
        p.defined_.assign(tree.num_nodes(), 1);
        return p;
    }

    static NodeProcess zero(const FiltrationTree& tree) { return constant(tree, Scalar(0)); }

    static NodeProcess from_values(Vector<Scalar> values) {
        NodeProcess p;
        p.defined_.assign(static_cast<std::size_t>(values.size()), 1);
        p.values_ = std::move(values);
        return p;
    }

    int size() const { return static_cast<int>(values_.size()); }
    bool has(int node) const { return defined_[node] != 0; }

    const Scalar& at(int node) const {
        require(node >= 0 && node < size() && has(node), ErrorCode::MissingValues,
                "no value at node " + std::to_string(node));
        return values_[node];
    }

    void set(int node, Scalar v) {
        values_[node] = std::move(v);
        defined_[node] = 1;
    }

    bool total() const {
        for (char d : defined_)
            if (!d) return false;
        return true;
    }

    bool total_under(const FiltrationTree& tree, int top) const {
        for (int n : tree.subtree_nodes(top))
            if (!has(n)) return false;
        return true;
    }

    bool nonnegative() const {
        for (int n = 0; n < size(); ++n)
            if (has(n) && values_[n] < Scalar(0)) return false;
        return true;
    }

    // Underlying storage, for expression-style use on total processes.
    const Vector<Scalar>& raw() const { return values_; }
    Vector<Scalar>& raw() { return values_; }

    friend bool operator==(const NodeProcess& a, const NodeProcess& b) {
        return a.defined_ == b.defined_ && a.values_ == b.values_;
    }
    friend bool operator!=(const NodeProcess& a, const NodeProcess& b) { return !(a == b); }

  private:
    Vector<Scalar> values_;
    std::vector<char> defined_;
};

// Reward processes must be everywhere-defined and nonnegative.
template <class Scalar>
void require_reward(const FiltrationTree& tree, const NodeProcess<Scalar>& reward) {
    require(reward.size() == tree.num_nodes(), ErrorCode::TreeMismatch,
            "reward sized for a different tree");
    for (int n = 0; n < tree.num_nodes(); ++n) {
        require(reward.has(n), ErrorCode::MissingValues,
                "reward undefined at node " + std::to_string(n));
        require(!(reward.at(n) < Scalar(0)), ErrorCode::NegativeReward,
                "reward negative at node " + std::to_string(n));
    }
}

// A binomial price lattice, expanded into a non-recombining path tree so that
// path-dependent payoffs stay expressible.
template <class Scalar>
struct LatticeSpec {
    int num_steps = 0;
    Scalar s0{};
    Scalar up{};
    Scalar down{};
};

// Complete binary tree of the given horizon with the price s0 * up^k * down^(t-k)
// at each path node (k = up-moves on the path; child 0 is the up move).
template <class Scalar>
std::pair<FiltrationTree, NodeProcess<Scalar>> build_binomial(const LatticeSpec<Scalar>& spec,
                                                              std::int64_t node_budget = 1000000) {
    require(spec.num_steps >= 1, ErrorCode::SpecError, "lattice horizon must be at least 1");
    require(spec.s0 > Scalar(0), ErrorCode::SpecError, "initial price must be positive");
    require(spec.up > Scalar(1), ErrorCode::SpecError, "up factor must exceed 1");
    require(spec.down > Scalar(0) && spec.down < Scalar(1), ErrorCode::SpecError,
            "down factor must lie strictly between 0 and 1");
    require(spec.num_steps < 62 &&
                (std::int64_t{1} << (spec.num_steps + 1)) - 1 <= node_budget,
            ErrorCode::HorizonTooLarge,
            "expanded lattice with 2^" + std::to_string(spec.num_steps) +
                " paths exceeds the node budget");
    FiltrationTree tree = make_uniform_tree(spec.num_steps, 2);
    NodeProcess<Scalar> prices(tree.num_nodes());
    prices.set(tree.root(), spec.s0);
    for (int n = 0; n < tree.num_nodes(); ++n) {
        if (tree.is_leaf(n)) continue;
        const auto& kids = tree.children(n);
        prices.set(kids[0], prices.at(n) * spec.up);
        prices.set(kids[1], prices.at(n) * spec.down);
    }
    return {std::move(tree), std::move(prices)};
}

} // namespace snell
