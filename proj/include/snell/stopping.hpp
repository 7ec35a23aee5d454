#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"
#include "tree.hpp"

namespace snell {

// A stopping time as a node flagging: "stop the first time the path enters a
// flagged node". The canonical form flags an antichain covering every path,
// which makes equality, enumeration, and ancestor queries trivial.
class StoppingRule {
  public:
    StoppingRule() = default;
    explicit StoppingRule(int num_nodes) : flags_(num_nodes, 0) {}

    static StoppingRule stop_at(const FiltrationTree& tree, int node) {
        StoppingRule r(tree.num_nodes());
        r.flags_[node] = 1;
        return r;
    }

    static StoppingRule at_root(const FiltrationTree& tree) { return stop_at(tree, tree.root()); }

    static StoppingRule at_leaves(const FiltrationTree& tree) {
        StoppingRule r(tree.num_nodes());
        for (int leaf : tree.leaves()) r.flags_[leaf] = 1;
        return r;
    }

    int size() const { return static_cast<int>(flags_.size()); }
    bool flagged(int node) const { return flags_[node] != 0; }
    void set_flag(int node, bool value = true) { flags_[node] = value ? 1 : 0; }

    std::vector<int> flagged_nodes() const {
        std::vector<int> out;
        for (int n = 0; n < size(); ++n)
            if (flags_[n]) out.push_back(n);
        return out;
    }

    friend bool operator==(const StoppingRule& a, const StoppingRule& b) {
        return a.flags_ == b.flags_;
    }
    friend bool operator!=(const StoppingRule& a, const StoppingRule& b) { return !(a == b); }

  private:
    std::vector<char> flags_;
};

inline void require_same_tree(const FiltrationTree& tree, const StoppingRule& rule) {
    require(rule.size() == tree.num_nodes(), ErrorCode::TreeMismatch,
            "rule sized for a different tree");
}

namespace detail {
// Post-order walk returning whether every path of the subtree is covered;
// flips `clean` off when a flagged node has a flagged strict ancestor.
inline bool canonical_walk(const FiltrationTree& tree, const StoppingRule& rule, int node,
                           bool above_flagged, bool& clean) {
    bool here = rule.flagged(node);
    if (here && above_flagged) clean = false;
    if (tree.is_leaf(node)) return here;
    bool covered = true;
    for (int c : tree.children(node))
        covered = canonical_walk(tree, rule, c, above_flagged || here, clean) && covered;
    return here || covered;
}
} // namespace detail

// True iff, within the subtree of `top`, every path hits exactly one flag.
inline bool is_canonical(const FiltrationTree& tree, const StoppingRule& rule, int top = -1) {
    require_same_tree(tree, rule);
    if (top < 0) top = tree.root();
    bool clean = true;
    bool covered = detail::canonical_walk(tree, rule, top, false, clean);
    return clean && covered;
}

// Canonical form: drop flags shadowed by a flagged ancestor, default to the
// leaf on paths that never stop, and clear anything outside the subtree.
inline StoppingRule canonicalize(const FiltrationTree& tree, const StoppingRule& rule,
                                 int top = -1) {
    require_same_tree(tree, rule);
    if (top < 0) top = tree.root();
    StoppingRule out(tree.num_nodes());
    std::vector<std::pair<int, bool>> stack{{top, false}}; // node, seen-flag-above
    while (!stack.empty()) {
        auto [node, above] = stack.back();
        stack.pop_back();
        bool here = !above && rule.flagged(node);
        if (here || (!above && tree.is_leaf(node))) out.set_flag(node);
        for (int c : tree.children(node)) stack.push_back({c, above || here});
    }
    return out;
}

// The unique flagged node on the path `top`..`leaf`. Detects a missing or
// duplicated flag on that path, which is what non-canonical means locally.
inline int stop_node(const FiltrationTree& tree, const StoppingRule& rule, int leaf,
                     int top = -1) {
    require_same_tree(tree, rule);
    if (top < 0) top = tree.root();
    int found = -1;
    for (int n = leaf;; n = tree.parent(n)) {
        if (rule.flagged(n)) {
            require(found == -1, ErrorCode::NonCanonicalRule,
                    "two flags on the path through leaf " + std::to_string(leaf));
            found = n;
        }
        if (n == top) break;
        require(n != tree.root(), ErrorCode::NodeNotInSubtree,
                "leaf " + std::to_string(leaf) + " not under node " + std::to_string(top));
    }
    require(found != -1, ErrorCode::NonCanonicalRule,
            "no flag on the path through leaf " + std::to_string(leaf));
    return found;
}

inline int stop_time(const FiltrationTree& tree, const StoppingRule& rule, int leaf,
                     int top = -1) {
    return tree.time(stop_node(tree, rule, leaf, top));
}

// Pathwise minimum of two stopping times. On any one path both stop nodes are
// ancestors of the same leaf, so the earlier time picks a unique node; the
// flagged set this produces is automatically an antichain covering every path.
inline StoppingRule meet(const FiltrationTree& tree, const StoppingRule& a, const StoppingRule& b,
                         int top = -1) {
    require_same_tree(tree, a);
    require_same_tree(tree, b);
    require(a.size() == b.size(), ErrorCode::TreeMismatch, "rules sized for different trees");
    if (top < 0) top = tree.root();
    StoppingRule out(tree.num_nodes());
    for (int leaf : tree.leaves_under(top)) {
        int na = stop_node(tree, a, leaf, top);
        int nb = stop_node(tree, b, leaf, top);
        out.set_flag(tree.time(na) <= tree.time(nb) ? na : nb);
    }
    return out;
}

// a stops no later than b on every path of the subtree
inline bool rule_leq(const FiltrationTree& tree, const StoppingRule& a, const StoppingRule& b,
                     int top = -1) {
    if (top < 0) top = tree.root();
    for (int leaf : tree.leaves_under(top))
        if (stop_time(tree, a, leaf, top) > stop_time(tree, b, leaf, top)) return false;
    return true;
}

// Uniform-ish random canonical rule on the subtree of `top`: descend from the
// top, stopping at each non-leaf with probability stop_num/stop_den and at
// every leaf. Uses rng_below, so the draw is identical on every platform.
template <class RNG>
StoppingRule random_rule(const FiltrationTree& tree, RNG& rng, int top = -1, std::uint64_t stop_num = 1,
                         std::uint64_t stop_den = 4) {
    require(stop_den > 0 && stop_num <= stop_den, ErrorCode::SpecError,
            "stop probability must lie in [0, 1]");
    if (top < 0) top = tree.root();
    StoppingRule out(tree.num_nodes());
    std::vector<int> stack{top};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (tree.is_leaf(n) || rng_below(rng, stop_den) < stop_num) {
            out.set_flag(n);
            continue;
        }
        for (int c : tree.children(n)) stack.push_back(c);
    }
    return out;
}

} // namespace snell
