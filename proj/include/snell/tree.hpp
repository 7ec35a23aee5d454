#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace snell {

// One node of an explicit tree description, as it appears in spec files.
struct NodeSpec {
    int id = 0;
    int t = 0;
    int parent = -1; // -1 marks the root
    std::vector<int> children;
};

// Finite filtration tree over time steps 0..num_steps. Each node is an atom
// of the time-t information set; every path from the root ends in a leaf at
// the final step. Immutable after build(); all queries are O(1) or O(depth).
class FiltrationTree {
  public:
    FiltrationTree() = default;

    // Validates the full invariant set: dense ids, a single root at t = 0,
    // parent/child links that agree, edge times increasing by exactly one,
    // and no leaf before the final step.
    static FiltrationTree build(int num_steps, const std::vector<NodeSpec>& specs) {
        FiltrationTree tree;
        const int n = static_cast<int>(specs.size());
        require(num_steps >= 0, ErrorCode::MalformedTree, "num_steps must be nonnegative");
        require(n > 0, ErrorCode::MalformedTree, "empty node list");
        tree.num_steps_ = num_steps;
        tree.time_.assign(n, -1);
        tree.parent_.assign(n, -1);
        tree.children_.assign(n, {});
        tree.root_ = -1;
        for (const NodeSpec& s : specs) {
            require(s.id >= 0 && s.id < n, ErrorCode::MalformedTree,
                    "node id " + std::to_string(s.id) + " outside dense range 0.." +
                        std::to_string(n - 1));
            require(tree.time_[s.id] == -1, ErrorCode::MalformedTree,
                    "duplicate node id " + std::to_string(s.id));
            require(s.t >= 0 && s.t <= num_steps, ErrorCode::MalformedTree,
                    "node " + std::to_string(s.id) + " has time " + std::to_string(s.t) +
                        " outside 0.." + std::to_string(num_steps));
            tree.time_[s.id] = s.t;
            tree.parent_[s.id] = s.parent;
            tree.children_[s.id] = s.children;
            if (s.parent == -1) {
                require(tree.root_ == -1, ErrorCode::MalformedTree, "multiple roots");
                require(s.t == 0, ErrorCode::MalformedTree,
                        "root node " + std::to_string(s.id) + " not at time 0");
                tree.root_ = s.id;
            }
        }
        require(tree.root_ != -1, ErrorCode::MalformedTree, "no root node");
        std::vector<int> child_count(n, 0);
        for (int id = 0; id < n; ++id) {
            int p = tree.parent_[id];
            if (p == -1) continue;
            require(p >= 0 && p < n, ErrorCode::MalformedTree,
                    "node " + std::to_string(id) + " has orphan parent id " + std::to_string(p));
            require(tree.time_[id] == tree.time_[p] + 1, ErrorCode::MalformedTree,
                    "node " + std::to_string(id) + " at time " + std::to_string(tree.time_[id]) +
                        " is a child of a node at time " + std::to_string(tree.time_[p]));
            ++child_count[p];
        }
        for (int id = 0; id < n; ++id) {
            const auto& kids = tree.children_[id];
            require(static_cast<int>(kids.size()) == child_count[id], ErrorCode::MalformedTree,
                    "child list of node " + std::to_string(id) +
                        " disagrees with the parent links");
            for (int c : kids) {
                require(c >= 0 && c < n && tree.parent_[c] == id, ErrorCode::MalformedTree,
                        "node " + std::to_string(id) + " lists child " + std::to_string(c) +
                            " that does not point back");
            }
            // a repeated entry would make size() exceed the parent-link count,
            // caught above, except when it shadows a missing sibling; rule it out
            for (std::size_t a = 0; a < kids.size(); ++a)
                for (std::size_t b = a + 1; b < kids.size(); ++b)
                    require(kids[a] != kids[b], ErrorCode::MalformedTree,
                            "duplicate child entry on node " + std::to_string(id));
            if (tree.time_[id] < num_steps) {
                require(!kids.empty(), ErrorCode::MalformedTree,
                        "node " + std::to_string(id) + " is a leaf before the final step");
            } else {
                require(kids.empty(), ErrorCode::MalformedTree,
                        "node " + std::to_string(id) + " at the final step has children");
            }
        }
        tree.by_time_.assign(num_steps + 1, {});
        for (int id = 0; id < n; ++id) tree.by_time_[tree.time_[id]].push_back(id);
        return tree;
    }

    int num_steps() const { return num_steps_; }
    int num_nodes() const { return static_cast<int>(time_.size()); }
    int root() const { return root_; }
    int time(int node) const { return time_[node]; }
    int parent(int node) const { return parent_[node]; }
    const std::vector<int>& children(int node) const { return children_[node]; }
    bool is_leaf(int node) const { return children_[node].empty(); }
    const std::vector<int>& nodes_at(int t) const { return by_time_[t]; }
    const std::vector<int>& leaves() const { return by_time_[num_steps_]; }

    // unique ancestor of `node` at time t (t <= time(node)); `node` itself at its own time
    int ancestor_at(int node, int t) const {
        require(t >= 0 && t <= time_[node], ErrorCode::TimeOrderViolation,
                "no ancestor of node " + std::to_string(node) + " at time " + std::to_string(t));
        while (time_[node] > t) node = parent_[node];
        return node;
    }

    bool in_subtree(int node, int top) const {
        while (time_[node] > time_[top]) node = parent_[node];
        return node == top;
    }

    // preorder listing of the subtree rooted at `top`
    std::vector<int> subtree_nodes(int top) const {
        std::vector<int> out, stack{top};
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            out.push_back(n);
            const auto& kids = children_[n];
            for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
        }
        return out;
    }

    std::vector<int> leaves_under(int top) const {
        std::vector<int> out;
        for (int n : subtree_nodes(top))
            if (is_leaf(n)) out.push_back(n);
        return out;
    }

    bool same_shape(const FiltrationTree& other) const {
        return num_steps_ == other.num_steps_ && root_ == other.root_ &&
               time_ == other.time_ && parent_ == other.parent_ && children_ == other.children_;
    }

  private:
    int num_steps_ = 0;
    int root_ = -1;
    std::vector<int> time_;
    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
    std::vector<std::vector<int>> by_time_;
};

// Complete tree with a constant branching factor, BFS ids (root = 0).
// The workhorse shape for generated instances.
inline FiltrationTree make_uniform_tree(int depth, int branching) {
    require(depth >= 0, ErrorCode::MalformedTree, "negative depth");
    require(branching >= 1, ErrorCode::MalformedTree, "branching must be at least 1");
    std::vector<NodeSpec> specs;
    std::vector<int> level{0};
    specs.push_back({0, 0, -1, {}});
    int next_id = 1;
    for (int t = 1; t <= depth; ++t) {
        std::vector<int> next_level;
        for (int p : level) {
            for (int b = 0; b < branching; ++b) {
                specs.push_back({next_id, t, p, {}});
                specs[p].children.push_back(next_id);
                next_level.push_back(next_id);
                ++next_id;
            }
        }
        level = std::move(next_level);
    }
    return FiltrationTree::build(depth, specs);
}

} // namespace snell
