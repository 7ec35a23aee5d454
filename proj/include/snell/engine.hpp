#pragma once

#include <string>
#include <utility>
#include <vector>

#include "numeric.hpp"
#include "process.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace snell {

template <class Scalar>
Scalar default_min_prob() {
    if constexpr (scalar_traits<Scalar>::exact) {
        return Scalar(Rational(1, 1000000));
    } else {
        return Scalar(1e-6);
    }
}

namespace detail {

// Fixed left-to-right reduction, so float-mode results do not depend on how
// a vectorized dot product would associate the sum.
template <class Scalar>
Scalar weighted_sum(const RowVector<Scalar>& row, const Vector<Scalar>& values) {
    Scalar acc(0);
    for (Eigen::Index j = 0; j < row.size(); ++j) acc += row[j] * values[j];
    return acc;
}

template <class Scalar>
void validate_row(const RowVector<Scalar>& row, int node, int child_count,
                  const Scalar& min_prob) {
    require(static_cast<int>(row.size()) == child_count, ErrorCode::MalformedKernel,
            "row at node " + std::to_string(node) + " has " + std::to_string(row.size()) +
                " entries for " + std::to_string(child_count) + " children");
    Scalar sum(0);
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        require(row[j] >= min_prob, ErrorCode::MalformedKernel,
                "probability below the positivity floor at node " + std::to_string(node));
        sum += row[j];
    }
    if constexpr (scalar_traits<Scalar>::exact) {
        require(sum == Scalar(1), ErrorCode::MalformedKernel,
                "probabilities at node " + std::to_string(node) + " sum to " + to_string(sum));
    } else {
        require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::MalformedKernel,
                "probabilities at node " + std::to_string(node) + " sum to " +
                    std::to_string(sum));
    }
}

} // namespace detail

// One probability row per non-leaf node, aligned with its child order.
// Every entry is at least min_prob > 0: all transitions carry mass, which is
// what makes the engines strictly monotone.
template <class Scalar>
class TransitionKernel {
  public:
    TransitionKernel() = default;

    static TransitionKernel build(const FiltrationTree& tree, std::vector<RowVector<Scalar>> rows,
                                  Scalar min_prob = default_min_prob<Scalar>()) {
        require(static_cast<int>(rows.size()) == tree.num_nodes(), ErrorCode::MalformedKernel,
                "kernel rows do not cover the tree");
        require(min_prob > Scalar(0), ErrorCode::MalformedKernel,
                "the positivity floor min_prob must be strictly positive");
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) {
                require(rows[n].size() == 0, ErrorCode::MalformedKernel,
                        "kernel row on leaf node " + std::to_string(n));
            } else {
                detail::validate_row(rows[n], n, static_cast<int>(tree.children(n).size()),
                                     min_prob);
            }
        }
        TransitionKernel k;
        k.rows_ = std::move(rows);
        k.min_prob_ = std::move(min_prob);
        return k;
    }

    // constant binomial kernel: every non-leaf gets (p, 1-p)
    static TransitionKernel binomial(const FiltrationTree& tree, const Scalar& p,
                                     Scalar min_prob = default_min_prob<Scalar>()) {
        std::vector<RowVector<Scalar>> rows(tree.num_nodes());
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) continue;
            RowVector<Scalar> row(2);
            row << p, Scalar(1) - p;
            rows[n] = std::move(row);
        }
        return build(tree, std::move(rows), std::move(min_prob));
    }

    int size() const { return static_cast<int>(rows_.size()); }
    const RowVector<Scalar>& row(int node) const { return rows_[node]; }
    const Scalar& min_prob() const { return min_prob_; }

  private:
    std::vector<RowVector<Scalar>> rows_;
    Scalar min_prob_{};
};

// A finite menu of kernel rows per non-leaf node. Composed by backward
// maximum, this is the rectangular ("choose the worst prior at every node")
// upper expectation.
template <class Scalar>
class PriorSet {
  public:
    PriorSet() = default;

    static PriorSet build(const FiltrationTree& tree,
                          std::vector<std::vector<RowVector<Scalar>>> rows_by_node,
                          Scalar min_prob = default_min_prob<Scalar>()) {
        require(static_cast<int>(rows_by_node.size()) == tree.num_nodes(),
                ErrorCode::MalformedKernel, "prior rows do not cover the tree");
        require(min_prob > Scalar(0), ErrorCode::MalformedKernel,
                "the positivity floor min_prob must be strictly positive");
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) {
                require(rows_by_node[n].empty(), ErrorCode::MalformedKernel,
                        "prior rows on leaf node " + std::to_string(n));
                continue;
            }
            require(!rows_by_node[n].empty(), ErrorCode::MalformedKernel,
                    "no prior rows at node " + std::to_string(n));
            for (const auto& row : rows_by_node[n])
                detail::validate_row(row, n, static_cast<int>(tree.children(n).size()), min_prob);
        }
        PriorSet p;
        p.rows_ = std::move(rows_by_node);
        p.min_prob_ = std::move(min_prob);
        return p;
    }

    int size() const { return static_cast<int>(rows_.size()); }
    const std::vector<RowVector<Scalar>>& rows(int node) const { return rows_[node]; }
    const Scalar& min_prob() const { return min_prob_; }

  private:
    std::vector<std::vector<RowVector<Scalar>>> rows_;
    Scalar min_prob_{};
};

// A conditional expectation operator, defined by its one-step action on
// child values and composed backward through the tree.
//
//   linear       classical expectation under a single kernel
//   upper_prior  max over a kernel menu per node (sublinear, worst-case)
//   g_driver     binomial ambiguity step y = p*y_u + (1-p)*y_d + kappa*|z|*dt
//                with z = (y_u - y_d)*sqrt(p(1-p)/dt); equivalently a
//                probability shift of kappa*sqrt(p(1-p)*dt) toward whichever
//                child is larger, which is how it coincides with a two-row
//                upper_prior engine (see upper_envelope)
template <class Scalar>
class Engine {
  public:
    enum class Kind { linear, upper_prior, g_driver };

    static Engine linear(TransitionKernel<Scalar> kernel) {
        Engine e;
        e.kind_ = Kind::linear;
        e.kernel_ = std::move(kernel);
        return e;
    }

    static Engine upper_prior(PriorSet<Scalar> priors) {
        Engine e;
        e.kind_ = Kind::upper_prior;
        e.priors_ = std::move(priors);
        return e;
    }

    static Engine g_driver(const FiltrationTree& tree, TransitionKernel<Scalar> base,
                           Scalar kappa, Scalar dt) {
        require(kappa >= Scalar(0), ErrorCode::SpecError, "kappa must be nonnegative");
        require(dt > Scalar(0), ErrorCode::SpecError, "dt must be positive");
        Engine e;
        e.kind_ = Kind::g_driver;
        e.kappa_ = kappa;
        e.dt_ = dt;
        e.shifts_.assign(tree.num_nodes(), Scalar(0));
        const Scalar floor = base.min_prob();
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) continue;
            require(tree.children(n).size() == 2, ErrorCode::NonBinomialNode,
                    "node " + std::to_string(n) + " has " +
                        std::to_string(tree.children(n).size()) + " children");
            const Scalar& p = base.row(n)[0];
            Scalar s(0);
            if (kappa > Scalar(0)) s = kappa * scalar_sqrt<Scalar>(p * (Scalar(1) - p) * dt);
            // the one-step map is monotone exactly when the shifted
            // probabilities stay inside the admissible band
            require(p - s >= floor && p + s <= Scalar(1) - floor, ErrorCode::EnvelopeOverflow,
                    "ambiguity width at node " + std::to_string(n) +
                        " pushes probabilities outside the admissible band");
            e.shifts_[n] = std::move(s);
        }
        e.kernel_ = std::move(base);
        return e;
    }

    Kind kind() const { return kind_; }

    const char* kind_name() const {
        switch (kind_) {
            case Kind::linear: return "linear";
            case Kind::upper_prior: return "upper_prior";
            case Kind::g_driver: return "g_driver";
        }
        return "?";
    }

    const Scalar& min_prob() const {
        return kind_ == Kind::upper_prior ? priors_.min_prob() : kernel_.min_prob();
    }

    // expected child count at a node; 0 on leaves
    int arity(int node) const {
        if (kind_ == Kind::upper_prior) {
            const auto& rows = priors_.rows(node);
            return rows.empty() ? 0 : static_cast<int>(rows.front().size());
        }
        return static_cast<int>(kernel_.row(node).size());
    }

    Scalar one_step(int node, const Vector<Scalar>& child_values) const {
        const int got = static_cast<int>(child_values.size());
        if (kind_ == Kind::g_driver && got != 2)
            fail(ErrorCode::NonBinomialNode,
                 "ambiguity step needs exactly 2 child values, got " + std::to_string(got));
        const int want = arity(node);
        require(want > 0, ErrorCode::ArityMismatch,
                "one-step expectation at leaf node " + std::to_string(node));
        require(got == want, ErrorCode::ArityMismatch,
                "node " + std::to_string(node) + " expects " + std::to_string(want) +
                    " child values, got " + std::to_string(got));
        switch (kind_) {
            case Kind::linear: return detail::weighted_sum(kernel_.row(node), child_values);
            case Kind::upper_prior: {
                const auto& rows = priors_.rows(node);
                Scalar best = detail::weighted_sum(rows.front(), child_values);
                for (std::size_t r = 1; r < rows.size(); ++r) {
                    Scalar v = detail::weighted_sum(rows[r], child_values);
                    if (v > best) best = std::move(v);
                }
                return best;
            }
            case Kind::g_driver: {
                const Scalar& p = kernel_.row(node)[0];
                const Scalar& yu = child_values[0];
                const Scalar& yd = child_values[1];
                return p * yu + (Scalar(1) - p) * yd + shifts_[node] * abs_value(yu - yd);
            }
        }
        fail(ErrorCode::SpecError, "unreachable engine kind");
    }

    const TransitionKernel<Scalar>& kernel() const { return kernel_; }
    const PriorSet<Scalar>& priors() const { return priors_; }
    const Scalar& kappa() const { return kappa_; }
    const Scalar& dt() const { return dt_; }
    const std::vector<Scalar>& shifts() const { return shifts_; }

  private:
    Kind kind_ = Kind::linear;
    TransitionKernel<Scalar> kernel_; // linear; g_driver base probabilities
    PriorSet<Scalar> priors_;         // upper_prior
    Scalar kappa_{};                  // g_driver
    Scalar dt_{};
    std::vector<Scalar> shifts_; // g_driver: kappa*sqrt(p(1-p)*dt) per node
};

template <class Scalar>
Scalar one_step_exp(const Engine<Scalar>& engine, int node, const Vector<Scalar>& child_values) {
    return engine.one_step(node, child_values);
}

namespace detail {

template <class Scalar>
Scalar cond_exp_rec(const Engine<Scalar>& engine, const FiltrationTree& tree,
                    const NodeProcess<Scalar>& rv, int node, int u) {
    if (tree.time(node) == u) return rv.at(node);
    const auto& kids = tree.children(node);
    Vector<Scalar> vals(kids.size());
    for (std::size_t j = 0; j < kids.size(); ++j)
        vals[static_cast<Eigen::Index>(j)] = cond_exp_rec(engine, tree, rv, kids[j], u);
    return engine.one_step(node, vals);
}

} // namespace detail

// Conditional expectation at `at` of a variable defined on the time-u slice:
// one-step operators composed backward from u down to the node's own time.
template <class Scalar>
Scalar cond_exp(const Engine<Scalar>& engine, const FiltrationTree& tree,
                const NodeProcess<Scalar>& rv, int at, int u) {
    require(u >= tree.time(at), ErrorCode::TimeOrderViolation,
            "conditioning node at time " + std::to_string(tree.time(at)) +
                " is later than the variable's time " + std::to_string(u));
    require(u <= tree.num_steps(), ErrorCode::TimeOrderViolation,
            "variable time " + std::to_string(u) + " is beyond the horizon");
    return detail::cond_exp_rec(engine, tree, rv, at, u);
}

// The value-of-information process of a time-u variable: cond_exp at every
// node with time <= u. Later nodes stay unset; there is nothing they could
// legitimately hold.
template <class Scalar>
NodeProcess<Scalar> martingale_process(const Engine<Scalar>& engine, const FiltrationTree& tree,
                                       const NodeProcess<Scalar>& rv, int u) {
    require(u >= 0 && u <= tree.num_steps(), ErrorCode::TimeOrderViolation,
            "variable time " + std::to_string(u) + " outside the horizon");
    NodeProcess<Scalar> out(tree.num_nodes());
    for (int n : tree.nodes_at(u)) out.set(n, rv.at(n));
    for (int t = u - 1; t >= 0; --t) {
        for (int n : tree.nodes_at(t)) {
            const auto& kids = tree.children(n);
            Vector<Scalar> vals(kids.size());
            for (std::size_t j = 0; j < kids.size(); ++j)
                vals[static_cast<Eigen::Index>(j)] = out.at(kids[j]);
            out.set(n, engine.one_step(n, vals));
        }
    }
    return out;
}

// Stop node on the path through `leaf`, required to lie inside the subtree
// of `from`: a flag strictly above `from` means the rule stops too early.
inline int stop_node_at_or_after(const FiltrationTree& tree, const StoppingRule& rule, int leaf,
                                 int from) {
    int found = -1;
    for (int n = leaf;; n = tree.parent(n)) {
        if (rule.flagged(n)) {
            require(found == -1, ErrorCode::NonCanonicalRule,
                    "two flags on the path through leaf " + std::to_string(leaf));
            found = n;
        }
        if (n == from) break;
    }
    if (found != -1) return found;
    for (int n = tree.parent(from); n != -1; n = tree.parent(n)) {
        if (rule.flagged(n))
            fail(ErrorCode::OrderViolation, "rule stops at node " + std::to_string(n) +
                                                " before the evaluation node " +
                                                std::to_string(from));
    }
    fail(ErrorCode::NonCanonicalRule,
         "no flag on the path through leaf " + std::to_string(leaf));
}

// E_from[X(tau)] for one fixed rule: read the reward at each path's stop
// node, lift to the leaves, and condition back down to `from`. By time
// consistency this equals running the backward recursion and freezing it at
// flagged nodes, which is what the solver does; tests compare the two.
template <class Scalar>
Scalar stopped_value(const Engine<Scalar>& engine, const FiltrationTree& tree,
                     const NodeProcess<Scalar>& reward, const StoppingRule& rule, int from) {
    require_reward(tree, reward);
    require_same_tree(tree, rule);
    NodeProcess<Scalar> lifted(tree.num_nodes());
    for (int leaf : tree.leaves_under(from))
        lifted.set(leaf, reward.at(stop_node_at_or_after(tree, rule, leaf, from)));
    return detail::cond_exp_rec(engine, tree, lifted, from, tree.num_steps());
}

// Maps an engine onto the sublinear one that dominates it: a linear engine
// becomes the singleton menu, an upper_prior is already one, and the
// ambiguity step becomes its exact two-row representation with the base
// probability shifted by kappa*sqrt(p(1-p)*dt) in each direction.
template <class Scalar>
Engine<Scalar> upper_envelope(const Engine<Scalar>& engine, const FiltrationTree& tree) {
    using Kind = typename Engine<Scalar>::Kind;
    if (engine.kind() == Kind::upper_prior) return engine;
    std::vector<std::vector<RowVector<Scalar>>> rows(tree.num_nodes());
    const Scalar floor = engine.min_prob();
    for (int n = 0; n < tree.num_nodes(); ++n) {
        if (tree.is_leaf(n)) continue;
        if (engine.kind() == Kind::linear) {
            rows[n] = {engine.kernel().row(n)};
            continue;
        }
        const Scalar& p = engine.kernel().row(n)[0];
        const Scalar& s = engine.shifts()[n];
        require(p - s >= floor && p + s <= Scalar(1) - floor, ErrorCode::EnvelopeOverflow,
                "shifted probability at node " + std::to_string(n) +
                    " leaves the admissible band");
        RowVector<Scalar> up(2), down(2);
        up << p + s, Scalar(1) - p - s;
        down << p - s, Scalar(1) - p + s;
        rows[n] = {up};
        if (s > Scalar(0)) rows[n].push_back(down);
    }
    return Engine<Scalar>::upper_prior(PriorSet<Scalar>::build(tree, std::move(rows), floor));
}

} // namespace snell
