#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "engine.hpp"
#include "numeric.hpp"
#include "process.hpp"
#include "tree.hpp"

namespace snell {

// Seeded random instances for the property suites and the generate command.
// Everything routes through rng_below, so a seed produces the same instance
// on every platform; all numbers are small exact rationals, so exact-mode
// identities stay cheap to test.

template <class Scalar>
Scalar fraction(std::int64_t num, std::int64_t den) {
    if constexpr (scalar_traits<Scalar>::exact) {
        return Scalar(Rational(num, den));
    } else {
        return static_cast<Scalar>(num) / static_cast<Scalar>(den);
    }
}

// Uniform-depth tree; branching 2 or 3 fixed, or 0 to draw 2 or 3 per node.
template <class RNG>
FiltrationTree random_tree(RNG& rng, int depth, int branching = 0) {
    require(depth >= 1, ErrorCode::MalformedTree, "tree depth must be at least 1");
    require(branching == 0 || branching == 2 || branching == 3, ErrorCode::MalformedTree,
            "branching must be 2, 3, or 0 for a random draw per node");
    std::vector<NodeSpec> nodes{{0, 0, -1, {}}};
    std::vector<int> frontier{0};
    int next_id = 1;
    for (int t = 1; t <= depth; ++t) {
        std::vector<int> next;
        for (int parent : frontier) {
            const int width =
                branching != 0 ? branching : 2 + static_cast<int>(rng_below(rng, 2));
            for (int c = 0; c < width; ++c) {
                nodes.push_back({next_id, t, parent, {}});
                nodes[static_cast<std::size_t>(parent)].children.push_back(next_id);
                next.push_back(next_id);
                ++next_id;
            }
        }
        frontier = std::move(next);
    }
    return FiltrationTree::build(depth, nodes);
}

// Nonnegative rationals num/den with num in [0, num_bound], den in [1, den_bound].
template <class Scalar, class RNG>
NodeProcess<Scalar> random_reward(const FiltrationTree& tree, RNG& rng,
                                  std::uint64_t num_bound = 9, std::uint64_t den_bound = 4) {
    NodeProcess<Scalar> out(tree.num_nodes());
    for (int n = 0; n < tree.num_nodes(); ++n) {
        const auto num = static_cast<std::int64_t>(rng_below(rng, num_bound + 1));
        const auto den = static_cast<std::int64_t>(1 + rng_below(rng, den_bound));
        out.set(n, fraction<Scalar>(num, den));
    }
    return out;
}

namespace detail {

// One probability row from positive integer weights in [1, weight_bound];
// entries are at least 1/(arity * weight_bound), far above the default floor.
template <class Scalar, class RNG>
RowVector<Scalar> random_row(int arity, RNG& rng, std::uint64_t weight_bound) {
    std::vector<std::int64_t> w(static_cast<std::size_t>(arity));
    std::int64_t total = 0;
    for (auto& wi : w) {
        wi = static_cast<std::int64_t>(1 + rng_below(rng, weight_bound));
        total += wi;
    }
    RowVector<Scalar> row(arity);
    for (int j = 0; j < arity; ++j) row[j] = fraction<Scalar>(w[static_cast<std::size_t>(j)], total);
    return row;
}

} // namespace detail

template <class Scalar, class RNG>
TransitionKernel<Scalar> random_kernel(const FiltrationTree& tree, RNG& rng,
                                       std::uint64_t weight_bound = 16) {
    std::vector<RowVector<Scalar>> rows(tree.num_nodes());
    for (int n = 0; n < tree.num_nodes(); ++n) {
        if (tree.is_leaf(n)) continue;
        rows[n] = detail::random_row<Scalar>(static_cast<int>(tree.children(n).size()), rng,
                                             weight_bound);
    }
    return TransitionKernel<Scalar>::build(tree, std::move(rows));
}

template <class Scalar, class RNG>
PriorSet<Scalar> random_priors(const FiltrationTree& tree, RNG& rng, int min_menu = 2,
                               int max_menu = 4, std::uint64_t weight_bound = 16) {
    require(1 <= min_menu && min_menu <= max_menu, ErrorCode::SpecError,
            "prior menu bounds out of order");
    std::vector<std::vector<RowVector<Scalar>>> rows(tree.num_nodes());
    for (int n = 0; n < tree.num_nodes(); ++n) {
        if (tree.is_leaf(n)) continue;
        const int menu =
            min_menu + static_cast<int>(rng_below(
                           rng, static_cast<std::uint64_t>(max_menu - min_menu) + 1));
        const int arity = static_cast<int>(tree.children(n).size());
        for (int k = 0; k < menu; ++k)
            rows[n].push_back(detail::random_row<Scalar>(arity, rng, weight_bound));
    }
    return PriorSet<Scalar>::build(tree, std::move(rows));
}

// Ambiguity engine with parameters that stay exact: p = a^2/(a^2+b^2) makes
// p(1-p) the perfect square (ab)^2/(a^2+b^2)^2, so the probability shift is
// rational for every rational kappa.
template <class Scalar, class RNG>
Engine<Scalar> random_ambiguity_engine(const FiltrationTree& tree, RNG& rng) {
    const auto a = static_cast<std::int64_t>(1 + rng_below(rng, 4));
    const auto b = static_cast<std::int64_t>(1 + rng_below(rng, 4));
    const Scalar p = fraction<Scalar>(a * a, a * a + b * b);
    const Scalar kappa = fraction<Scalar>(static_cast<std::int64_t>(rng_below(rng, 3)), 10);
    return Engine<Scalar>::g_driver(tree, TransitionKernel<Scalar>::binomial(tree, p), kappa,
                                    Scalar(1));
}

enum class EngineChoice { linear, upper_prior, ambiguity };

template <class Scalar, class RNG>
Engine<Scalar> random_engine(const FiltrationTree& tree, RNG& rng, EngineChoice choice) {
    switch (choice) {
        case EngineChoice::linear: return Engine<Scalar>::linear(random_kernel<Scalar>(tree, rng));
        case EngineChoice::upper_prior:
            return Engine<Scalar>::upper_prior(random_priors<Scalar>(tree, rng));
        case EngineChoice::ambiguity: return random_ambiguity_engine<Scalar>(tree, rng);
    }
    fail(ErrorCode::SpecError, "unreachable engine choice");
}

// A full single-reward instance: tree, engine, and node reward, all owned.
template <class Scalar>
struct Instance {
    FiltrationTree tree;
    Engine<Scalar> engine;
    NodeProcess<Scalar> reward;
};

template <class Scalar>
Instance<Scalar> make_instance(std::uint64_t seed, int depth, int branching,
                               EngineChoice choice) {
    std::mt19937_64 rng(seed);
    FiltrationTree tree = random_tree(rng, depth, branching);
    Engine<Scalar> engine = random_engine<Scalar>(tree, rng, choice);
    NodeProcess<Scalar> reward = random_reward<Scalar>(tree, rng);
    return Instance<Scalar>{std::move(tree), std::move(engine), std::move(reward)};
}

} // namespace snell
