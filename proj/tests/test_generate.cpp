#include "test_support.hpp"

using namespace snell;
using namespace testutil;

TEST_CASE("random trees are valid and within the requested shape") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 50; ++i) {
        const int depth = 1 + static_cast<int>(rng_below(rng, 4));
        FiltrationTree t = random_tree(rng, depth, 0);
        CHECK(t.num_steps() == depth);
        for (int n = 0; n < t.num_nodes(); ++n) {
            if (t.is_leaf(n)) continue;
            const auto width = t.children(n).size();
            CHECK(width >= 2);
            CHECK(width <= 3);
        }
    }
    FiltrationTree fixed = random_tree(rng, 2, 3);
    CHECK(fixed.num_nodes() == 13);
    CHECK_ERR(random_tree(rng, 0, 2), MalformedTree);
    CHECK_ERR(random_tree(rng, 2, 1), MalformedTree);
}

TEST_CASE("instances are deterministic in the seed") {
    auto a = make_instance<Rational>(7, 3, 0, EngineChoice::upper_prior);
    auto b = make_instance<Rational>(7, 3, 0, EngineChoice::upper_prior);
    REQUIRE(a.tree.num_nodes() == b.tree.num_nodes());
    for (int n = 0; n < a.tree.num_nodes(); ++n) {
        CHECK(a.tree.time(n) == b.tree.time(n));
        CHECK(a.tree.children(n) == b.tree.children(n));
        CHECK(a.reward.at(n) == b.reward.at(n));
        if (!a.tree.is_leaf(n)) CHECK(a.engine.priors().rows(n) == b.engine.priors().rows(n));
    }
    auto c = make_instance<Rational>(8, 3, 0, EngineChoice::upper_prior);
    bool differs = c.tree.num_nodes() != a.tree.num_nodes();
    if (!differs)
        for (int n = 0; n < a.tree.num_nodes() && !differs; ++n)
            differs = !(a.reward.at(n) == c.reward.at(n));
    CHECK(differs);
}

TEST_CASE("generated engines are usable in every mode") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        FiltrationTree t = random_tree(rng, 2, 2);
        // the ambiguity family is built so its shift is exactly representable
        Engine<Rational> e = random_ambiguity_engine<Rational>(t, rng);
        CHECK(e.kind() == Engine<Rational>::Kind::g_driver);
        NodeProcess<Rational> reward = random_reward<Rational>(t, rng);
        SnellSolution<Rational> sol = snell::snell(e, t, reward);
        CHECK(sol.root_value() >= reward.at(t.root()));
        auto brute = brute_value_single(e, t, reward);
        CHECK(brute.value == sol.root_value());
    }
    for (int i = 0; i < 10; ++i) {
        auto inst = make_instance<double>(400 + static_cast<std::uint64_t>(i), 3, 0,
                                          EngineChoice::linear);
        SnellSolution<double> sol = snell::snell(inst.engine, inst.tree, inst.reward);
        auto brute = brute_value_single(inst.engine, inst.tree, inst.reward);
        CHECK(sol.cmp.eq(sol.root_value(), brute.value));
    }
}

TEST_CASE("generated rewards stay within the advertised bounds") {
    std::mt19937_64 rng(17);
    FiltrationTree t = random_tree(rng, 3, 0);
    NodeProcess<Rational> r = random_reward<Rational>(t, rng, 9, 4);
    for (int n = 0; n < t.num_nodes(); ++n) {
        CHECK(r.at(n) >= Rational(0));
        CHECK(r.at(n) <= Rational(9));
    }
}
