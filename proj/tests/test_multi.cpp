#include <random>

#include "test_support.hpp"

using namespace snell;
using testutil::rat;

namespace {

StoppingRule rule_of(const FiltrationTree& t, std::vector<int> nodes) {
    StoppingRule r(t.num_nodes());
    for (int n : nodes) r.set_flag(n);
    return r;
}

std::vector<int> random_tuple(std::mt19937_64& rng, int d) {
    std::vector<int> out(static_cast<std::size_t>(d));
    for (auto& v : out) v = static_cast<int>(rng_below(rng, 6));
    return out;
}

} // namespace

TEST_CASE("tuple order compares earliest stops first, then recurses") {
    CHECK(prec_d({1, 2}, {1, 3}) == TupleOrder::precedes);
    CHECK(prec_d({1, 3}, {1, 2}) == TupleOrder::succeeds);
    CHECK(prec_d({1, 2}, {1, 2}) == TupleOrder::equal);
    CHECK(prec_d({1, 2}, {2, 1}) == TupleOrder::incomparable);
    // a strictly earlier first stop wins even if a later slot is larger,
    // which separates this order from the componentwise one
    CHECK(prec_d({0, 5}, {1, 1}) == TupleOrder::precedes);
    CHECK(prec_d({2}, {3}) == TupleOrder::precedes);
    CHECK(prec_d({3}, {2}) == TupleOrder::succeeds);
    CHECK(weakly_precedes({}, {}));
    CHECK(weakly_precedes({2, 0, 2}, {2, 0, 2}));

    CHECK_ERR(prec_d({1, 2}, {1, 2, 3}), LengthMismatch);
    CHECK_ERR(prec_d({}, {}), LengthMismatch);
    CHECK_ERR(weakly_precedes({1}, {1, 2}), LengthMismatch);
}

TEST_CASE("tuple order is a partial order on random tuples") {
    std::mt19937_64 rng(99);
    int comparable = 0;
    for (int i = 0; i < 10000; ++i) {
        const int d = 1 + static_cast<int>(rng_below(rng, 4));
        std::vector<int> a = random_tuple(rng, d);
        std::vector<int> b = random_tuple(rng, d);
        std::vector<int> c = random_tuple(rng, d);

        // reflexivity
        CHECK(weakly_precedes(a, a));
        CHECK(prec_d(a, a) == TupleOrder::equal);
        // antisymmetry
        if (weakly_precedes(a, b) && weakly_precedes(b, a)) CHECK(a == b);
        // transitivity
        if (weakly_precedes(a, b) && weakly_precedes(b, c)) CHECK(weakly_precedes(a, c));
        // prec_d is consistent with the raw relation
        TupleOrder o = prec_d(a, b);
        if (o == TupleOrder::precedes) {
            CHECK(weakly_precedes(a, b));
            CHECK(prec_d(b, a) == TupleOrder::succeeds);
            ++comparable;
        }
        if (o == TupleOrder::incomparable) {
            CHECK_FALSE(weakly_precedes(a, b));
            CHECK_FALSE(weakly_precedes(b, a));
        }
    }
    CHECK(comparable > 100); // the sampler actually exercises the relation
}

TEST_CASE("additive rewards sum a base process over the stops") {
    FiltrationTree t = testutil::tree2();
    NodeProcess<Rational> y = testutil::process_of<Rational>(
        t, {rat(1), rat(2), rat(0), rat(1), rat(0), rat(4), rat(0)});
    DReward<Rational> r = DReward<Rational>::additive(t, y, 2);
    CHECK(r.arity() == 2);
    CHECK(r.symmetric());
    CHECK_FALSE(r.frozen());
    CHECK(std::string(r.kind_name()) == "additive");
    CHECK(r.value({0, 1}) == rat(3));
    CHECK(r.value({1, 0}) == rat(3));
    CHECK(r.value({1, 1}) == rat(4));
    CHECK(r.value({0, 5}) == rat(5));

    CHECK_ERR(r.value({1, 2}), IncomparableNodes);
    CHECK_ERR(r.value({1}), LengthMismatch);
    CHECK_ERR(r.value({0, 99}), NodeNotInSubtree);

    NodeProcess<Rational> neg = testutil::process_of<Rational>(
        t, {rat(-1), rat(0), rat(0), rat(0), rat(0), rat(0), rat(0)});
    CHECK_ERR(DReward<Rational>::additive(t, neg, 2), NegativeReward);
    CHECK_ERR(DReward<Rational>::additive(t, y, 0), SpecError);
}

TEST_CASE("swing rewards pay nothing when stops cluster inside the gap") {
    FiltrationTree t = testutil::tree2();
    NodeProcess<Rational> y = NodeProcess<Rational>::constant(t, rat(3));
    DReward<Rational> r = DReward<Rational>::refraction_swing(t, y, 2, 2);
    CHECK(r.value({0, 3}) == rat(6)); // times 0 and 2: gap reached
    CHECK(r.value({0, 1}) == rat(0)); // times 0 and 1: too close
    CHECK(r.value({1, 1}) == rat(0)); // the same instant twice

    DReward<Rational> loose = DReward<Rational>::refraction_swing(t, y, 2, 0);
    CHECK(loose.value({1, 1}) == rat(6)); // no re-arming constraint left

    CHECK_ERR(DReward<Rational>::refraction_swing(t, y, 2, -1), SpecError);
}

TEST_CASE("table rewards are explicit functions of the ordered tuple") {
    FiltrationTree t = testutil::tree1();
    std::map<std::vector<int>, Rational> entries{
        {{0, 0}, rat(0)}, {{0, 1}, rat(5)}, {{0, 2}, rat(0)}, {{1, 0}, rat(1)},
        {{2, 0}, rat(0)}, {{1, 1}, rat(2)}, {{2, 2}, rat(0)},
    };
    DReward<Rational> r = DReward<Rational>::table(t, 2, entries);
    CHECK_FALSE(r.symmetric());
    CHECK(r.value({0, 1}) == rat(5));
    CHECK(r.value({1, 0}) == rat(1)); // slot order matters

    // freezing projects out a row or a column of the table
    DReward<Rational> row = r.freeze(0, 0);
    CHECK(row.arity() == 1);
    CHECK(row.frozen());
    CHECK(row.value({1}) == rat(5)); // (0, 1)
    DReward<Rational> col = r.freeze(1, 0);
    CHECK(col.value({1}) == rat(1)); // (1, 0)

    // validation of the table itself
    CHECK_ERR(DReward<Rational>::table(t, 2, {{{0}, rat(1)}}), LengthMismatch);
    CHECK_ERR(DReward<Rational>::table(t, 2, {{{0, 9}, rat(1)}}), NodeNotInSubtree);
    CHECK_ERR(DReward<Rational>::table(t, 2, {{{1, 2}, rat(1)}}), IncomparableNodes);
    CHECK_ERR(DReward<Rational>::table(t, 2, {{{0, 1}, rat(-1)}}), NegativeReward);

    // a tuple outside the table is an error at evaluation time
    std::map<std::vector<int>, Rational> partial{{{0, 0}, rat(0)}};
    DReward<Rational> sparse = DReward<Rational>::table(t, 2, partial);
    CHECK_ERR(sparse.value({0, 1}), SpecError);
}

TEST_CASE("freezing pins slots in place and narrows the domain") {
    FiltrationTree t = testutil::tree2();
    NodeProcess<Rational> y = testutil::process_of<Rational>(
        t, {rat(1), rat(2), rat(0), rat(1), rat(0), rat(4), rat(0)});
    DReward<Rational> r = DReward<Rational>::additive(t, y, 3);

    DReward<Rational> f1 = r.freeze(0, 1);
    CHECK(f1.arity() == 2);
    CHECK(f1.domain_root() == 1);
    DReward<Rational> f2 = f1.freeze(1, 3); // pins the original slot 2
    CHECK(f2.arity() == 1);
    CHECK(f2.pins() == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
    CHECK(f2.value({3}) == rat(2) + rat(1) + rat(1));
    CHECK_ERR(f2.value({4}), NodeNotInSubtree);
    CHECK_ERR(f2.freeze(0, 3), SpecError); // nothing left to pin

    CHECK_ERR(r.freeze(3, 1), CoordinateOutOfRange);
    CHECK_ERR(r.freeze(-1, 1), CoordinateOutOfRange);
    CHECK_ERR(f1.freeze(0, 2), NodeNotInSubtree); // outside the narrowed domain
}

TEST_CASE("a fixed vector of rules is priced pathwise then conditioned") {
    FiltrationTree t = testutil::tree1();
    Engine<Rational> e = testutil::upper_engine(t);
    NodeProcess<Rational> y = testutil::process_of<Rational>(t, {rat(1), rat(2), rat(0)});
    DReward<Rational> r = DReward<Rational>::additive(t, y, 2);

    StoppingVector both_leaves{{StoppingRule::at_leaves(t), StoppingRule::at_leaves(t)}};
    CHECK(evaluate_vector(e, t, r, both_leaves) == rat(18, 5));
    StoppingVector split{{StoppingRule::at_root(t), StoppingRule::at_leaves(t)}};
    CHECK(evaluate_vector(e, t, r, split) == rat(14, 5));

    StoppingVector wrong{{StoppingRule::at_root(t)}};
    CHECK_ERR(evaluate_vector(e, t, r, wrong), LengthMismatch);
}

TEST_CASE("the two-stop solver matches exhaustive search on an additive reward") {
    FiltrationTree t = testutil::tree1();
    Engine<Rational> e = testutil::upper_engine(t);
    NodeProcess<Rational> y = testutil::process_of<Rational>(t, {rat(1), rat(2), rat(0)});
    DReward<Rational> r = DReward<Rational>::additive(t, y, 2);

    MultiSolution<Rational> sol = solve_d(e, t, r);
    CHECK(sol.value.at(0) == rat(18, 5));
    CHECK(sol.reduced.at(0) == rat(14, 5)); // spend one now, play one on
    CHECK(sol.coordinate_values[0].at(0) == rat(14, 5));
    CHECK(sol.coordinate_values[1].at(0) == rat(14, 5)); // symmetric slots agree

    auto brute = brute_value_d(e, t, r);
    CHECK(brute.value == sol.value.at(0));
    CHECK(evaluate_vector(e, t, r, sol.optimal) == sol.value.at(0));

    // the earliest-stop rule marks where the vector first fires
    CHECK(sol.theta == rule_of(t, {1, 2}));
    CHECK(sol.optimal.rules[0] == rule_of(t, {1, 2}));
    CHECK(sol.optimal.rules[1] == rule_of(t, {1, 2}));
    for (int leaf : t.leaves()) {
        std::vector<int> times = stop_times_at_leaf(t, sol.optimal, leaf, 0);
        int min_time = *std::min_element(times.begin(), times.end());
        CHECK(min_time == stop_time(t, sol.theta, leaf));
    }

    // doubling identity for sums of one process: two stops earn twice one
    SnellSolution<Rational> one = snell::snell(e, t, y);
    for (int n = 0; n < t.num_nodes(); ++n)
        CHECK(sol.value.at(n) == rat(2) * one.value.at(n));

    CHECK(is_d_minimal(e, t, r, sol));
    CHECK_ERR(solve_d(e, t, r, -1, 2), BudgetExceeded);
    CHECK_ERR(solve_d(e, t, r, 99), NodeNotInSubtree);
}

TEST_CASE("the swing instance waits out the re-arming gap") {
    FiltrationTree t = testutil::tree1();
    Engine<Rational> e = testutil::upper_engine(t);
    NodeProcess<Rational> y = testutil::process_of<Rational>(t, {rat(1), rat(2), rat(0)});
    DReward<Rational> r = DReward<Rational>::refraction_swing(t, y, 2, 1);

    MultiSolution<Rational> sol = solve_d(e, t, r);
    CHECK(sol.value.at(0) == rat(14, 5));
    CHECK(sol.theta == rule_of(t, {0}));
    CHECK(sol.witness.at(0) == 0);
    CHECK(sol.optimal.rules[0] == rule_of(t, {0}));
    CHECK(sol.optimal.rules[1] == rule_of(t, {1, 2}));

    auto brute = brute_value_d(e, t, r);
    CHECK(brute.value == rat(14, 5));
    CHECK(evaluate_vector(e, t, r, sol.optimal) == rat(14, 5));
    CHECK(is_d_minimal(e, t, r, sol));
}

TEST_CASE("an asymmetric table is solved slot by slot") {
    FiltrationTree t = testutil::tree1();
    Engine<Rational> e = testutil::upper_engine(t);
    std::map<std::vector<int>, Rational> entries{
        {{0, 0}, rat(0)}, {{0, 1}, rat(5)}, {{0, 2}, rat(0)}, {{1, 0}, rat(1)},
        {{2, 0}, rat(0)}, {{1, 1}, rat(2)}, {{2, 2}, rat(0)},
    };
    DReward<Rational> r = DReward<Rational>::table(t, 2, entries);

    MultiSolution<Rational> sol = solve_d(e, t, r);
    CHECK(sol.value.at(0) == rat(9, 2));
    // slot values at the root: pin slot 0 here and optimize slot 1, and
    // vice versa; they differ because the table is asymmetric
    CHECK(sol.coordinate_values[0].at(0) == rat(9, 2));
    CHECK(sol.coordinate_values[1].at(0) == rat(9, 10));
    // independent recomputation of the same two numbers
    NodeProcess<Rational> row_vals =
        testutil::process_of<Rational>(t, {rat(0), rat(5), rat(0)});
    NodeProcess<Rational> col_vals =
        testutil::process_of<Rational>(t, {rat(0), rat(1), rat(0)});
    CHECK(snell::snell(e, t, row_vals).root_value() == rat(9, 2));
    CHECK(snell::snell(e, t, col_vals).root_value() == rat(9, 10));

    CHECK(sol.theta == rule_of(t, {0}));
    CHECK(sol.witness.at(0) == 0);
    CHECK(sol.optimal.rules[0] == rule_of(t, {0}));
    CHECK(sol.optimal.rules[1] == rule_of(t, {1, 2}));

    auto brute = brute_value_d(e, t, r);
    CHECK(brute.value == rat(9, 2));
    REQUIRE(brute.optimal.size() == 1);
    CHECK(brute.optimal[0][0] == rule_of(t, {0}));
    CHECK(brute.optimal[0][1] == rule_of(t, {1, 2}));
    CHECK(is_d_minimal(e, t, r, sol));

    // a sparse table fails loudly once an uncovered tuple is reached
    DReward<Rational> sparse =
        DReward<Rational>::table(t, 2, {{{0, 0}, rat(0)}, {{0, 1}, rat(5)}, {{0, 2}, rat(0)}});
    StoppingVector both{{StoppingRule::at_leaves(t), StoppingRule::at_leaves(t)}};
    CHECK_ERR(evaluate_vector(e, t, sparse, both), SpecError);
}

TEST_CASE("three stops on a two-step tree triple the one-stop value") {
    FiltrationTree t = testutil::tree2();
    Engine<Rational> e = testutil::upper_engine(t);
    NodeProcess<Rational> y = testutil::process_of<Rational>(
        t, {rat(1), rat(2), rat(0), rat(1), rat(0), rat(4), rat(0)});
    DReward<Rational> r = DReward<Rational>::additive(t, y, 3);

    MultiSolution<Rational> sol = solve_d(e, t, r);
    SnellSolution<Rational> one = snell::snell(e, t, y);
    for (int n = 0; n < t.num_nodes(); ++n)
        CHECK(sol.value.at(n) == rat(3) * one.value.at(n));
    CHECK(evaluate_vector(e, t, r, sol.optimal) == sol.value.at(0));
}

TEST_CASE("earliest-possible stopping is detected against the optimal set") {
    FiltrationTree t = testutil::tree1();
    Engine<Rational> e = testutil::upper_engine(t);
    NodeProcess<Rational> flat = NodeProcess<Rational>::constant(t, rat(1));
    DReward<Rational> r = DReward<Rational>::additive(t, flat, 2);

    // every vector pays 2, so the solver must pick the earliest one
    MultiSolution<Rational> sol = solve_d(e, t, r);
    CHECK(sol.value.at(0) == rat(2));
    CHECK(sol.optimal.rules[0] == rule_of(t, {0}));
    CHECK(sol.optimal.rules[1] == rule_of(t, {0}));
    CHECK(is_d_minimal(e, t, r, sol));

    // a deliberately delayed vector is called out as dominated
    MultiSolution<Rational> lazy = sol;
    lazy.optimal.rules[0] = StoppingRule::at_leaves(t);
    lazy.optimal.rules[1] = StoppingRule::at_leaves(t);
    CHECK_FALSE(is_d_minimal(e, t, r, lazy));

    CHECK_ERR(brute_value_d(e, t, r, -1, 2), BudgetExceeded);
}
