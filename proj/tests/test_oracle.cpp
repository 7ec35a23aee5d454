#include <set>

#include "test_support.hpp"

using namespace snell;
using testutil::rat;

TEST_CASE("rule counts follow the per-node census recursion") {
    CHECK(RuleEnumeration(testutil::tree1()).count() == 2);
    CHECK(RuleEnumeration(testutil::tree2()).count() == 5);
    CHECK(RuleEnumeration(testutil::tree3()).count() == 26);
    CHECK(RuleEnumeration(make_uniform_tree(4, 2)).count() == 677);
    CHECK(RuleEnumeration(make_uniform_tree(2, 3)).count() == 9);

    // per-node counts: leaves 1, interior 1 + product over children
    FiltrationTree t = testutil::tree3();
    RuleEnumeration en(t);
    for (int n = 0; n < t.num_nodes(); ++n) {
        if (t.is_leaf(n)) {
            CHECK(en.count_at(n) == 1);
        } else {
            std::uint64_t prod = 1;
            for (int c : t.children(n)) prod *= en.count_at(c);
            CHECK(en.count_at(n) == 1 + prod);
        }
    }

    // subtree enumeration counts locally
    CHECK(RuleEnumeration(testutil::tree2(), 1).count() == 2);
}

TEST_CASE("every index decodes to a distinct canonical rule") {
    FiltrationTree t = testutil::tree2();
    RuleEnumeration en(t);
    std::set<std::vector<int>> seen;
    bool has_root = false, has_leaves = false;
    for (std::uint64_t i = 0; i < en.count(); ++i) {
        StoppingRule r = en.rule_at(i);
        CHECK(is_canonical(t, r));
        seen.insert(r.flagged_nodes());
        if (r == StoppingRule::at_root(t)) has_root = true;
        if (r == StoppingRule::at_leaves(t)) has_leaves = true;
    }
    CHECK(seen.size() == 5);
    CHECK(has_root);
    CHECK(has_leaves);
    CHECK_ERR(en.rule_at(5), BudgetExceeded);
}

TEST_CASE("enumeration relative to a base rule covers exactly the later rules") {
    FiltrationTree t = testutil::tree2();
    StoppingRule base(t.num_nodes()); // stop at 1, or at the leaves under 2
    base.set_flag(1);
    base.set_flag(5);
    base.set_flag(6);
    RuleEnumeration en = enumerate_rules(t, base);
    CHECK(en.count() == 2); // node 1 can hold or release; the leaves are fixed
    std::set<std::vector<int>> seen;
    for (std::uint64_t i = 0; i < en.count(); ++i) {
        StoppingRule r = en.rule_at(i);
        CHECK(is_canonical(t, r));
        CHECK(rule_leq(t, base, r));
        seen.insert(r.flagged_nodes());
    }
    CHECK(seen.count({1, 5, 6}) == 1);
    CHECK(seen.count({3, 4, 5, 6}) == 1);

    // from the root rule the base-relative count equals the unconstrained one
    CHECK(enumerate_rules(t, StoppingRule::at_root(t)).count() == 5);
    // a base that skips paths is rejected
    CHECK_ERR(enumerate_rules(t, StoppingRule::stop_at(t, 1)), NonCanonicalRule);
}

TEST_CASE("deep trees saturate the count instead of overflowing") {
    FiltrationTree deep = make_uniform_tree(7, 2);
    RuleEnumeration en(deep);
    CHECK(en.saturated());
    CHECK_ERR(en.rule_at(0), BudgetExceeded);
}

TEST_CASE("exhaustive single-stop search finds the unique or tied optimum") {
    FiltrationTree t = testutil::tree1();
    NodeProcess<Rational> x = testutil::reward1();

    // the worst-case-prior engine prefers waiting: 9/10 * 2 = 9/5 > 1
    auto max_res = brute_value_single(testutil::upper_engine(t), t, x);
    CHECK(max_res.value == rat(9, 5));
    CHECK(max_res.searched == 2);
    REQUIRE(max_res.optimal.size() == 1);
    CHECK(max_res.optimal[0] == StoppingRule::at_leaves(t));

    // the fair coin is indifferent: E[leaves] = 1 = reward now
    auto tie_res = brute_value_single(testutil::linear_half(t), t, x);
    CHECK(tie_res.value == rat(1));
    CHECK(tie_res.optimal.size() == 2);

    CHECK_ERR(brute_value_single(testutil::upper_engine(t), t, x, -1, 1), BudgetExceeded);
}

TEST_CASE("exhaustive tuple search walks the full odometer") {
    FiltrationTree t = testutil::tree1();
    StoppingRule leaves = StoppingRule::at_leaves(t);
    // score = how many coordinates wait until the end
    auto eval = [&](const std::vector<StoppingRule>& rules) {
        int n = 0;
        for (const auto& r : rules)
            if (r == leaves) ++n;
        return Rational(n);
    };
    auto res = brute_best_tuple<Rational>(t, 2, eval);
    CHECK(res.searched == 4);
    CHECK(res.value == rat(2));
    REQUIRE(res.optimal.size() == 1);
    CHECK(res.optimal[0][0] == leaves);
    CHECK(res.optimal[0][1] == leaves);

    CHECK_ERR(brute_best_tuple<Rational>(t, 2, eval, 3), BudgetExceeded);
    CHECK_ERR(brute_best_tuple<Rational>(t, 0, eval), SpecError);
}
