#include "test_support.hpp"

using namespace snell;
using testutil::rat;

namespace {

Engine<Rational> g_fifth(const FiltrationTree& t) {
    return Engine<Rational>::g_driver(t, TransitionKernel<Rational>::binomial(t, rat(1, 2)),
                                      rat(1, 5), rat(1));
}

} // namespace

TEST_CASE("every engine kind satisfies its operator laws on random data") {
    FiltrationTree t = testutil::tree3();
    std::vector<Engine<Rational>> engines{testutil::linear_half(t), testutil::upper_engine(t),
                                          g_fifth(t)};
    for (const auto& e : engines) {
        CAPTURE(e.kind_name());
        AxiomReport rep = axiom_check(e, t, 200, 42);
        CHECK(rep.all_pass());
        CHECK(rep.num_samples == 200);
        CHECK(rep.engine_kind == e.kind_name());
        CHECK(rep.mode == "exact");
        for (const auto& entry : rep.entries) {
            CAPTURE(entry.name);
            CHECK(entry.samples == 200);
            CHECK(entry.violations == 0);
            CHECK(entry.worst == 0.0);
        }
    }

    // only the max-over-priors engine claims the sublinear laws
    AxiomReport lin = axiom_check(testutil::linear_half(t), t, 5, 1);
    CHECK(lin.entries.size() == 7);
    AxiomReport up = axiom_check(testutil::upper_engine(t), t, 5, 1);
    CHECK(up.entries.size() == 9);
    CHECK(up.entry("sub-additivity").pass());
    CHECK(up.entry("positive-homogeneity").pass());
    CHECK_ERR(up.entry("no-such-law"), SpecError);

    CHECK_ERR(axiom_check(testutil::linear_half(t), t, 0, 1), SpecError);
}

TEST_CASE("float mode passes the same laws within tolerance") {
    FiltrationTree t = testutil::tree3();
    std::vector<std::vector<RowVector<double>>> rows(t.num_nodes());
    for (int n = 0; n < t.num_nodes(); ++n) {
        if (t.is_leaf(n)) continue;
        RowVector<double> r1(2), r2(2);
        r1 << 0.5, 0.5;
        r2 << 0.9, 0.1;
        rows[n] = {r1, r2};
    }
    Engine<double> e = Engine<double>::upper_prior(PriorSet<double>::build(t, rows));
    AxiomReport rep = axiom_check(e, t, 200, 42);
    CHECK(rep.all_pass());
    CHECK(rep.mode == "float");
}

TEST_CASE("each engine is dominated by its own upper envelope") {
    FiltrationTree t = testutil::tree3();

    Engine<Rational> lin = testutil::linear_half(t);
    AxiomReport lin_rep = domination_check(lin, upper_envelope(lin, t), t, 200, 7);
    CHECK(lin_rep.all_pass());
    CHECK(lin_rep.entry("domination").samples == 200);

    Engine<Rational> g = g_fifth(t);
    AxiomReport g_rep = domination_check(g, upper_envelope(g, t), t, 200, 7);
    CHECK(g_rep.all_pass());

    // control: the bare base kernel does not dominate the ambiguity step
    AxiomReport broken = domination_check(g, lin, t, 200, 7);
    CHECK_FALSE(broken.all_pass());
    CHECK(broken.entry("domination").violations > 0);
    CHECK(broken.entry("domination").worst > 0.0);

    CHECK_ERR(domination_check(g, lin, t, 0, 7), SpecError);
}
