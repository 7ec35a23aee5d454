#include "snell/io.hpp"

#include "test_support.hpp"

using namespace snell;
using namespace testutil;
using io::json;
using io::ProblemSpec;

namespace {

// The depth-1 worked instance as a spec document.
json worked_spec() {
    return json::parse(R"({
      "tree": {"kind":"explicit","num_steps":1,"nodes":[
        {"id":0,"t":0,"children":[1,2]},
        {"id":1,"t":1,"parent":0},
        {"id":2,"t":1,"parent":0}]},
      "engine": {"kind":"upper_prior","menus":{"0":[["1/2","1/2"],["9/10","1/10"]]}},
      "reward": {"kind":"single","values":["1","2","0"]},
      "mode": "exact",
      "seed": 11
    })");
}

} // namespace

TEST_CASE("spec parsing: defaults and overrides") {
    ProblemSpec s = ProblemSpec::parse(worked_spec());
    CHECK(s.exact);
    CHECK(s.has_seed);
    CHECK(s.seed == 11);
    CHECK(s.budgets.nodes == 1000000);
    CHECK(s.budgets.single_rules == 10000);
    CHECK(s.budgets.multi_vectors == 100000);
    CHECK(s.budgets.solve == 2000000);
    CHECK(s.lambda_grid ==
          std::vector<std::string>{"1/2", "9/10", "99/100", "999/1000"});

    json j = worked_spec();
    j["mode"] = json{{"kind", "float"}, {"tolerance", 1e-6}};
    j["budgets"] = json{{"solve", 50}};
    j["lambda_grid"] = json::array({"1/4", 0.5});
    ProblemSpec t = ProblemSpec::parse(j);
    CHECK_FALSE(t.exact);
    CHECK(t.tolerance == 1e-6);
    CHECK(t.budgets.solve == 50);
    CHECK(t.budgets.nodes == 1000000);
    CHECK(t.grid<Rational>() == std::vector<Rational>{rat(1, 4), rat(1, 2)});
}

TEST_CASE("spec parsing: rejections carry field paths") {
    auto reject = [](json j, const char* needle) {
        try {
            ProblemSpec::parse(std::move(j));
            FAIL_CHECK("expected a spec error mentioning " << needle);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SpecError);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    json j = worked_spec();
    j["mode"] = json{{"kind", "float"}, {"tolerance", 0}};
    reject(j, "mode.tolerance");
    j = worked_spec();
    j["mode"] = "fast";
    reject(j, "mode");
    j = worked_spec();
    j["seed"] = -3;
    reject(j, "seed");
    j = worked_spec();
    j["budgets"] = json{{"solve", 0}};
    reject(j, "budgets.solve");
    j = worked_spec();
    j["lambda_grid"] = json::array();
    reject(j, "lambda_grid");
    reject(json::array(), "object");
}

TEST_CASE("scalar parsing per mode") {
    CHECK(io::parse_scalar<Rational>(json("1/3"), "x") == rat(1, 3));
    CHECK(io::parse_scalar<Rational>(json("0.25"), "x") == rat(1, 4));
    CHECK(io::parse_scalar<Rational>(json(7), "x") == rat(7));
    CHECK_ERR(io::parse_scalar<Rational>(json(0.1), "x"), SpecError);
    CHECK_ERR(io::parse_scalar<Rational>(json("nope"), "x"), SpecError);
    CHECK_ERR(io::parse_scalar<Rational>(json::object(), "x"), SpecError);
    CHECK(io::parse_scalar<double>(json(0.1), "x") == 0.1);
    CHECK(io::parse_scalar<double>(json("1/4"), "x") == 0.25);
    CHECK(io::format_scalar(rat(5, 9)) == "5/9");
    CHECK(io::format_scalar(rat(3)) == "3");
    CHECK(io::format_scalar(0.5) == "0.5");
}

TEST_CASE("tree building: explicit and lattice") {
    ProblemSpec s = ProblemSpec::parse(worked_spec());
    io::BuiltTree<Rational> bt = io::build_tree<Rational>(s);
    CHECK(bt.tree.num_nodes() == 3);
    CHECK(bt.tree.children(0) == std::vector<int>{1, 2});
    CHECK_FALSE(bt.prices.has_value());

    json j = worked_spec();
    j["tree"] = json{{"kind", "lattice"}, {"num_steps", 2}, {"s0", "100"},
                     {"up", "6/5"}, {"down", "5/6"}};
    io::BuiltTree<Rational> lat = io::build_tree<Rational>(ProblemSpec::parse(j));
    CHECK(lat.tree.num_nodes() == 7);
    REQUIRE(lat.prices.has_value());
    CHECK(lat.prices->at(0) == rat(100));
    CHECK(lat.prices->at(3) == rat(144));   // two up moves
    CHECK(lat.prices->at(6) == rat(625, 9)); // two down moves

    j["budgets"] = json{{"nodes", 3}};
    CHECK_ERR(io::build_tree<Rational>(ProblemSpec::parse(j)), HorizonTooLarge);

    j = worked_spec();
    j["tree"]["kind"] = "mystery";
    CHECK_ERR(io::build_tree<Rational>(ProblemSpec::parse(j)), SpecError);
    j = worked_spec();
    j["tree"].erase("num_steps");
    CHECK_ERR(io::build_tree<Rational>(ProblemSpec::parse(j)), SpecError);
    j = worked_spec();
    j.erase("tree");
    CHECK_ERR(io::build_tree<Rational>(ProblemSpec::parse(j)), SpecError);
}

TEST_CASE("engine building matches direct construction") {
    ProblemSpec s = ProblemSpec::parse(worked_spec());
    io::BuiltTree<Rational> bt = io::build_tree<Rational>(s);
    Engine<Rational> e = io::build_engine<Rational>(s, bt.tree);
    CHECK(e.kind() == Engine<Rational>::Kind::upper_prior);
    Vector<Rational> vals(2);
    vals << rat(2), rat(0);
    CHECK(e.one_step(0, vals) == rat(9, 5)); // best row is (9/10, 1/10)

    json j = worked_spec();
    j["engine"] = json{{"kind", "linear"}, {"rows", json{{"0", json::array({"1/2", "1/2"})}}}};
    Engine<Rational> lin = io::build_engine<Rational>(ProblemSpec::parse(j), bt.tree);
    CHECK(lin.one_step(0, vals) == rat(1));

    j["engine"] = json{{"kind", "g_driver"}, {"p", "1/2"}, {"kappa", "1/5"}, {"dt", "1"}};
    Engine<Rational> g = io::build_engine<Rational>(ProblemSpec::parse(j), bt.tree);
    CHECK(g.one_step(0, vals) == rat(1) + rat(1, 10) * rat(2));

    auto reject = [&](json spec, const char* needle) {
        try {
            io::build_engine<Rational>(ProblemSpec::parse(std::move(spec)), bt.tree);
            FAIL_CHECK("expected a spec error mentioning " << needle);
        } catch (const Error& e_) {
            CHECK(e_.code() == ErrorCode::SpecError);
            CHECK(std::string(e_.what()).find(needle) != std::string::npos);
        }
    };
    j = worked_spec();
    j.erase("engine");
    reject(j, "engine");
    j = worked_spec();
    j["engine"] = json{{"kind", "linear"}, {"rows", json::object()}};
    reject(j, "engine.rows");
    j = worked_spec();
    j["engine"]["kind"] = "median";
    reject(j, "engine.kind");

    // malformed rows surface the kernel validator's error
    j = worked_spec();
    j["engine"] = json{{"kind", "linear"}, {"rows", json{{"0", json::array({"1/2", "1/3"})}}}};
    CHECK_ERR(io::build_engine<Rational>(ProblemSpec::parse(j), bt.tree), MalformedKernel);
}

TEST_CASE("reward building: values, payoffs, d-fold kinds") {
    ProblemSpec s = ProblemSpec::parse(worked_spec());
    io::BuiltTree<Rational> bt = io::build_tree<Rational>(s);
    CHECK(io::reward_arity(s) == 1);
    NodeProcess<Rational> base = io::build_base_values<Rational>(s, bt.tree, bt.prices);
    CHECK(base.at(1) == rat(2));

    json j = worked_spec();
    j["reward"]["values"] = json::array({"1", "2"});
    CHECK_ERR(io::build_base_values<Rational>(ProblemSpec::parse(j), bt.tree, bt.prices),
              SpecError);
    j = worked_spec();
    j["reward"]["values"][2] = "-1";
    CHECK_ERR(io::build_base_values<Rational>(ProblemSpec::parse(j), bt.tree, bt.prices),
              NegativeReward);
    j = worked_spec();
    j["reward"] = json{{"kind", "single"}, {"payoff", "put"}, {"strike", "1"}};
    CHECK_ERR(io::build_base_values<Rational>(ProblemSpec::parse(j), bt.tree, bt.prices),
              SpecError); // no lattice prices on an explicit tree

    json lat = worked_spec();
    lat["tree"] = json{{"kind", "lattice"}, {"num_steps", 1}, {"s0", "100"},
                       {"up", "6/5"}, {"down", "5/6"}};
    lat["reward"] = json{{"kind", "single"}, {"payoff", "put"}, {"strike", "100"}};
    ProblemSpec ps = ProblemSpec::parse(lat);
    io::BuiltTree<Rational> blat = io::build_tree<Rational>(ps);
    NodeProcess<Rational> put = io::build_base_values<Rational>(ps, blat.tree, blat.prices);
    CHECK(put.at(0) == rat(0));
    CHECK(put.at(1) == rat(0));            // up: price 120
    CHECK(put.at(2) == rat(100, 6));       // down: 100 - 500/6

    json m = worked_spec();
    m["reward"] = json{{"kind", "additive"}, {"d", 2},
                       {"values", json::array({"1", "2", "0"})}};
    ProblemSpec ms = ProblemSpec::parse(m);
    CHECK(io::reward_arity(ms) == 2);
    DReward<Rational> add = io::build_dreward<Rational>(ms, bt.tree, bt.prices);
    CHECK(add.value({1, 1}) == rat(4));

    m["reward"] = json{{"kind", "refraction_swing"}, {"d", 2}, {"delta", 1},
                       {"values", json::array({"1", "2", "0"})}};
    DReward<Rational> swing =
        io::build_dreward<Rational>(ProblemSpec::parse(m), bt.tree, bt.prices);
    CHECK(swing.value({0, 1}) == rat(3));
    CHECK(swing.value({1, 1}) == rat(0));

    m["reward"] = json{{"kind", "table"}, {"d", 2},
                       {"entries", json::array({json{{"nodes", json::array({0, 1})},
                                                     {"value", "5"}}})}};
    DReward<Rational> table =
        io::build_dreward<Rational>(ProblemSpec::parse(m), bt.tree, bt.prices);
    CHECK(table.value({0, 1}) == rat(5));

    m["reward"] = json{{"kind", "harvest"}, {"d", 2}};
    CHECK_ERR(io::reward_arity(ProblemSpec::parse(m)), SpecError);
    m["reward"] = json{{"kind", "additive"}, {"d", 0}};
    CHECK_ERR(io::reward_arity(ProblemSpec::parse(m)), SpecError);
}

TEST_CASE("digests are stable and content-sensitive") {
    ProblemSpec a = ProblemSpec::parse(worked_spec());
    ProblemSpec b = ProblemSpec::parse(worked_spec());
    CHECK(a.digest() == b.digest());
    CHECK(a.digest().size() == 16);
    json j = worked_spec();
    j["seed"] = 12;
    CHECK(ProblemSpec::parse(j).digest() != a.digest());
}

TEST_CASE("reports serialize deterministically with isolated timings") {
    io::RunReport rep;
    rep.command = "solve-single";
    rep.instance_digest = "abc";
    rep.mode = "exact";
    rep.summary["value_root"] = "9/5";
    rep.add_check("rule-attains-value-per-atom", true, json{{"worst_gap", 0.0}});
    rep.add_check("broken", false, json{{"lhs", "1"}, {"rhs", "2"}});
    CHECK_FALSE(rep.all_pass());

    rep.elapsed_seconds = 1.25;
    json j1 = rep.to_json();
    rep.elapsed_seconds = 99.0;
    json j2 = rep.to_json();
    j1.erase("timings");
    j2.erase("timings");
    CHECK(j1.dump() == j2.dump());
    CHECK(j1["schema_version"] == 1);
    CHECK(j1["checks"][1]["witness"]["rhs"] == "2");

    const std::string csv = rep.to_csv();
    CHECK(csv.find("command,instance_digest,mode,check,pass,witness") == 0);
    CHECK(csv.find("broken,false,\"{\"\"lhs\"\":\"\"1\"\",\"\"rhs\"\":\"\"2\"\"}\"") !=
          std::string::npos);
}
