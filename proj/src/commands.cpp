// Command-line entry points: solve, verify, enumerate, and generate problem
// instances described by JSON spec files. Exit codes: 0 = all checks pass,
// 1 = a check failed (report says which), 2 = the spec or a budget refused
// the run before any check could be evaluated.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "snell/axioms.hpp"
#include "snell/engine.hpp"
#include "snell/generate.hpp"
#include "snell/io.hpp"
#include "snell/multi.hpp"
#include "snell/numeric.hpp"
#include "snell/oracle.hpp"
#include "snell/single.hpp"
#include "snell/stopping.hpp"
#include "snell/tree.hpp"

#include "commands.hpp"

namespace snell::cli {
namespace {

using io::json;
using io::ProblemSpec;
using io::RunReport;

struct Options {
    std::string spec_path;
    std::string out;
    std::string format = "json";
    std::string mode; // empty = take the spec's word
    std::int64_t seed = -1;
    bool count_only = false;
};

ProblemSpec load_spec(const Options& opt) {
    ProblemSpec spec = ProblemSpec::from_file(opt.spec_path);
    if (opt.mode == "exact") {
        spec.exact = true;
    } else if (opt.mode == "float") {
        if (!(spec.tolerance > 0.0))
            io::spec_fail("mode.tolerance", "float mode needs a tolerance > 0");
        spec.exact = false;
    }
    if (opt.seed >= 0) {
        spec.seed = static_cast<std::uint64_t>(opt.seed);
        spec.has_seed = true;
    }
    return spec;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int emit(const RunReport& rep, const Options& opt) {
    const std::string body =
        opt.format == "csv" ? rep.to_csv() : rep.to_json().dump(2) + "\n";
    if (opt.out.empty()) {
        std::fputs(body.c_str(), stdout);
    } else {
        std::ofstream file(opt.out, std::ios::binary);
        require(file.good(), ErrorCode::SpecError,
                "cannot write report file '" + opt.out + "'");
        file << body;
        std::printf("%s %s: report written to %s\n", rep.command.c_str(),
                    rep.instance_digest.c_str(), opt.out.c_str());
        for (const auto& c : rep.checks)
            std::printf("  %s %s\n", c.pass ? "pass" : "FAIL", c.name.c_str());
    }
    return rep.all_pass() ? 0 : 1;
}

RunReport make_report(const char* command, const ProblemSpec& spec) {
    RunReport rep;
    rep.command = command;
    rep.instance_digest = spec.digest();
    rep.mode = spec.exact ? "exact" : "float";
    return rep;
}

// -------------------------------------------------------- shared fragments --

template <class Scalar>
void add_certificate_checks(RunReport& rep, const OptimalityCertificate& cert) {
    rep.add_check("rule-attains-value-per-atom", cert.per_atom_attained,
                  {{"worst_gap", cert.attained_worst_gap}});
    rep.add_check("rule-stops-on-contact", cert.stops_on_contact,
                  {{"worst_gap", cert.contact_worst_gap}});
    rep.add_check("rule-preserves-value", cert.value_preserved,
                  {{"worst_gap", cert.preserved_worst_gap}});
    rep.add_check("rule-attains-value-overall", cert.overall_attained,
                  {{"lhs", cert.overall_lhs}, {"rhs", cert.overall_rhs}});
    rep.add_check("optimality-faces-consistent", cert.consistent(),
                  {{"per_atom", cert.per_atom_attained},
                   {"contact", cert.stops_on_contact},
                   {"preserved", cert.value_preserved},
                   {"overall", cert.overall_attained}});
}

template <class Scalar>
json lambda_table(const LambdaReport<Scalar>& lam) {
    json rows = json::array();
    for (const auto& row : lam.rows)
        rows.push_back(json{{"lambda", io::format_scalar(row.lambda)},
                            {"rule", io::rule_json(row.rule)},
                            {"attained", io::format_scalar(row.attained)},
                            {"lower_bound", io::format_scalar(row.lower_bound)},
                            {"matches_minimal", row.matches_minimal}});
    return rows;
}

template <class Scalar>
void add_lambda_checks(RunReport& rep, const LambdaReport<Scalar>& lam) {
    rep.add_check("scaled-rule-lower-bound", lam.bounds_hold,
                  {{"base", io::format_scalar(lam.base)}});
    rep.add_check("scaled-rule-preserves-value", lam.preserved);
    rep.add_check("scaled-rules-monotone", lam.monotone);
    rep.add_check("scaled-rules-stop-early", lam.ordered);
    rep.add_check("scaled-rule-threshold-recovery", lam.recovered,
                  {{"threshold", io::format_scalar(lam.threshold)}});
}

// ------------------------------------------------------------ solve-single --

template <class Scalar>
RunReport run_solve_single(const ProblemSpec& spec) {
    RunReport rep = make_report("solve-single", spec);
    const auto t0 = std::chrono::steady_clock::now();
    if (io::reward_arity(spec) != 1)
        io::spec_fail("reward.kind", "solve-single needs a single-stop reward");
    io::BuiltTree<Scalar> built = io::build_tree<Scalar>(spec);
    const FiltrationTree& tree = built.tree;
    Engine<Scalar> engine = io::build_engine<Scalar>(spec, tree);
    NodeProcess<Scalar> reward = io::build_base_values<Scalar>(spec, tree, built.prices);

    SnellSolution<Scalar> sol = snell(engine, tree, reward);
    if constexpr (!scalar_traits<Scalar>::exact) sol.cmp.rel_tol = spec.tolerance;
    StoppingRule tau = minimal_optimal(sol);
    OptimalityCertificate cert =
        check_optimality(sol, StoppingRule::stop_at(tree, tree.root()), tau);
    LambdaReport<Scalar> lam = eps_optimality_report(sol, spec.grid<Scalar>());

    rep.summary["value_root"] = io::format_scalar(sol.root_value());
    rep.summary["tau_star"] = io::rule_json(tau);
    rep.summary["lambda_threshold"] = io::format_scalar(lam.threshold);
    rep.summary["lambda_table"] = lambda_table(lam);
    add_certificate_checks<Scalar>(rep, cert);
    add_lambda_checks(rep, lam);
    rep.elapsed_seconds = seconds_since(t0);
    return rep;
}

// ------------------------------------------------------------- solve-multi --

template <class Scalar>
void add_multi_checks(RunReport& rep, const Engine<Scalar>& engine, const FiltrationTree& tree,
                      const DReward<Scalar>& reward, const MultiSolution<Scalar>& sol) {
    const Scalar& value = sol.value.at(sol.from);
    const Scalar attained = evaluate_vector(engine, tree, reward, sol.optimal, sol.from);
    rep.add_check("vector-attains-value", sol.cmp.eq(attained, value),
                  {{"attained", io::format_scalar(attained)},
                   {"value", io::format_scalar(value)}});
    SnellSolution<Scalar> reduced = snell(engine, tree, sol.reduced, sol.from);
    rep.add_check("one-shot-reduction-matches", sol.cmp.eq(reduced.root_value(), value),
                  {{"reduced", io::format_scalar(reduced.root_value())},
                   {"value", io::format_scalar(value)}});
    bool earliest_ok = true;
    json bad = json::array();
    for (int leaf : tree.leaves_under(sol.from)) {
        std::vector<int> times = stop_times_at_leaf(tree, sol.optimal, leaf, sol.from);
        const int earliest = *std::min_element(times.begin(), times.end());
        if (earliest != stop_time(tree, sol.theta, leaf)) {
            earliest_ok = false;
            bad.push_back(leaf);
        }
    }
    rep.add_check("earliest-stop-is-theta", earliest_ok, {{"bad_leaves", bad}});
}

template <class Scalar>
RunReport run_solve_multi(const ProblemSpec& spec) {
    RunReport rep = make_report("solve-multi", spec);
    const auto t0 = std::chrono::steady_clock::now();
    if (io::reward_arity(spec) < 2)
        io::spec_fail("reward.d", "solve-multi needs a reward with d >= 2");
    io::BuiltTree<Scalar> built = io::build_tree<Scalar>(spec);
    const FiltrationTree& tree = built.tree;
    Engine<Scalar> engine = io::build_engine<Scalar>(spec, tree);
    DReward<Scalar> reward = io::build_dreward<Scalar>(spec, tree, built.prices);

    MultiSolution<Scalar> sol =
        solve_d(engine, tree, reward, tree.root(),
                static_cast<std::uint64_t>(spec.budgets.solve));
    if constexpr (!scalar_traits<Scalar>::exact) sol.cmp.rel_tol = spec.tolerance;

    rep.summary["value_root"] = io::format_scalar(sol.value.at(sol.from));
    json vec = json::array();
    for (const auto& rule : sol.optimal.rules) vec.push_back(io::rule_json(rule));
    rep.summary["vector"] = vec;
    rep.summary["theta"] = io::rule_json(sol.theta);
    json witness = json::object();
    for (const auto& [node, slot] : sol.witness) witness[std::to_string(node)] = slot;
    rep.summary["witness_slots"] = witness;
    json coords = json::array();
    for (const auto& cv : sol.coordinate_values) coords.push_back(io::format_scalar(cv.at(sol.from)));
    rep.summary["coordinate_values_at_root"] = coords;

    add_multi_checks(rep, engine, tree, reward, sol);
    rep.elapsed_seconds = seconds_since(t0);
    return rep;
}

// ------------------------------------------------------------------ verify --

template <class Scalar>
RunReport run_verify(const ProblemSpec& spec) {
    RunReport rep = make_report("verify", spec);
    const auto t0 = std::chrono::steady_clock::now();
    if (!spec.has_seed) io::spec_fail("seed", "verify runs randomized checks and needs a seed");
    io::BuiltTree<Scalar> built = io::build_tree<Scalar>(spec);
    const FiltrationTree& tree = built.tree;
    Engine<Scalar> engine = io::build_engine<Scalar>(spec, tree);

    AxiomReport ax = axiom_check(engine, tree, 200, spec.seed);
    for (const auto& entry : ax.entries)
        rep.add_check("law-" + entry.name, entry.pass(),
                      {{"samples", entry.samples},
                       {"violations", entry.violations},
                       {"worst", entry.worst}});
    AxiomReport dom = domination_check(engine, upper_envelope(engine, tree), tree, 200, spec.seed);
    rep.add_check("envelope-domination", dom.all_pass(),
                  {{"violations", dom.entries.front().violations},
                   {"worst", dom.entries.front().worst}});

    const int arity = io::reward_arity(spec);
    if (arity == 1) {
        NodeProcess<Scalar> reward = io::build_base_values<Scalar>(spec, tree, built.prices);
        SnellSolution<Scalar> sol = snell(engine, tree, reward);
        if constexpr (!scalar_traits<Scalar>::exact) sol.cmp.rel_tol = spec.tolerance;
        rep.summary["value_root"] = io::format_scalar(sol.root_value());

        SupermartingaleReport sm = supermartingale_check(sol, 25, spec.seed);
        rep.add_check("value-dominates-reward", sm.dominates);
        rep.add_check("recursion-tight", sm.recursion_tight);
        rep.add_check("optional-sampling", sm.optional_sampling, {{"pairs", sm.pairs}});
        rep.add_check("smallest-dominating-system", sm.minimal, {{"envelopes", sm.envelopes}});
        rep.add_check("enumerated-supremum", sm.enumerated_sup, {{"sup_checks", sm.sup_checks}});

        auto brute = brute_value_single(engine, tree, reward, tree.root(),
                                        static_cast<std::uint64_t>(spec.budgets.single_rules));
        rep.add_check("matches-exhaustive-search", sol.cmp.eq(brute.value, sol.root_value()),
                      {{"solver", io::format_scalar(sol.root_value())},
                       {"oracle", io::format_scalar(brute.value)},
                       {"optimal_rules", brute.optimal.size()}});

        StoppingRule tau = minimal_optimal(sol);
        OptimalityCertificate cert =
            check_optimality(sol, StoppingRule::stop_at(tree, tree.root()), tau);
        add_certificate_checks<Scalar>(rep, cert);
        add_lambda_checks(rep, eps_optimality_report(sol, spec.grid<Scalar>()));
    } else {
        DReward<Scalar> reward = io::build_dreward<Scalar>(spec, tree, built.prices);
        MultiSolution<Scalar> sol =
            solve_d(engine, tree, reward, tree.root(),
                    static_cast<std::uint64_t>(spec.budgets.solve));
        if constexpr (!scalar_traits<Scalar>::exact) sol.cmp.rel_tol = spec.tolerance;
        rep.summary["value_root"] = io::format_scalar(sol.value.at(sol.from));
        add_multi_checks(rep, engine, tree, reward, sol);
        auto brute = brute_value_d(engine, tree, reward, tree.root(),
                                   static_cast<std::uint64_t>(spec.budgets.multi_vectors));
        rep.add_check("matches-exhaustive-search",
                      sol.cmp.eq(brute.value, sol.value.at(sol.from)),
                      {{"solver", io::format_scalar(sol.value.at(sol.from))},
                       {"oracle", io::format_scalar(brute.value)}});
        rep.add_check("vector-order-minimal",
                      is_d_minimal(engine, tree, reward, sol, sol.from,
                                   static_cast<std::uint64_t>(spec.budgets.multi_vectors)));
    }
    rep.elapsed_seconds = seconds_since(t0);
    return rep;
}

// --------------------------------------------------------------- enumerate --

// Same saturation point as RuleEnumeration, so the comparison stays exact
// even when both sides overflow.
std::uint64_t census(const FiltrationTree& tree, int node) {
    if (tree.is_leaf(node)) return 1;
    std::uint64_t prod = 1;
    for (int c : tree.children(node)) prod = detail::sat_mul(prod, census(tree, c));
    return detail::sat_add(1, prod);
}

int run_enumerate(const ProblemSpec& spec, const Options& opt) {
    RunReport rep = make_report("enumerate", spec);
    const auto t0 = std::chrono::steady_clock::now();
    io::BuiltTree<Rational> built = io::build_tree<Rational>(spec);
    RuleEnumeration en(built.tree);
    if (opt.count_only) {
        std::printf("%llu\n", static_cast<unsigned long long>(en.count()));
        return 0;
    }
    const std::uint64_t expect = census(built.tree, built.tree.root());
    rep.summary["rule_count"] = en.count();
    rep.summary["num_nodes"] = built.tree.num_nodes();
    rep.summary["num_steps"] = built.tree.num_steps();
    rep.add_check("count-matches-recursion", en.count() == expect,
                  {{"enumerated", en.count()}, {"recursion", expect}});
    rep.elapsed_seconds = seconds_since(t0);
    return emit(rep, opt);
}

// ---------------------------------------------------------------- generate --

struct GenerateOptions {
    std::string kind = "single";
    std::string engine = "upper_prior";
    std::string reward = "additive";
    int depth = 3;
    int branching = 0;
    int d = 2;
    int delta = 1;
    std::int64_t seed = 0;
    std::string out;
};

json engine_to_json(const Engine<Rational>& engine, const FiltrationTree& tree) {
    json e = json::object();
    e["kind"] = engine.kind_name();
    switch (engine.kind()) {
    case Engine<Rational>::Kind::linear: {
        json rows = json::object();
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) continue;
            json row = json::array();
            const auto& r = engine.kernel().row(n);
            for (Eigen::Index i = 0; i < r.size(); ++i) row.push_back(to_string(r[i]));
            rows[std::to_string(n)] = row;
        }
        e["rows"] = rows;
        break;
    }
    case Engine<Rational>::Kind::upper_prior: {
        json menus = json::object();
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) continue;
            json menu = json::array();
            for (const auto& r : engine.priors().rows(n)) {
                json row = json::array();
                for (Eigen::Index i = 0; i < r.size(); ++i) row.push_back(to_string(r[i]));
                menu.push_back(row);
            }
            menus[std::to_string(n)] = menu;
        }
        e["menus"] = menus;
        break;
    }
    case Engine<Rational>::Kind::g_driver: {
        e["p"] = to_string(engine.kernel().row(tree.root())[0]);
        e["kappa"] = to_string(engine.kappa());
        e["dt"] = to_string(engine.dt());
        break;
    }
    }
    e["min_prob"] = to_string(engine.min_prob());
    return e;
}

int run_generate(const GenerateOptions& gen) {
    require(gen.seed >= 0, ErrorCode::SpecError, "--seed must be nonnegative");
    require(gen.kind == "single" || gen.kind == "multi", ErrorCode::SpecError,
            "--kind must be single or multi");
    EngineChoice choice;
    if (gen.engine == "linear") {
        choice = EngineChoice::linear;
    } else if (gen.engine == "upper_prior") {
        choice = EngineChoice::upper_prior;
    } else if (gen.engine == "g_driver") {
        require(gen.branching == 2, ErrorCode::SpecError,
                "--engine g_driver needs --branching 2 (binary trees only)");
        choice = EngineChoice::ambiguity;
    } else {
        fail(ErrorCode::SpecError, "--engine must be linear, upper_prior, or g_driver");
    }
    Instance<Rational> inst = make_instance<Rational>(static_cast<std::uint64_t>(gen.seed),
                                                      gen.depth, gen.branching, choice);
    require(static_cast<std::int64_t>(inst.tree.num_nodes()) <= 1000000,
            ErrorCode::BudgetExceeded, "generated tree exceeds the node budget");

    json spec = json::object();
    json tree = json::object();
    tree["kind"] = "explicit";
    tree["num_steps"] = inst.tree.num_steps();
    json nodes = json::array();
    for (int n = 0; n < inst.tree.num_nodes(); ++n) {
        json ns = json::object();
        ns["id"] = n;
        ns["t"] = inst.tree.time(n);
        if (n != inst.tree.root()) ns["parent"] = inst.tree.parent(n);
        if (!inst.tree.is_leaf(n)) ns["children"] = inst.tree.children(n);
        nodes.push_back(ns);
    }
    tree["nodes"] = nodes;
    spec["tree"] = tree;
    spec["engine"] = engine_to_json(inst.engine, inst.tree);

    json reward = json::object();
    if (gen.kind == "single") {
        reward["kind"] = "single";
    } else {
        require(gen.reward == "additive" || gen.reward == "refraction_swing",
                ErrorCode::SpecError, "--reward must be additive or refraction_swing");
        reward["kind"] = gen.reward;
        reward["d"] = gen.d;
        if (gen.reward == "refraction_swing") reward["delta"] = gen.delta;
    }
    json values = json::array();
    for (int n = 0; n < inst.tree.num_nodes(); ++n) values.push_back(to_string(inst.reward.at(n)));
    reward["values"] = values;
    spec["reward"] = reward;

    spec["mode"] = "exact";
    spec["seed"] = gen.seed;
    spec["lambda_grid"] = json::array({"1/2", "9/10", "99/100", "999/1000"});

    const std::string body = spec.dump(2) + "\n";
    if (gen.out.empty()) {
        std::fputs(body.c_str(), stdout);
    } else {
        std::ofstream file(gen.out, std::ios::binary);
        require(file.good(), ErrorCode::SpecError, "cannot write spec file '" + gen.out + "'");
        file << body;
        std::printf("generate: wrote %s (%d nodes, digest %s)\n", gen.out.c_str(),
                    inst.tree.num_nodes(), io::digest_hex(spec.dump()).c_str());
    }
    return 0;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"optimal single and multiple stopping on finite trees under "
                 "nonlinear expectations"};
    app.require_subcommand(1);

    Options opt;
    GenerateOptions gen;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--spec", opt.spec_path, "problem spec JSON file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--mode", opt.mode, "override the spec's arithmetic mode")
            ->check(CLI::IsMember({"exact", "float"}));
        sub->add_option("--seed", opt.seed, "override the spec's seed");
        sub->add_option("--out", opt.out, "write the report to this file");
        sub->add_option("--format", opt.format, "report format")
            ->check(CLI::IsMember({"json", "csv"}));
    };

    CLI::App* solve_single =
        app.add_subcommand("solve-single", "solve one optimal stopping problem");
    add_common(solve_single);
    CLI::App* solve_multi =
        app.add_subcommand("solve-multi", "solve a d-fold optimal stopping problem");
    add_common(solve_multi);
    CLI::App* verify = app.add_subcommand(
        "verify", "run the full property suite against an instance");
    add_common(verify);
    CLI::App* enumerate_cmd =
        app.add_subcommand("enumerate", "count or check the stopping rules of a tree");
    add_common(enumerate_cmd);
    enumerate_cmd->add_flag("--count-only", opt.count_only,
                            "print only the number of canonical rules");

    CLI::App* generate = app.add_subcommand("generate", "emit a seeded random problem spec");
    generate->add_option("--kind", gen.kind, "single or multi")
        ->check(CLI::IsMember({"single", "multi"}));
    generate->add_option("--depth", gen.depth, "tree depth")->check(CLI::PositiveNumber);
    generate->add_option("--branching", gen.branching, "2, 3, or 0 for random 2-3")
        ->check(CLI::IsMember({0, 2, 3}));
    generate->add_option("--d", gen.d, "number of stops for multi rewards")
        ->check(CLI::PositiveNumber);
    generate->add_option("--delta", gen.delta, "refraction gap")->check(CLI::NonNegativeNumber);
    generate->add_option("--engine", gen.engine, "linear, upper_prior, or g_driver")
        ->check(CLI::IsMember({"linear", "upper_prior", "g_driver"}));
    generate->add_option("--reward", gen.reward, "additive or refraction_swing (multi only)")
        ->check(CLI::IsMember({"additive", "refraction_swing"}));
    generate->add_option("--seed", gen.seed, "generator seed")->required();
    generate->add_option("--out", gen.out, "write the spec to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (generate->parsed()) return run_generate(gen);
        ProblemSpec spec = load_spec(opt);
        if (enumerate_cmd->parsed()) return run_enumerate(spec, opt);
        RunReport rep;
        if (solve_single->parsed()) {
            rep = spec.exact ? run_solve_single<Rational>(spec) : run_solve_single<double>(spec);
        } else if (solve_multi->parsed()) {
            rep = spec.exact ? run_solve_multi<Rational>(spec) : run_solve_multi<double>(spec);
        } else {
            rep = spec.exact ? run_verify<Rational>(spec) : run_verify<double>(spec);
        }
        return emit(rep, opt);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

} // namespace snell::cli
