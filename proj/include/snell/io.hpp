// File formats and machine-readable reports.
//
// A problem spec is a JSON object with sections:
//   tree    {"kind":"explicit","num_steps":N,"nodes":[{"id","t","parent","children"},...]}
//           {"kind":"lattice","num_steps":N,"s0":"100","up":"6/5","down":"5/6"}
//   engine  {"kind":"linear","rows":{"<node>":["1/2","1/2"],...}}
//           {"kind":"upper_prior","menus":{"<node>":[["1/2","1/2"],["9/10","1/10"]],...}}
//           {"kind":"g_driver","p":"1/2","kappa":"1/5","dt":"1"}
//           all engine sections accept an optional "min_prob"
//   reward  {"kind":"single","values":[...]}            (one value per node id)
//           {"kind":"single","payoff":"put","strike":"100"}   (lattice trees only)
//           {"kind":"additive","d":2,"values":[...]}
//           {"kind":"refraction_swing","d":2,"delta":1,"values":[...]}
//           {"kind":"table","d":2,"entries":[{"nodes":[0,1],"value":"5"},...]}
//   mode    "exact" | {"kind":"float","tolerance":1e-9}      (default exact)
//   seed    nonnegative integer (required by randomized checks)
//   budgets {"nodes":...,"single_rules":...,"multi_vectors":...,"solve":...}
//   lambda_grid ["1/2","9/10","99/100","999/1000"]
//
// Exact mode refuses decimal JSON literals inside numeric fields (a binary
// double is not the decimal the author wrote); write numbers as strings
// ("1/3", "0.25") or integers. Errors carry the dotted path of the offending
// field. Reports serialize deterministically; wall-clock data lives under an
// isolated "timings" key so byte comparisons can drop it.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snell/engine.hpp"
#include "snell/errors.hpp"
#include "snell/multi.hpp"
#include "snell/numeric.hpp"
#include "snell/process.hpp"
#include "snell/stopping.hpp"
#include "snell/tree.hpp"

namespace snell::io {

using json = nlohmann::ordered_json;

[[noreturn]] inline void spec_fail(const std::string& path, const std::string& msg) {
    fail(ErrorCode::SpecError, path.empty() ? msg : path + ": " + msg);
}

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline const json& need(const json& j, const std::string& base, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) spec_fail(base, "missing required field '" + key + "'");
    return j.at(key);
}

inline int need_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) spec_fail(path, "expected an integer");
    return j.get<int>();
}

inline std::int64_t need_int64(const json& j, const std::string& path) {
    if (!j.is_number_integer()) spec_fail(path, "expected an integer");
    return j.get<std::int64_t>();
}

// ----------------------------------------------------------------- scalars --

template <class Scalar>
Scalar parse_scalar(const json& v, const std::string& path) {
    try {
        if (v.is_string()) {
            Rational r = parse_rational(v.get<std::string>());
            if constexpr (scalar_traits<Scalar>::exact) {
                return r;
            } else {
                return to_double(r);
            }
        }
        if (v.is_number_integer()) return Scalar(v.get<std::int64_t>());
        if (v.is_number_float()) {
            if constexpr (scalar_traits<Scalar>::exact) {
                spec_fail(path, "decimal literal is not exact; write it as a string");
            } else {
                return Scalar(v.get<double>());
            }
        }
    } catch (const Error& e) {
        spec_fail(path, e.what());
    }
    spec_fail(path, "expected a number");
}

inline std::string format_scalar(const Rational& x) { return to_string(x); }

inline std::string format_scalar(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// ------------------------------------------------------------------ digest --

// 64-bit FNV-1a over the canonical dump of the spec.
inline std::string digest_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ------------------------------------------------------------ problem spec --

struct Budgets {
    std::int64_t nodes = 1000000;
    std::int64_t single_rules = 10000;
    std::int64_t multi_vectors = 100000;
    std::int64_t solve = 2000000;
};

struct ProblemSpec {
    json raw;
    bool exact = true;
    double tolerance = 1e-9;
    bool has_seed = false;
    std::uint64_t seed = 0;
    Budgets budgets;
    std::vector<std::string> lambda_grid{"1/2", "9/10", "99/100", "999/1000"};

    static ProblemSpec parse(json j) {
        if (!j.is_object()) spec_fail("", "spec must be a JSON object");
        ProblemSpec s;
        s.raw = std::move(j);
        if (s.raw.contains("mode")) {
            const json& m = s.raw.at("mode");
            std::string kind;
            if (m.is_string()) {
                kind = m.get<std::string>();
            } else if (m.is_object()) {
                kind = need(m, "mode", "kind").is_string()
                           ? m.at("kind").get<std::string>()
                           : (spec_fail("mode.kind", "expected a string"), "");
                if (m.contains("tolerance")) {
                    const json& t = m.at("tolerance");
                    if (!t.is_number()) spec_fail("mode.tolerance", "expected a number");
                    s.tolerance = t.get<double>();
                }
            } else {
                spec_fail("mode", "expected \"exact\", \"float\", or an object");
            }
            if (kind == "exact") {
                s.exact = true;
            } else if (kind == "float") {
                s.exact = false;
                if (!(s.tolerance > 0.0))
                    spec_fail("mode.tolerance", "float mode needs a tolerance > 0");
            } else {
                spec_fail("mode", "unknown mode '" + kind + "'");
            }
        }
        if (s.raw.contains("seed")) {
            const json& v = s.raw.at("seed");
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                spec_fail("seed", "expected a nonnegative integer");
            s.seed = v.get<std::uint64_t>();
            s.has_seed = true;
        }
        if (s.raw.contains("budgets")) {
            const json& b = s.raw.at("budgets");
            if (!b.is_object()) spec_fail("budgets", "expected an object");
            auto take = [&](const char* key, std::int64_t& out) {
                if (!b.contains(key)) return;
                out = need_int64(b.at(key), join_path("budgets", key));
                if (out <= 0) spec_fail(join_path("budgets", key), "must be positive");
            };
            take("nodes", s.budgets.nodes);
            take("single_rules", s.budgets.single_rules);
            take("multi_vectors", s.budgets.multi_vectors);
            take("solve", s.budgets.solve);
        }
        if (s.raw.contains("lambda_grid")) {
            const json& g = s.raw.at("lambda_grid");
            if (!g.is_array() || g.empty()) spec_fail("lambda_grid", "expected a nonempty array");
            s.lambda_grid.clear();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const json& v = g[i];
                const std::string path = "lambda_grid[" + std::to_string(i) + "]";
                if (v.is_string()) {
                    s.lambda_grid.push_back(v.get<std::string>());
                } else if (v.is_number()) {
                    s.lambda_grid.push_back(v.dump());
                } else {
                    spec_fail(path, "expected a number");
                }
            }
        }
        return s;
    }

    static ProblemSpec from_file(const std::string& file) {
        std::ifstream in(file);
        if (!in) spec_fail("", "cannot open spec file '" + file + "'");
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            spec_fail("", "invalid JSON in '" + file + "': " + e.what());
        }
        return parse(std::move(j));
    }

    const json& section(const char* key) const { return need(raw, "", key); }
    bool has(const char* key) const { return raw.is_object() && raw.contains(key); }
    std::string digest() const { return digest_hex(raw.dump()); }

    template <class Scalar>
    std::vector<Scalar> grid() const {
        std::vector<Scalar> out;
        for (std::size_t i = 0; i < lambda_grid.size(); ++i)
            out.push_back(
                parse_scalar<Scalar>(json(lambda_grid[i]), "lambda_grid[" + std::to_string(i) + "]"));
        return out;
    }
};

// ------------------------------------------------------------------- trees --

template <class Scalar>
struct BuiltTree {
    FiltrationTree tree;
    std::optional<NodeProcess<Scalar>> prices; // present for lattice trees
};

template <class Scalar>
BuiltTree<Scalar> build_tree(const ProblemSpec& spec) {
    const json& t = spec.section("tree");
    if (!t.is_object()) spec_fail("tree", "expected an object");
    const std::string kind = need(t, "tree", "kind").is_string()
                                 ? t.at("kind").get<std::string>()
                                 : (spec_fail("tree.kind", "expected a string"), "");
    if (kind == "lattice") {
        LatticeSpec<Scalar> lat;
        lat.num_steps = need_int(need(t, "tree", "num_steps"), "tree.num_steps");
        lat.s0 = parse_scalar<Scalar>(need(t, "tree", "s0"), "tree.s0");
        lat.up = parse_scalar<Scalar>(need(t, "tree", "up"), "tree.up");
        lat.down = parse_scalar<Scalar>(need(t, "tree", "down"), "tree.down");
        auto [tree, prices] = build_binomial(lat, spec.budgets.nodes);
        return {std::move(tree), std::move(prices)};
    }
    if (kind != "explicit") spec_fail("tree.kind", "unknown tree kind '" + kind + "'");
    const int num_steps = need_int(need(t, "tree", "num_steps"), "tree.num_steps");
    const json& nodes = need(t, "tree", "nodes");
    if (!nodes.is_array()) spec_fail("tree.nodes", "expected an array");
    std::vector<NodeSpec> specs;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string path = "tree.nodes[" + std::to_string(i) + "]";
        const json& n = nodes[i];
        if (!n.is_object()) spec_fail(path, "expected an object");
        NodeSpec ns;
        ns.id = need_int(need(n, path, "id"), path + ".id");
        ns.t = need_int(need(n, path, "t"), path + ".t");
        if (n.contains("parent")) ns.parent = need_int(n.at("parent"), path + ".parent");
        if (n.contains("children")) {
            const json& c = n.at("children");
            if (!c.is_array()) spec_fail(path + ".children", "expected an array");
            for (std::size_t k = 0; k < c.size(); ++k)
                ns.children.push_back(
                    need_int(c[k], path + ".children[" + std::to_string(k) + "]"));
        }
        specs.push_back(std::move(ns));
    }
    if (static_cast<std::int64_t>(specs.size()) > spec.budgets.nodes)
        fail(ErrorCode::BudgetExceeded, "tree.nodes: " + std::to_string(specs.size()) +
                                            " nodes exceed the node budget");
    return {FiltrationTree::build(num_steps, specs), std::nullopt};
}

// ----------------------------------------------------------------- engines --

template <class Scalar>
RowVector<Scalar> parse_row(const json& row, const std::string& path) {
    if (!row.is_array() || row.empty()) spec_fail(path, "expected a nonempty array");
    RowVector<Scalar> out(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i)
        out[static_cast<Eigen::Index>(i)] =
            parse_scalar<Scalar>(row[i], path + "[" + std::to_string(i) + "]");
    return out;
}

template <class Scalar>
Engine<Scalar> build_engine(const ProblemSpec& spec, const FiltrationTree& tree) {
    const json& e = spec.section("engine");
    if (!e.is_object()) spec_fail("engine", "expected an object");
    const std::string kind = need(e, "engine", "kind").is_string()
                                 ? e.at("kind").get<std::string>()
                                 : (spec_fail("engine.kind", "expected a string"), "");
    Scalar min_prob = default_min_prob<Scalar>();
    if (e.contains("min_prob")) min_prob = parse_scalar<Scalar>(e.at("min_prob"), "engine.min_prob");

    if (kind == "linear") {
        const json& rows = need(e, "engine", "rows");
        if (!rows.is_object()) spec_fail("engine.rows", "expected an object keyed by node id");
        std::vector<RowVector<Scalar>> parsed(static_cast<std::size_t>(tree.num_nodes()));
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) continue;
            const std::string key = std::to_string(n);
            if (!rows.contains(key)) spec_fail("engine.rows", "missing row for node " + key);
            parsed[static_cast<std::size_t>(n)] =
                parse_row<Scalar>(rows.at(key), "engine.rows." + key);
        }
        return Engine<Scalar>::linear(
            TransitionKernel<Scalar>::build(tree, std::move(parsed), std::move(min_prob)));
    }
    if (kind == "upper_prior") {
        const json& menus = need(e, "engine", "menus");
        if (!menus.is_object()) spec_fail("engine.menus", "expected an object keyed by node id");
        std::vector<std::vector<RowVector<Scalar>>> parsed(
            static_cast<std::size_t>(tree.num_nodes()));
        for (int n = 0; n < tree.num_nodes(); ++n) {
            if (tree.is_leaf(n)) continue;
            const std::string key = std::to_string(n);
            if (!menus.contains(key)) spec_fail("engine.menus", "missing menu for node " + key);
            const json& menu = menus.at(key);
            if (!menu.is_array() || menu.empty())
                spec_fail("engine.menus." + key, "expected a nonempty array of rows");
            for (std::size_t i = 0; i < menu.size(); ++i)
                parsed[static_cast<std::size_t>(n)].push_back(parse_row<Scalar>(
                    menu[i], "engine.menus." + key + "[" + std::to_string(i) + "]"));
        }
        return Engine<Scalar>::upper_prior(
            PriorSet<Scalar>::build(tree, std::move(parsed), std::move(min_prob)));
    }
    if (kind == "g_driver") {
        Scalar p = parse_scalar<Scalar>(need(e, "engine", "p"), "engine.p");
        Scalar kappa = parse_scalar<Scalar>(need(e, "engine", "kappa"), "engine.kappa");
        Scalar dt = parse_scalar<Scalar>(need(e, "engine", "dt"), "engine.dt");
        return Engine<Scalar>::g_driver(
            tree, TransitionKernel<Scalar>::binomial(tree, p, std::move(min_prob)),
            std::move(kappa), std::move(dt));
    }
    spec_fail("engine.kind", "unknown engine kind '" + kind + "'");
}

// ----------------------------------------------------------------- rewards --

inline int reward_arity(const ProblemSpec& spec) {
    const json& r = spec.section("reward");
    if (!r.is_object()) spec_fail("reward", "expected an object");
    const std::string kind = need(r, "reward", "kind").is_string()
                                 ? r.at("kind").get<std::string>()
                                 : (spec_fail("reward.kind", "expected a string"), "");
    if (kind == "single") return 1;
    if (kind != "additive" && kind != "refraction_swing" && kind != "table")
        spec_fail("reward.kind", "unknown reward kind '" + kind + "'");
    const int d = need_int(need(r, "reward", "d"), "reward.d");
    if (d < 1) spec_fail("reward.d", "must be at least 1");
    return d;
}

// Per-node payoff values from either an explicit array or a strike payoff on
// lattice prices.
template <class Scalar>
NodeProcess<Scalar> build_base_values(const ProblemSpec& spec, const FiltrationTree& tree,
                                      const std::optional<NodeProcess<Scalar>>& prices) {
    const json& r = spec.section("reward");
    if (r.contains("values")) {
        const json& vals = r.at("values");
        if (!vals.is_array()) spec_fail("reward.values", "expected an array");
        if (static_cast<int>(vals.size()) != tree.num_nodes())
            spec_fail("reward.values", "expected " + std::to_string(tree.num_nodes()) +
                                           " entries, got " + std::to_string(vals.size()));
        NodeProcess<Scalar> out(tree.num_nodes());
        for (int n = 0; n < tree.num_nodes(); ++n)
            out.set(n, parse_scalar<Scalar>(vals[static_cast<std::size_t>(n)],
                                            "reward.values[" + std::to_string(n) + "]"));
        require_reward(tree, out);
        return out;
    }
    if (r.contains("payoff")) {
        if (!prices)
            spec_fail("reward.payoff", "strike payoffs need a lattice tree with prices");
        const std::string payoff = r.at("payoff").is_string()
                                       ? r.at("payoff").get<std::string>()
                                       : (spec_fail("reward.payoff", "expected a string"), "");
        const Scalar strike = parse_scalar<Scalar>(need(r, "reward", "strike"), "reward.strike");
        NodeProcess<Scalar> out(tree.num_nodes());
        for (int n = 0; n < tree.num_nodes(); ++n) {
            const Scalar& s = prices->at(n);
            Scalar gain = payoff == "put" ? Scalar(strike - s)
                          : payoff == "call"
                              ? Scalar(s - strike)
                              : (spec_fail("reward.payoff", "unknown payoff '" + payoff + "'"),
                                 Scalar(0));
            out.set(n, gain > Scalar(0) ? gain : Scalar(0));
        }
        return out;
    }
    spec_fail("reward", "needs either 'values' or a lattice 'payoff'");
}

template <class Scalar>
DReward<Scalar> build_dreward(const ProblemSpec& spec, const FiltrationTree& tree,
                              const std::optional<NodeProcess<Scalar>>& prices) {
    const json& r = spec.section("reward");
    const std::string kind = r.at("kind").get<std::string>();
    const int d = reward_arity(spec);
    if (kind == "additive")
        return DReward<Scalar>::additive(tree, build_base_values(spec, tree, prices), d);
    if (kind == "refraction_swing") {
        const int delta = need_int(need(r, "reward", "delta"), "reward.delta");
        return DReward<Scalar>::refraction_swing(tree, build_base_values(spec, tree, prices), d,
                                                 delta);
    }
    if (kind == "table") {
        const json& entries = need(r, "reward", "entries");
        if (!entries.is_array()) spec_fail("reward.entries", "expected an array");
        std::map<std::vector<int>, Scalar> table;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const std::string path = "reward.entries[" + std::to_string(i) + "]";
            const json& ent = entries[i];
            if (!ent.is_object()) spec_fail(path, "expected an object");
            const json& nodes = need(ent, path, "nodes");
            if (!nodes.is_array()) spec_fail(path + ".nodes", "expected an array");
            std::vector<int> key;
            for (std::size_t k = 0; k < nodes.size(); ++k)
                key.push_back(need_int(nodes[k], path + ".nodes[" + std::to_string(k) + "]"));
            table[std::move(key)] =
                parse_scalar<Scalar>(need(ent, path, "value"), path + ".value");
        }
        return DReward<Scalar>::table(tree, d, std::move(table));
    }
    spec_fail("reward.kind", "'" + kind + "' is not a multi-stop reward");
}

// ----------------------------------------------------------------- reports --

inline json rule_json(const StoppingRule& rule) { return json(rule.flagged_nodes()); }

struct CheckResult {
    std::string name;
    bool pass = false;
    json witness = json::object();
};

struct RunReport {
    int schema_version = 1;
    std::string command;
    std::string instance_digest;
    std::string mode;
    json summary = json::object();
    std::vector<CheckResult> checks;
    double elapsed_seconds = 0.0;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    void add_check(std::string name, bool pass, json witness = json::object()) {
        checks.push_back({std::move(name), pass, std::move(witness)});
    }

    json to_json() const {
        json j = json::object();
        j["schema_version"] = schema_version;
        j["command"] = command;
        j["instance_digest"] = instance_digest;
        j["mode"] = mode;
        j["summary"] = summary;
        json arr = json::array();
        for (const auto& c : checks)
            arr.push_back(json{{"name", c.name}, {"pass", c.pass}, {"witness", c.witness}});
        j["checks"] = arr;
        j["timings"] = json{{"elapsed_seconds", elapsed_seconds}};
        return j;
    }

    std::string to_csv() const {
        auto escape = [](const std::string& s) {
            std::string out = "\"";
            for (char c : s) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
            return out;
        };
        std::ostringstream os;
        os << "command,instance_digest,mode,check,pass,witness\n";
        for (const auto& c : checks)
            os << command << ',' << instance_digest << ',' << mode << ',' << c.name << ','
               << (c.pass ? "true" : "false") << ',' << escape(c.witness.dump()) << '\n';
        return os.str();
    }
};

} // namespace snell::io
