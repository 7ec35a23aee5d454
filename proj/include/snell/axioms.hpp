#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "engine.hpp"
#include "numeric.hpp"
#include "process.hpp"
#include "tree.hpp"

namespace snell {

// One executable law: how many seeded samples were drawn against it and how
// badly the worst one failed (0 when everything passed).
struct AxiomEntry {
    std::string name;
    int samples = 0;
    int violations = 0;
    double worst = 0.0;

    bool pass() const { return violations == 0; }
};

struct AxiomReport {
    std::string engine_kind;
    std::string mode;
    int num_samples = 0;
    std::uint64_t seed = 0;
    std::vector<AxiomEntry> entries;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass()) return false;
        return true;
    }

    const AxiomEntry& entry(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return e;
        fail(ErrorCode::SpecError, "no axiom entry named " + name);
    }
};

namespace detail {

template <class Scalar, class RNG>
Scalar random_amount(RNG& rng, std::uint64_t hundredths_bound) {
    const auto k = static_cast<long>(rng_below(rng, hundredths_bound));
    if constexpr (scalar_traits<Scalar>::exact) {
        return Scalar(Rational(k, 100));
    } else {
        return Scalar(static_cast<double>(k) / 100.0);
    }
}

// random nonnegative variable on the time-u slice, values in [0, 4]
template <class Scalar, class RNG>
NodeProcess<Scalar> random_slice(const FiltrationTree& tree, int u, RNG& rng) {
    NodeProcess<Scalar> out(tree.num_nodes());
    for (int n : tree.nodes_at(u)) out.set(n, random_amount<Scalar>(rng, 401));
    return out;
}

struct EntryTracker {
    AxiomEntry* entry;

    void sample() const { ++entry->samples; }
    void record(double violation) const {
        if (violation > 0.0) {
            ++entry->violations;
            if (violation > entry->worst) entry->worst = violation;
        }
    }
};

} // namespace detail

// Draws seeded random variables, times s <= t <= u, events in the time-t
// algebra, and constants, then tests every law the engine claims at every
// time-t atom:
//   monotonicity            xi <= eta pointwise forces E_t[xi] <= E_t[eta]
//   strict-monotonicity     xi <= eta, xi != eta somewhere, forces
//                           E_root[xi] < E_root[eta] (this is what the
//                           positivity floor on kernels buys)
//   time-consistency        E_s[E_t[xi]] = E_s[xi]
//   zero-one-law            E_t[xi * 1_A] = E_t[xi] * 1_A for A in F_t
//   translation-invariance  E_t[xi + eta] = E_t[xi] + eta for F_t-meas. eta
//   local-property          E_t[xi 1_A + eta 1_Ac] agrees with the pieces
//   constant-preserving     E_t[c] = c
// and, only for the max-over-priors engine (a max of linear maps):
//   sub-additivity          E_t[xi + eta] <= E_t[xi] + E_t[eta]
//   positive-homogeneity    E_t[lambda xi] = lambda E_t[xi], lambda >= 0
template <class Scalar>
AxiomReport axiom_check(const Engine<Scalar>& engine, const FiltrationTree& tree, int num_samples,
                        std::uint64_t seed) {
    require(num_samples >= 1, ErrorCode::SpecError, "need at least one sample");
    const bool sublinear_laws = engine.kind() == Engine<Scalar>::Kind::upper_prior;
    Comparator<Scalar> cmp;
    std::mt19937_64 rng(seed);

    AxiomReport rep;
    rep.engine_kind = engine.kind_name();
    rep.mode = scalar_traits<Scalar>::mode_name;
    rep.num_samples = num_samples;
    rep.seed = seed;
    rep.entries = {{"monotonicity", 0, 0, 0.0},
                   {"strict-monotonicity", 0, 0, 0.0},
                   {"time-consistency", 0, 0, 0.0},
                   {"zero-one-law", 0, 0, 0.0},
                   {"translation-invariance", 0, 0, 0.0},
                   {"local-property", 0, 0, 0.0},
                   {"constant-preserving", 0, 0, 0.0}};
    if (sublinear_laws) {
        rep.entries.push_back({"sub-additivity", 0, 0, 0.0});
        rep.entries.push_back({"positive-homogeneity", 0, 0, 0.0});
    }
    auto tracker = [&](const char* name) {
        for (auto& e : rep.entries)
            if (e.name == name) return detail::EntryTracker{&e};
        fail(ErrorCode::SpecError, "untracked axiom");
    };

    const int horizon = tree.num_steps();
    for (int s_i = 0; s_i < num_samples; ++s_i) {
        const int u = horizon == 0 ? 0 : 1 + static_cast<int>(rng_below(rng, horizon));
        const int t = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(u) + 1));
        const int s = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(t) + 1));

        NodeProcess<Scalar> xi = detail::random_slice<Scalar>(tree, u, rng);
        NodeProcess<Scalar> other = detail::random_slice<Scalar>(tree, u, rng);

        // eta = xi + nonnegative bump, nonzero at the first slice node
        NodeProcess<Scalar> eta(tree.num_nodes());
        bool bumped = false;
        for (int n : tree.nodes_at(u)) {
            Scalar extra = detail::random_amount<Scalar>(rng, 201);
            if (extra > Scalar(0)) bumped = true;
            eta.set(n, xi.at(n) + extra);
        }
        if (!bumped) {
            Scalar bump;
            if constexpr (scalar_traits<Scalar>::exact) {
                bump = Scalar(Rational(1, 100));
            } else {
                bump = Scalar(0.01);
            }
            const int n0 = tree.nodes_at(u).front();
            eta.set(n0, eta.at(n0) + bump);
        }

        std::vector<char> in_event(static_cast<std::size_t>(tree.num_nodes()), 0);
        for (int m : tree.nodes_at(t)) in_event[static_cast<std::size_t>(m)] = rng_below(rng, 2) == 0;
        auto event_holds = [&](int node_at_u) {
            return in_event[static_cast<std::size_t>(tree.ancestor_at(node_at_u, t))] != 0;
        };

        NodeProcess<Scalar> shift(tree.num_nodes()); // F_t-measurable addend
        for (int m : tree.nodes_at(t)) shift.set(m, detail::random_amount<Scalar>(rng, 201));
        const Scalar lambda = detail::random_amount<Scalar>(rng, 301);
        const Scalar constant = detail::random_amount<Scalar>(rng, 401);

        const NodeProcess<Scalar> mart_xi = martingale_process(engine, tree, xi, u);
        const NodeProcess<Scalar> mart_eta = martingale_process(engine, tree, eta, u);
        const NodeProcess<Scalar> mart_other = martingale_process(engine, tree, other, u);

        {
            auto tr = tracker("monotonicity");
            tr.sample();
            double worst = 0.0;
            for (int m : tree.nodes_at(t)) {
                double v = cmp.leq(mart_xi.at(m), mart_eta.at(m))
                               ? 0.0
                               : cmp.excess(mart_xi.at(m), mart_eta.at(m));
                if (v > worst) worst = v;
            }
            tr.record(worst);
        }
        {
            auto tr = tracker("strict-monotonicity");
            tr.sample();
            const int root = tree.root();
            tr.record(cmp.lt(mart_xi.at(root), mart_eta.at(root))
                          ? 0.0
                          : cmp.gap(mart_xi.at(root), mart_eta.at(root)) + 1e-30);
        }
        {
            auto tr = tracker("time-consistency");
            tr.sample();
            NodeProcess<Scalar> at_t(tree.num_nodes());
            for (int m : tree.nodes_at(t)) at_t.set(m, mart_xi.at(m));
            const NodeProcess<Scalar> recomposed = martingale_process(engine, tree, at_t, t);
            double worst = 0.0;
            for (int m : tree.nodes_at(s)) {
                if (!cmp.eq(recomposed.at(m), mart_xi.at(m))) {
                    double v = cmp.gap(recomposed.at(m), mart_xi.at(m));
                    if (v > worst) worst = v;
                }
            }
            tr.record(worst);
        }
        {
            auto tr = tracker("zero-one-law");
            tr.sample();
            NodeProcess<Scalar> masked(tree.num_nodes());
            for (int n : tree.nodes_at(u)) masked.set(n, event_holds(n) ? xi.at(n) : Scalar(0));
            const NodeProcess<Scalar> mart_masked = martingale_process(engine, tree, masked, u);
            double worst = 0.0;
            for (int m : tree.nodes_at(t)) {
                const Scalar want =
                    in_event[static_cast<std::size_t>(m)] ? mart_xi.at(m) : Scalar(0);
                if (!cmp.eq(mart_masked.at(m), want)) {
                    double v = cmp.gap(mart_masked.at(m), want);
                    if (v > worst) worst = v;
                }
            }
            tr.record(worst);
        }
        {
            auto tr = tracker("translation-invariance");
            tr.sample();
            NodeProcess<Scalar> shifted(tree.num_nodes());
            for (int n : tree.nodes_at(u))
                shifted.set(n, xi.at(n) + shift.at(tree.ancestor_at(n, t)));
            const NodeProcess<Scalar> mart_shifted = martingale_process(engine, tree, shifted, u);
            double worst = 0.0;
            for (int m : tree.nodes_at(t)) {
                const Scalar want = mart_xi.at(m) + shift.at(m);
                if (!cmp.eq(mart_shifted.at(m), want)) {
                    double v = cmp.gap(mart_shifted.at(m), want);
                    if (v > worst) worst = v;
                }
            }
            tr.record(worst);
        }
        {
            auto tr = tracker("local-property");
            tr.sample();
            NodeProcess<Scalar> glued(tree.num_nodes());
            for (int n : tree.nodes_at(u)) glued.set(n, event_holds(n) ? xi.at(n) : other.at(n));
            const NodeProcess<Scalar> mart_glued = martingale_process(engine, tree, glued, u);
            double worst = 0.0;
            for (int m : tree.nodes_at(t)) {
                const Scalar& want =
                    in_event[static_cast<std::size_t>(m)] ? mart_xi.at(m) : mart_other.at(m);
                if (!cmp.eq(mart_glued.at(m), want)) {
                    double v = cmp.gap(mart_glued.at(m), want);
                    if (v > worst) worst = v;
                }
            }
            tr.record(worst);
        }
        {
            auto tr = tracker("constant-preserving");
            tr.sample();
            NodeProcess<Scalar> level(tree.num_nodes());
            for (int n : tree.nodes_at(u)) level.set(n, constant);
            const NodeProcess<Scalar> mart_level = martingale_process(engine, tree, level, u);
            double worst = 0.0;
            for (int m : tree.nodes_at(t)) {
                if (!cmp.eq(mart_level.at(m), constant)) {
                    double v = cmp.gap(mart_level.at(m), constant);
                    if (v > worst) worst = v;
                }
            }
            tr.record(worst);
        }
        if (sublinear_laws) {
            {
                auto tr = tracker("sub-additivity");
                tr.sample();
                NodeProcess<Scalar> sum(tree.num_nodes());
                for (int n : tree.nodes_at(u)) sum.set(n, xi.at(n) + other.at(n));
                const NodeProcess<Scalar> mart_sum = martingale_process(engine, tree, sum, u);
                double worst = 0.0;
                for (int m : tree.nodes_at(t)) {
                    const Scalar bound = mart_xi.at(m) + mart_other.at(m);
                    if (!cmp.leq(mart_sum.at(m), bound)) {
                        double v = cmp.excess(mart_sum.at(m), bound);
                        if (v > worst) worst = v;
                    }
                }
                tr.record(worst);
            }
            {
                auto tr = tracker("positive-homogeneity");
                tr.sample();
                NodeProcess<Scalar> scaled(tree.num_nodes());
                for (int n : tree.nodes_at(u)) scaled.set(n, lambda * xi.at(n));
                const NodeProcess<Scalar> mart_scaled = martingale_process(engine, tree, scaled, u);
                double worst = 0.0;
                for (int m : tree.nodes_at(t)) {
                    const Scalar want = lambda * mart_xi.at(m);
                    if (!cmp.eq(mart_scaled.at(m), want)) {
                        double v = cmp.gap(mart_scaled.at(m), want);
                        if (v > worst) worst = v;
                    }
                }
                tr.record(worst);
            }
        }
    }
    return rep;
}

// |E_t[xi] - E_t[eta]| <= Envelope_t[|xi - eta|] at every sampled atom. The
// right-hand engine must be the sublinear one claimed to dominate the left.
template <class Scalar>
AxiomReport domination_check(const Engine<Scalar>& engine, const Engine<Scalar>& envelope,
                             const FiltrationTree& tree, int num_samples, std::uint64_t seed) {
    require(num_samples >= 1, ErrorCode::SpecError, "need at least one sample");
    Comparator<Scalar> cmp;
    std::mt19937_64 rng(seed);

    AxiomReport rep;
    rep.engine_kind = std::string(engine.kind_name()) + " vs " + envelope.kind_name();
    rep.mode = scalar_traits<Scalar>::mode_name;
    rep.num_samples = num_samples;
    rep.seed = seed;
    rep.entries = {{"domination", 0, 0, 0.0}};
    AxiomEntry& entry = rep.entries.front();

    const int horizon = tree.num_steps();
    for (int s_i = 0; s_i < num_samples; ++s_i) {
        const int u = horizon == 0 ? 0 : 1 + static_cast<int>(rng_below(rng, horizon));
        const int t = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(u) + 1));
        const NodeProcess<Scalar> xi = detail::random_slice<Scalar>(tree, u, rng);
        const NodeProcess<Scalar> eta = detail::random_slice<Scalar>(tree, u, rng);
        NodeProcess<Scalar> diff(tree.num_nodes());
        for (int n : tree.nodes_at(u)) diff.set(n, abs_value(xi.at(n) - eta.at(n)));

        const NodeProcess<Scalar> mart_xi = martingale_process(engine, tree, xi, u);
        const NodeProcess<Scalar> mart_eta = martingale_process(engine, tree, eta, u);
        const NodeProcess<Scalar> mart_diff = martingale_process(envelope, tree, diff, u);

        ++entry.samples;
        double worst = 0.0;
        for (int m : tree.nodes_at(t)) {
            const Scalar lhs = abs_value(mart_xi.at(m) - mart_eta.at(m));
            if (!cmp.leq(lhs, mart_diff.at(m))) {
                double v = cmp.excess(lhs, mart_diff.at(m));
                if (v > worst) worst = v;
            }
        }
        if (worst > 0.0) {
            ++entry.violations;
            if (worst > entry.worst) entry.worst = worst;
        }
    }
    return rep;
}

} // namespace snell
