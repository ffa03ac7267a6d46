#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsplit/ordering.hpp"

namespace qsplit::splitting {

/// One exactly solvable subflow: advance(state, tau) -> state.
template <class State>
using Flow = std::function<State(const State&, double)>;

enum class PolicyKind { FixedLie, Strang, QuasiRandom, Randomized };

/// Ordering policy for a splitting run.
struct Policy {
    PolicyKind kind = PolicyKind::FixedLie;
    ordering::Permutation fixed_order;   // FixedLie
    int base = 2;                        // QuasiRandom
    std::int64_t offset = 0;             // QuasiRandom
    std::uint64_t seed = 0;              // Randomized

    static Policy fixed_lie(ordering::Permutation order) {
        Policy p;
        p.kind = PolicyKind::FixedLie;
        p.fixed_order = std::move(order);
        return p;
    }
    static Policy strang() {
        Policy p;
        p.kind = PolicyKind::Strang;
        return p;
    }
    static Policy quasi_random(int base, std::int64_t offset = 0) {
        Policy p;
        p.kind = PolicyKind::QuasiRandom;
        p.base = base;
        p.offset = offset;
        return p;
    }
    static Policy randomized(std::uint64_t seed) {
        Policy p;
        p.kind = PolicyKind::Randomized;
        p.seed = seed;
        return p;
    }

    std::string name() const {
        switch (kind) {
            case PolicyKind::FixedLie: return "lie";
            case PolicyKind::Strang: return "strang";
            case PolicyKind::QuasiRandom: return "qr";
            case PolicyKind::Randomized: return "rand";
        }
        return "?";
    }
};

/// A splitting scheme: p subflows, an ordering policy, a step tau and a
/// horizon T integrated over N = ceil(T/tau) full steps (the final step is a
/// full tau even if it overshoots T).
template <class State>
struct Scheme {
    std::vector<Flow<State>> flows;
    Policy policy;
    double tau = 0.0;
    double horizon = 0.0;

    int operator_count() const { return static_cast<int>(flows.size()); }

    std::int64_t step_count() const {
        // ceil(T/tau) with a guard against 256.000000001-style roundoff.
        return static_cast<std::int64_t>(std::ceil(horizon / tau - 1e-9));
    }
};

/// Applies the subflows in the order pi_1 first, pi_p last, each for tau.
template <class State>
State step(const std::vector<Flow<State>>& flows, const ordering::Permutation& perm,
           const State& state, double tau) {
    const int p = static_cast<int>(flows.size());
    if (perm.size() != p || !perm.is_valid())
        throw std::invalid_argument("step: permutation does not match flow count");
    State u = state;
    for (int slot = 0; slot < p; ++slot) {
        u = flows[static_cast<std::size_t>(perm.image[static_cast<std::size_t>(slot)] - 1)](u, tau);
    }
    return u;
}

/// Symmetric Strang composition: half steps 1..p-1 up, a full step of p,
/// half steps p-1..1 down.
template <class State>
State strang_step(const std::vector<Flow<State>>& flows, double tau, const State& state) {
    const int p = static_cast<int>(flows.size());
    if (p < 2) throw std::invalid_argument("strang_step: need at least two flows");
    State u = state;
    for (int j = 1; j <= p - 1; ++j) u = flows[static_cast<std::size_t>(j - 1)](u, tau / 2);
    u = flows[static_cast<std::size_t>(p - 1)](u, tau);
    for (int j = p - 1; j >= 1; --j) u = flows[static_cast<std::size_t>(j - 1)](u, tau / 2);
    return u;
}

/// Per-step global errors ||e_n|| in one or more caller-supplied norms.
struct ErrorTrace {
    std::vector<std::string> norm_names;
    std::vector<std::vector<double>> errors;  // [norm][n], n = 0..N
    std::vector<double> max_error;            // per norm
    std::int64_t steps = 0;
    /// Reported cost: N*p for Lie-type orderings, N*(2p-2) for Strang
    /// (the merged-half-step accounting; the literal composition evaluates
    /// 2p-1 subflows per Strang step).
    std::int64_t subflow_evals = 0;
};

/// Everything a run needs besides the scheme: the reference trajectory
/// (called once per grid time, in ascending order), the error norms, and a
/// finiteness probe evaluated after every substep.
template <class State>
struct RunContext {
    std::function<const State&(double)> reference;
    std::vector<std::pair<std::string, std::function<double(const State&, const State&)>>> norms;
    std::function<bool(const State&)> finite;
};

namespace detail {

template <class State>
void check_finite(const std::function<bool(const State&)>& finite, const State& u,
                  std::int64_t step_index, int substep) {
    if (finite && !finite(u)) {
        throw std::runtime_error("splitting: non-finite state at step " +
                                 std::to_string(step_index) + ", substep " +
                                 std::to_string(substep));
    }
}

}  // namespace detail

/// Executes the scheme over the full grid, recording every ||e_n||.
template <class State>
ErrorTrace run(const Scheme<State>& scheme, const State& initial, const RunContext<State>& ctx) {
    const int p = scheme.operator_count();
    if (p < 1) throw std::invalid_argument("run: no flows");
    if (!(scheme.tau > 0.0) || !(scheme.horizon > 0.0))
        throw std::invalid_argument("run: need tau > 0 and horizon > 0");
    if (ctx.norms.empty()) throw std::invalid_argument("run: no norms");

    const std::int64_t n_steps = scheme.step_count();
    ErrorTrace trace;
    trace.steps = n_steps;
    for (const auto& [name, fn] : ctx.norms) {
        trace.norm_names.push_back(name);
        trace.errors.emplace_back();
        trace.errors.back().reserve(static_cast<std::size_t>(n_steps) + 1);
    }

    std::optional<ordering::OrderingStream> stream;
    if (scheme.policy.kind == PolicyKind::QuasiRandom)
        stream = ordering::OrderingStream::quasi_random(p, scheme.policy.base,
                                                        scheme.policy.offset);
    else if (scheme.policy.kind == PolicyKind::Randomized)
        stream = ordering::OrderingStream::randomized(p, scheme.policy.seed);
    else if (scheme.policy.kind == PolicyKind::FixedLie &&
             (scheme.policy.fixed_order.size() != p || !scheme.policy.fixed_order.is_valid()))
        throw std::invalid_argument("run: fixed ordering does not match flow count");

    State u = initial;
    auto record = [&](const State& ref) {
        for (std::size_t i = 0; i < ctx.norms.size(); ++i)
            trace.errors[i].push_back(ctx.norms[i].second(u, ref));
    };
    record(ctx.reference(0.0));

    for (std::int64_t n = 0; n < n_steps; ++n) {
        if (scheme.policy.kind == PolicyKind::Strang) {
            int sub = 0;
            for (int j = 1; j <= p - 1; ++j) {
                u = scheme.flows[static_cast<std::size_t>(j - 1)](u, scheme.tau / 2);
                detail::check_finite(ctx.finite, u, n, sub++);
            }
            u = scheme.flows[static_cast<std::size_t>(p - 1)](u, scheme.tau);
            detail::check_finite(ctx.finite, u, n, sub++);
            for (int j = p - 1; j >= 1; --j) {
                u = scheme.flows[static_cast<std::size_t>(j - 1)](u, scheme.tau / 2);
                detail::check_finite(ctx.finite, u, n, sub++);
            }
        } else {
            const ordering::Permutation perm =
                stream ? stream->next() : scheme.policy.fixed_order;
            for (int slot = 0; slot < p; ++slot) {
                const int flow_index = perm.image[static_cast<std::size_t>(slot)] - 1;
                u = scheme.flows[static_cast<std::size_t>(flow_index)](u, scheme.tau);
                detail::check_finite(ctx.finite, u, n, slot);
            }
        }
        record(ctx.reference(static_cast<double>(n + 1) * scheme.tau));
    }

    trace.max_error.resize(ctx.norms.size(), 0.0);
    for (std::size_t i = 0; i < ctx.norms.size(); ++i)
        for (double e : trace.errors[i])
            trace.max_error[i] = std::max(trace.max_error[i], e);

    trace.subflow_evals = scheme.policy.kind == PolicyKind::Strang
                              ? n_steps * (2 * p - 2)
                              : n_steps * p;
    return trace;
}

/// One row of the local-defect table for a given tau.
struct DefectSample {
    double tau = 0.0;
    double plus_residual = 0.0;   // ||S+(tau)a - T(tau)a - (tau^2/2) Phi(a)||
    double minus_residual = 0.0;  // ||S-(tau)a - T(tau)a + (tau^2/2) Phi(a)||
    double antisymmetry = 0.0;    // ||S+(tau)a + S-(tau)a - 2 T(tau)a||
};

/// Measures the residual of the leading local defect +-(tau^2/2) Phi(a) for a
/// two-operator splitting against an exact one-step propagator. State must
/// support +, -, and scalar multiplication.
template <class State>
std::vector<DefectSample> local_defect_probe(
    const std::vector<Flow<State>>& flows,
    const std::function<State(const State&, double)>& exact_step, const State& a,
    std::span<const double> taus, const std::function<State(const State&)>& phi_oracle,
    const std::function<double(const State&)>& norm) {
    if (flows.size() != 2)
        throw std::invalid_argument("local_defect_probe: need exactly two flows");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (!(taus[i] < taus[i - 1]))
            throw std::invalid_argument("local_defect_probe: tau list must be decreasing");

    const State phi = phi_oracle(a);
    std::vector<DefectSample> table;
    table.reserve(taus.size());
    for (double tau : taus) {
        const State plus = flows[1](flows[0](a, tau), tau);
        const State minus = flows[0](flows[1](a, tau), tau);
        const State exact = exact_step(a, tau);
        const State lead = (tau * tau / 2.0) * phi;
        DefectSample row;
        row.tau = tau;
        row.plus_residual = norm(plus - exact - lead);
        row.minus_residual = norm(minus - exact + lead);
        row.antisymmetry = norm(plus + minus - exact - exact);
        table.push_back(row);
    }
    return table;
}

}  // namespace qsplit::splitting
