#include <doctest.h>

#include <limits>
#include <stdexcept>

#include <cmath>
#include <memory>
#include <vector>

#include "qsplit/linear.hpp"
#include "qsplit/lowdisc.hpp"
#include "qsplit/report.hpp"
#include "qsplit/splitting.hpp"

using namespace qsplit;
using linear::Matrix;
using linear::Vector;
using Flow = splitting::Flow<Vector>;

namespace {

Flow matrix_flow(const Matrix& a) {
    return [a](const Vector& u, double tau) { return Vector(linear::expm(a, tau) * u); };
}

// A noncommuting 2x2 pair and a probe vector, shared across cases.
Matrix upper() {
    Matrix a(2, 2);
    a << 0, 1, 0, 0;
    return a;
}
Matrix lower() {
    Matrix a(2, 2);
    a << 0, 0, 1, 0;
    return a;
}
Vector probe() {
    Vector u(2);
    u << 0.8, -0.6;
    return u;
}

splitting::RunContext<Vector> exact_context(const Matrix& sum, const Vector& u0) {
    splitting::RunContext<Vector> ctx;
    auto holder = std::make_shared<Vector>();
    ctx.reference = [holder, sum, u0](double t) -> const Vector& {
        *holder = linear::expm(sum, t) * u0;
        return *holder;
    };
    ctx.norms = {{"l2", [](const Vector& u, const Vector& r) { return (u - r).norm(); }}};
    ctx.finite = [](const Vector& u) { return u.allFinite(); };
    return ctx;
}

}  // namespace

TEST_SUITE("splitting") {

TEST_CASE("step: commuting scalar flows are order independent") {
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a.diagonal() << 0.3, 0.3;
    b.diagonal() << -0.7, -0.7;
    std::vector<Flow> flows = {matrix_flow(a), matrix_flow(b)};
    ordering::Permutation fwd = ordering::Permutation::identity(2);
    ordering::Permutation rev;
    rev.image = {2, 1};
    const Vector u = probe();
    CHECK((splitting::step(flows, fwd, u, 0.25) - splitting::step(flows, rev, u, 0.25))
              .norm() <= 1e-14);
}

TEST_CASE("step: p=1 equals the single flow") {
    std::vector<Flow> flows = {matrix_flow(upper())};
    const Vector u = probe();
    CHECK((splitting::step(flows, ordering::Permutation::identity(1), u, 0.5) -
           flows[0](u, 0.5))
              .norm() == 0.0);
}

TEST_CASE("step: p=2 matches the matrix-exponential oracle") {
    const Matrix a1 = upper(), a2 = lower();
    std::vector<Flow> flows = {matrix_flow(a1), matrix_flow(a2)};
    const double tau = 0.3;
    const Vector u = probe();
    const Vector expected = linear::expm(a2, tau) * (linear::expm(a1, tau) * u);
    CHECK((splitting::step(flows, ordering::Permutation::identity(2), u, tau) - expected)
              .norm() <= 1e-14);
    CHECK_THROWS_AS(
        splitting::step(flows, ordering::Permutation::identity(3), u, tau),
        std::invalid_argument);
}

TEST_CASE("step: p=3 applies pi_1 first, pi_p last") {
    Matrix a1(2, 2), a2(2, 2), a3(2, 2);
    a1 << 0, 1, 0, 0;
    a2 << 0, 0, 1, 0;
    a3 << 0.5, 0, 0, -0.5;
    std::vector<Flow> flows = {matrix_flow(a1), matrix_flow(a2), matrix_flow(a3)};
    ordering::Permutation perm;
    perm.image = {3, 1, 2};
    const double tau = 0.2;
    const Vector u = probe();
    const Vector expected =
        linear::expm(a2, tau) * (linear::expm(a1, tau) * (linear::expm(a3, tau) * u));
    CHECK((splitting::step(flows, perm, u, tau) - expected).norm() <= 1e-14);
}

TEST_CASE("run: single-step error equals the composition defect") {
    const Matrix a1 = upper(), a2 = lower();
    splitting::Scheme<Vector> scheme;
    scheme.flows = {matrix_flow(a1), matrix_flow(a2)};
    scheme.policy = splitting::Policy::quasi_random(2);  // z_1 = 0.5 -> S+
    scheme.tau = 1.0;
    scheme.horizon = 1.0;
    auto ctx = exact_context(a1 + a2, probe());
    const auto trace = splitting::run(scheme, probe(), ctx);
    REQUIRE(trace.errors[0].size() == 2);
    CHECK(trace.errors[0][0] == 0.0);
    const Vector expected =
        (linear::expm(a2, 1.0) * linear::expm(a1, 1.0) - linear::expm(a1 + a2, 1.0)) * probe();
    CHECK(trace.max_error[0] == doctest::Approx(expected.norm()).epsilon(1e-12));
}

TEST_CASE("run: commuting diagonal flows are exact under every policy") {
    Matrix a = Matrix::Zero(3, 3), b = Matrix::Zero(3, 3);
    a.diagonal() << 0.5, -0.2, 0.1;
    b.diagonal() << -0.3, 0.4, -0.8;
    Vector u0(3);
    u0 << 1.0, -1.0, 0.5;
    for (auto policy :
         {splitting::Policy::fixed_lie(ordering::Permutation::identity(2)),
          splitting::Policy::strang(), splitting::Policy::quasi_random(2),
          splitting::Policy::randomized(11)}) {
        splitting::Scheme<Vector> scheme;
        scheme.flows = {matrix_flow(a), matrix_flow(b)};
        scheme.policy = policy;
        scheme.tau = 0.125;
        scheme.horizon = 1.0;
        auto ctx = exact_context(a + b, u0);
        const auto trace = splitting::run(scheme, u0, ctx);
        CHECK(trace.max_error[0] <= 1e-12);
    }
}

TEST_CASE("strang step: structure and commuting limit") {
    const Matrix a1 = upper(), a2 = lower();
    std::vector<Flow> flows = {matrix_flow(a1), matrix_flow(a2)};
    const double tau = 0.4;
    const Vector u = probe();
    const Vector manual = linear::expm(a1, tau / 2) *
                          (linear::expm(a2, tau) * (linear::expm(a1, tau / 2) * u));
    CHECK((splitting::strang_step(flows, tau, u) - manual).norm() <= 1e-14);

    Matrix d1 = Matrix::Zero(2, 2), d2 = Matrix::Zero(2, 2);
    d1.diagonal() << 0.2, -0.1;
    d2.diagonal() << -0.4, 0.3;
    std::vector<Flow> commuting = {matrix_flow(d1), matrix_flow(d2)};
    const Vector lie = splitting::step(commuting, ordering::Permutation::identity(2), u, tau);
    CHECK((splitting::strang_step(commuting, tau, u) - lie).norm() <= 1e-12);
}

TEST_CASE("single-step defects: Lie is second order, Strang third") {
    const Matrix a1 = upper(), a2 = lower();
    std::vector<Flow> flows = {matrix_flow(a1), matrix_flow(a2)};
    const Vector u = probe();
    std::vector<std::pair<double, double>> lie_defects, strang_defects;
    for (int q = 4; q <= 10; ++q) {
        const double tau = std::ldexp(1.0, -q);
        const Vector exact = linear::expm(a1 + a2, tau) * u;
        const Vector lie = splitting::step(flows, ordering::Permutation::identity(2), u, tau);
        lie_defects.emplace_back(tau, (lie - exact).norm());
        strang_defects.emplace_back(tau, (splitting::strang_step(flows, tau, u) - exact).norm());
    }
    const auto lie_fit = harness::fit_slope(lie_defects);
    CHECK(lie_fit.slope > 1.9);
    CHECK(lie_fit.slope < 2.1);
    const auto strang_fit = harness::fit_slope(strang_defects);
    CHECK(strang_fit.slope > 2.8);
    CHECK(strang_fit.slope < 3.2);
}

TEST_CASE("local defect probe: leading coefficient and remainder order") {
    const Matrix a1 = upper(), a2 = lower();
    std::vector<Flow> flows = {matrix_flow(a1), matrix_flow(a2)};
    const Vector a = probe();
    std::vector<double> taus;
    for (int q = 4; q <= 10; ++q) taus.push_back(std::ldexp(1.0, -q));

    // The composition applies flow 1 first, so the leading defect of
    // S+ = e^{tau A2} e^{tau A1} is (tau^2/2)[A2,A1] acting on the state.
    const Matrix bracket = linear::commutator(a2, a1);
    auto table = splitting::local_defect_probe<Vector>(
        flows, [&](const Vector& v, double tau) { return Vector(linear::expm(a1 + a2, tau) * v); },
        a, taus, [&](const Vector& v) { return Vector(bracket * v); },
        [](const Vector& v) { return v.norm(); });

    std::vector<std::pair<double, double>> plus, minus, anti;
    for (const auto& row : table) {
        plus.emplace_back(row.tau, row.plus_residual);
        minus.emplace_back(row.tau, row.minus_residual);
        anti.emplace_back(row.tau, row.antisymmetry);
    }
    CHECK(harness::fit_slope(plus).slope > 2.8);
    CHECK(harness::fit_slope(plus).slope < 3.2);
    CHECK(harness::fit_slope(minus).slope > 2.8);
    CHECK(harness::fit_slope(minus).slope < 3.2);
    CHECK(harness::fit_slope(anti).slope > 2.8);
}

TEST_CASE("local defect probe: commuting pair with zero coefficient") {
    Matrix d1 = Matrix::Zero(2, 2), d2 = Matrix::Zero(2, 2);
    d1.diagonal() << 0.2, -0.1;
    d2.diagonal() << -0.4, 0.3;
    std::vector<Flow> flows = {matrix_flow(d1), matrix_flow(d2)};
    const Vector a = probe();
    std::vector<double> taus = {0.25, 0.125, 0.0625};
    auto table = splitting::local_defect_probe<Vector>(
        flows, [&](const Vector& v, double tau) { return Vector(linear::expm(d1 + d2, tau) * v); },
        a, taus, [](const Vector& v) { return Vector(Vector::Zero(v.size())); },
        [](const Vector& v) { return v.norm(); });
    for (const auto& row : table) {
        CHECK(row.plus_residual <= row.tau * row.tau * row.tau);
        CHECK(row.minus_residual <= row.tau * row.tau * row.tau);
    }
    std::vector<double> increasing = {0.1, 0.2};
    CHECK_THROWS_AS(splitting::local_defect_probe<Vector>(
                        flows,
                        [&](const Vector& v, double tau) {
                            return Vector(linear::expm(d1 + d2, tau) * v);
                        },
                        a, increasing, [](const Vector& v) { return v; },
                        [](const Vector& v) { return v.norm(); }),
                    std::invalid_argument);
}

TEST_CASE("policy equivalence at p=2: base-2 driver alternates S+, S-") {
    const Matrix a1 = upper(), a2 = lower();
    std::vector<Flow> flows = {matrix_flow(a1), matrix_flow(a2)};
    const double tau = 0.125;
    const int steps = 64;

    auto stream = ordering::OrderingStream::quasi_random(2, 2);
    Vector via_stream = probe();
    for (int n = 0; n < steps; ++n)
        via_stream = splitting::step(flows, stream.next(), via_stream, tau);

    const auto signs = lowdisc::sign_sequence(lowdisc::RadicalInverseSequence(2), steps);
    Vector via_signs = probe();
    for (int n = 0; n < steps; ++n) {
        if (signs.signs[static_cast<std::size_t>(n)] > 0)
            via_signs = flows[1](flows[0](via_signs, tau), tau);  // S+
        else
            via_signs = flows[0](flows[1](via_signs, tau), tau);  // S-
    }
    CHECK(via_stream == via_signs);  // bitwise
}

TEST_CASE("determinism: repeated runs are bitwise identical") {
    const Matrix a1 = upper(), a2 = lower();
    for (auto policy : {splitting::Policy::quasi_random(2), splitting::Policy::randomized(5)}) {
        splitting::Scheme<Vector> scheme;
        scheme.flows = {matrix_flow(a1), matrix_flow(a2)};
        scheme.policy = policy;
        scheme.tau = 0.0625;
        scheme.horizon = 1.0;
        auto ctx1 = exact_context(a1 + a2, probe());
        auto ctx2 = exact_context(a1 + a2, probe());
        const auto t1 = splitting::run(scheme, probe(), ctx1);
        const auto t2 = splitting::run(scheme, probe(), ctx2);
        CHECK(t1.errors == t2.errors);
    }
}

TEST_CASE("step-count accounting: N*p for Lie-type, N*(2p-2) for Strang") {
    Matrix d = Matrix::Zero(2, 2);
    d.diagonal() << 0.1, -0.1;
    for (int p : {2, 3, 4}) {
        std::vector<Flow> flows(static_cast<std::size_t>(p), matrix_flow(d));
        splitting::Scheme<Vector> scheme;
        scheme.flows = flows;
        scheme.policy = splitting::Policy::randomized(1);
        scheme.tau = 0.125;
        scheme.horizon = 1.0;  // N = 8
        auto ctx = exact_context(static_cast<double>(p) * d, probe());
        CHECK(splitting::run(scheme, probe(), ctx).subflow_evals == 8 * p);

        scheme.policy = splitting::Policy::strang();
        auto ctx2 = exact_context(static_cast<double>(p) * d, probe());
        CHECK(splitting::run(scheme, probe(), ctx2).subflow_evals == 8 * (2 * p - 2));
    }
}

TEST_CASE("grid: N = ceil(T/tau), final step may overshoot") {
    Matrix d = Matrix::Zero(2, 2);
    splitting::Scheme<Vector> scheme;
    scheme.flows = {matrix_flow(d), matrix_flow(d)};
    scheme.policy = splitting::Policy::strang();
    scheme.tau = 0.4;
    scheme.horizon = 1.0;
    CHECK(scheme.step_count() == 3);  // grid times 0.4, 0.8, 1.2
    auto ctx = exact_context(Matrix::Zero(2, 2), probe());
    CHECK(splitting::run(scheme, probe(), ctx).errors[0].size() == 4);
}

TEST_CASE("non-finite states abort with the step index") {
    const Matrix a1 = upper(), a2 = lower();
    int calls = 0;
    Flow poison = [&calls](const Vector& u, double) {
        ++calls;
        if (calls == 7) {
            Vector bad = u;
            bad(0) = std::numeric_limits<double>::quiet_NaN();
            return bad;
        }
        return u;
    };
    splitting::Scheme<Vector> scheme;
    scheme.flows = {matrix_flow(a1), poison};
    scheme.policy = splitting::Policy::fixed_lie(ordering::Permutation::identity(2));
    scheme.tau = 0.125;
    scheme.horizon = 1.0;
    auto ctx = exact_context(a1, probe());
    CHECK_THROWS_WITH_AS(splitting::run(scheme, probe(), ctx),
                         doctest::Contains("step 6"), std::runtime_error);
}

}  // TEST_SUITE
