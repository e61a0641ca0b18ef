#include <doctest.h>

#include <cmath>
#include <random>

#include <kahlerflow/observables.hpp>

#include "test_util.hpp"

using namespace kahlerflow;
using testutil::max_abs_diff;
using testutil::random_cvector;
using testutil::random_hermitian;

namespace {

// A = g B with B Hermitian is metric-self-adjoint at z for any metric.
CMatrix metric_self_adjoint(const ManifoldSpec& spec, const CVector& z, const CMatrix& b) {
    return metric(spec, z).g * b;
}

Trajectory quantum_product_run(const CVector& xi, double dt, double t_end) {
    FlowParams p;
    p.spec = ManifoldSpec::product2d({-1.0, -0.5});
    p.mag = MagneticSpec::uniform(4.0, 1.0);
    p.xi = xi;
    p.dt = dt;
    p.t_end = t_end;
    return integrate(p);
}

}  // namespace

TEST_SUITE("observables") {

TEST_CASE("self-adjointness residual") {
    std::mt19937_64 rng(5101);
    const ManifoldSpec cp = ManifoldSpec::projective(2, 1.0);
    const CVector z = testutil::random_chart_point(rng, cp, 0.6);

    // constructed metric-self-adjoint observables have vanishing residual
    const CMatrix good = metric_self_adjoint(cp, z, random_hermitian(rng, 2));
    CHECK(self_adjointness_residual(cp, z, good) < 1e-13);

    // at the origin the metric is 1/2 I, so plain Hermitian works
    CHECK(self_adjointness_residual(cp, CVector::Zero(2), random_hermitian(rng, 2)) < 1e-13);

    // away from the origin a generic Hermitian matrix is not metric-self-adjoint
    CMatrix h(2, 2);
    h << Complex(1.0), Complex(0.4, 0.3), Complex(0.4, -0.3), Complex(-0.7);
    CHECK(self_adjointness_residual(cp, z, h) > 1e-3);
}

TEST_CASE("expectation value oracle cases") {
    std::mt19937_64 rng(5102);
    const ManifoldSpec flat = ManifoldSpec::flat(3);
    const CVector psi = random_cvector(rng, 3, 1.0);
    const PhaseState st{CVector::Zero(3), psi};

    // identity observable
    CHECK(expectation(flat, st, CMatrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-13));

    // eigenstate of a diagonal observable
    CMatrix diag = CMatrix::Zero(3, 3);
    diag(0, 0) = 2.5;
    diag(1, 1) = -1.0;
    diag(2, 2) = 0.25;
    CVector axis = CVector::Zero(3);
    axis(1) = Complex(0.3, 0.7);
    CHECK(expectation(flat, PhaseState{CVector::Zero(3), axis}, diag) ==
          doctest::Approx(-1.0).epsilon(1e-13));

    // generic Hermitian at the flat origin equals the plain Rayleigh quotient
    const CMatrix a = random_hermitian(rng, 3);
    const double brute =
        std::real((psi.adjoint() * a * psi)(0, 0)) / psi.squaredNorm();
    CHECK(expectation(flat, st, a) == doctest::Approx(brute).epsilon(1e-12));

    // curved chart point: metric-self-adjoint observable, real expectation
    const ManifoldSpec ch = ManifoldSpec::hyperbolic(2, 1.5);
    const CVector z = testutil::random_chart_point(rng, ch, 0.5);
    const CMatrix b = random_hermitian(rng, 2);
    const CMatrix good = metric_self_adjoint(ch, z, b);
    const CVector psi2 = random_cvector(rng, 2, 0.8);
    const double val = expectation(ch, PhaseState{z, psi2}, good);
    CHECK(std::isfinite(val));

    // rejects observables that fail metric self-adjointness
    CMatrix skew(2, 2);
    skew << Complex(0.0, 1.0), Complex(1.0), Complex(2.0), Complex(0.0);
    CHECK_THROWS_AS(expectation(ch, PhaseState{z, psi2}, skew), NonSelfAdjointError);

    // rejects the zero state
    CHECK_THROWS_AS(expectation(flat, PhaseState{CVector::Zero(3), CVector::Zero(3)},
                                CMatrix::Identity(3, 3)),
                    ZeroNormError);
}

TEST_CASE("born probabilities oracle cases") {
    // eigenvector concentrates all probability on its eigenvalue
    CMatrix a(2, 2);
    a << Complex(0.0), Complex(0.0), Complex(0.0), Complex(1.0);
    CVector e1 = CVector::Zero(2);
    e1(1) = Complex(0.6, -0.8);
    const std::vector<BornOutcome> conc = born_probabilities(a, e1);
    REQUIRE(conc.size() == 2);
    CHECK(conc[0].eigenvalue == doctest::Approx(0.0));
    CHECK(conc[0].probability == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(conc[1].eigenvalue == doctest::Approx(1.0));
    CHECK(conc[1].probability == doctest::Approx(1.0).epsilon(1e-14));

    // symmetric superposition splits evenly
    CVector half(2);
    half << Complex(M_SQRT1_2), Complex(M_SQRT1_2);
    const std::vector<BornOutcome> even = born_probabilities(a, half);
    CHECK(even[0].probability == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(even[1].probability == doctest::Approx(0.5).epsilon(1e-14));

    // non-Hermitian input is refused
    CMatrix bad(2, 2);
    bad << Complex(0.0), Complex(1.0), Complex(0.0), Complex(0.0);
    CHECK_THROWS_AS(born_probabilities(bad, half), NonSelfAdjointError);
    CHECK_THROWS_AS(born_probabilities(a, CVector::Zero(2)), ZeroNormError);
}

TEST_CASE("born consistency on random observables") {
    std::mt19937_64 rng(5103);
    const ManifoldSpec flat = ManifoldSpec::flat(4);
    for (int trial = 0; trial < 25; ++trial) {
        const CMatrix a = random_hermitian(rng, 4);
        const CVector psi = random_cvector(rng, 4, 1.0);
        const std::vector<BornOutcome> outcomes = born_probabilities(a, psi);
        REQUIRE(outcomes.size() == 4);
        double sum = 0.0, mean = 0.0;
        for (size_t i = 0; i < outcomes.size(); ++i) {
            sum += outcomes[i].probability;
            mean += outcomes[i].probability * outcomes[i].eigenvalue;
            if (i > 0) CHECK(outcomes[i].eigenvalue >= outcomes[i - 1].eigenvalue);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        const double expect = expectation(flat, PhaseState{CVector::Zero(4), psi}, a);
        CHECK(std::abs(mean - expect) < 1e-12);
    }
}

TEST_CASE("transport identities") {
    std::mt19937_64 rng(5104);
    CVector xi(2);
    xi << Complex(0.21, -0.11), Complex(0.08, 0.17);
    const Trajectory traj = quantum_product_run(xi, 1e-3, 1.0);
    REQUIRE(traj.termination == Termination::Completed);

    // identity observable is untouched (diagonal scalings cancel)
    const CMatrix id = CMatrix::Identity(2, 2);
    CHECK(max_abs_diff(transport(ManifoldSpec::product2d({-1.0, -0.5}), traj, id), id) < 1e-14);

    // diagonal entries never change
    const CMatrix a0 = random_hermitian(rng, 2);
    const CMatrix at = transport(ManifoldSpec::product2d({-1.0, -0.5}), traj, a0);
    CHECK(std::abs(at(0, 0) - a0(0, 0)) < 1e-14);
    CHECK(std::abs(at(1, 1) - a0(1, 1)) < 1e-14);

    // a resting trajectory transports trivially
    const Trajectory rest = quantum_product_run(CVector::Zero(2), 1e-3, 0.1);
    CHECK(max_abs_diff(transport(ManifoldSpec::product2d({-1.0, -0.5}), rest, a0), a0) < 1e-14);

    // series starts at A0 and ends at the endpoint value
    const std::vector<CMatrix> series =
        transport_series(ManifoldSpec::product2d({-1.0, -0.5}), traj, a0);
    REQUIRE(series.size() == traj.size());
    CHECK(max_abs_diff(series.front(), a0) == 0.0);
    CHECK(max_abs_diff(series.back(), at) < 1e-14);
}

TEST_CASE("transport preserves metric self-adjointness") {
    std::mt19937_64 rng(5105);
    const ManifoldSpec spec = ManifoldSpec::product2d({-1.0, -0.5});
    const CVector xi = random_cvector(rng, 2, 0.3);
    const Trajectory traj = quantum_product_run(xi, 1e-4, 1.0);
    REQUIRE(traj.termination == Termination::Completed);

    // start from a metric-self-adjoint observable at the launch point
    const CMatrix a0 = metric_self_adjoint(spec, traj.z.front(), random_hermitian(rng, 2));
    REQUIRE(self_adjointness_residual(spec, traj.z.front(), a0) < 1e-13);
    const CMatrix at = transport(spec, traj, a0);
    CHECK(self_adjointness_residual(spec, traj.z.back(), at) < 1e-8);
}

TEST_CASE("transport error shrinks at second order in the step") {
    std::mt19937_64 rng(5106);
    const ManifoldSpec spec = ManifoldSpec::product2d({-1.0, -0.5});
    CVector xi(2);
    xi << Complex(0.21, -0.11), Complex(0.08, 0.17);
    const CMatrix a0 = metric_self_adjoint(spec, CVector::Zero(2), random_hermitian(rng, 2));
    auto endpoint_residual = [&](double dt) {
        const Trajectory traj = quantum_product_run(xi, dt, 1.0);
        const CMatrix at = transport(spec, traj, a0);
        return self_adjointness_residual(spec, traj.z.back(), at);
    };
    const double coarse = endpoint_residual(1e-3);
    const double fine = endpoint_residual(5e-4);
    CHECK(coarse / fine > 3.0);
    CHECK(coarse / fine < 5.0);
}

TEST_CASE("transport is multiplicative over concatenated segments") {
    std::mt19937_64 rng(5107);
    const ManifoldSpec spec = ManifoldSpec::product2d({-1.0, -0.5});
    const CVector xi = random_cvector(rng, 2, 0.25);
    const CMatrix a0 = random_hermitian(rng, 2);

    const Trajectory whole = quantum_product_run(xi, 1e-3, 1.0);
    REQUIRE(whole.termination == Termination::Completed);
    const CMatrix direct = transport(spec, whole, a0);

    // restart the flow from the midpoint sample and transport in two legs
    const size_t mid = whole.size() / 2;
    FlowParams second;
    second.spec = spec;
    second.mag = MagneticSpec::uniform(4.0, 1.0);
    second.z0 = whole.z[mid];
    second.xi = whole.psi[mid];
    second.dt = 1e-3;
    second.t_end = 0.5;
    const Trajectory tail = integrate(second);
    REQUIRE(tail.termination == Termination::Completed);

    Trajectory head;
    head.t.assign(whole.t.begin(), whole.t.begin() + mid + 1);
    head.z.assign(whole.z.begin(), whole.z.begin() + mid + 1);
    head.psi.assign(whole.psi.begin(), whole.psi.begin() + mid + 1);
    head.energy.assign(whole.energy.begin(), whole.energy.begin() + mid + 1);

    const CMatrix two_leg = transport(spec, tail, transport(spec, head, a0));
    CHECK(max_abs_diff(direct, two_leg) < 1e-12);
}

TEST_CASE("transport requires a per-coordinate diagonal metric") {
    std::mt19937_64 rng(5108);
    FlowParams p;
    p.spec = ManifoldSpec::projective(2, 1.0);
    p.mag = MagneticSpec::uniform(2.0, 1.0);
    p.xi = random_cvector(rng, 2, 0.3);
    p.dt = 1e-3;
    p.t_end = 0.2;
    const Trajectory traj = integrate(p);
    CHECK_THROWS_AS(transport(p.spec, traj, CMatrix::Identity(2, 2)), NonDiagonalMetricError);

    // the one-dimensional chart counts as diagonal
    FlowParams line;
    line.spec = ManifoldSpec::projective(1, 1.0);
    line.mag = MagneticSpec::uniform(2.0, 1.0);
    line.xi = CVector::Constant(1, Complex(0.25));
    line.dt = 1e-3;
    line.t_end = 0.3;
    const Trajectory lt = integrate(line);
    CHECK_NOTHROW(transport(line.spec, lt, CMatrix::Identity(1, 1)));
}

}  // TEST_SUITE
