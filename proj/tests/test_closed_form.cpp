#include <doctest.h>

#include <cmath>
#include <random>

#include <kahlerflow/closed_form.hpp>
#include <kahlerflow/flow.hpp>

#include "test_util.hpp"

using namespace kahlerflow;
using testutil::max_abs_diff;

namespace {

ModeParams mode(CurvatureSign sign, double radius, double q, double H, Complex xi) {
    ModeParams p;
    p.sign = sign;
    p.radius = radius;
    p.q = q;
    p.H = H;
    p.xi = CVector::Constant(1, xi);
    return p;
}

// k = 4|xi| / (qH radius) inverted for |xi|
double xi_for_k(double k, double q, double H, double radius) {
    return k * std::abs(q * H) * radius / 4.0;
}

}  // namespace

TEST_SUITE("closed-form") {

TEST_CASE("classification oracle values") {
    // zero launch momentum: pure field phase rotation, omega = qH/2
    const RegimeReport zero =
        classify(mode(CurvatureSign::Positive, 1.0, 1.0, 2.0, Complex(0.0)));
    CHECK(zero.regime == Regime::SchrodingerLimit);
    CHECK(zero.k == 0.0);
    CHECK(zero.omega_or_mu == doctest::Approx(1.0));
    REQUIRE(zero.period.has_value());
    CHECK(*zero.period == doctest::Approx(M_PI));

    // runaway regime at k = 2: mu = (qH/2) sqrt(k^2-1) = sqrt(3)
    const RegimeReport run =
        classify(mode(CurvatureSign::Negative, 1.0, 1.0, 2.0, Complex(1.0)));
    CHECK(run.regime == Regime::Classical);
    CHECK(run.k == doctest::Approx(2.0));
    CHECK(run.omega_or_mu == doctest::Approx(std::sqrt(3.0)));
    CHECK(!run.period.has_value());

    // rate ratio between two runaway points: mu(2)/mu(sqrt 2) = sqrt 3
    const RegimeReport run2 = classify(
        mode(CurvatureSign::Negative, 1.0, 1.0, 2.0, Complex(xi_for_k(std::sqrt(2.0), 1, 2, 1))));
    CHECK(run.omega_or_mu / run2.omega_or_mu == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));

    // free particle on the closed space: blow-up time a pi / (4 |xi|)
    const RegimeReport geo = classify(mode(CurvatureSign::Positive, M_PI, 1.0, 0.0, Complex(1.0)));
    CHECK(geo.regime == Regime::GeodesicLimit);
    CHECK(std::isinf(geo.k));
    REQUIRE(geo.blowup_time.has_value());
    CHECK(*geo.blowup_time == doctest::Approx(M_PI * M_PI / 4.0));
    REQUIRE(geo.orbit_length.has_value());
    CHECK(*geo.orbit_length == doctest::Approx(M_PI * M_PI));

    // positive curvature is periodic at every k; period and orbit length
    const double k = 0.5;
    const RegimeReport pos = classify(
        mode(CurvatureSign::Positive, 1.0, 1.0, 2.0, Complex(xi_for_k(k, 1, 2, 1))));
    CHECK(pos.regime == Regime::Quantum);
    const double omega = 1.0 * std::sqrt(1.0 + k * k);
    CHECK(pos.omega_or_mu == doctest::Approx(omega));
    REQUIRE(pos.period.has_value());
    CHECK(*pos.period == doctest::Approx(M_PI / omega));
    REQUIRE(pos.orbit_length.has_value());
    CHECK(*pos.orbit_length == doctest::Approx(M_PI * k / std::sqrt(1.0 + k * k)));

    // critical band on negative curvature
    CHECK(classify(mode(CurvatureSign::Negative, 1.0, 1.0, 2.0, Complex(xi_for_k(1.0, 1, 2, 1))))
              .regime == Regime::Critical);
    CHECK(classify(mode(CurvatureSign::Negative, 1.0, 1.0, 2.0,
                        Complex(xi_for_k(1.0 + 1e-5, 1, 2, 1))),
                   1e-4)
              .regime == Regime::Critical);

    // flat background: cyclotron circle of length 4 pi |xi| / (qH)
    const RegimeReport fl = classify(mode(CurvatureSign::Flat, 1.0, 1.0, 2.0, Complex(0.5)));
    CHECK(fl.regime == Regime::Quantum);
    REQUIRE(fl.orbit_length.has_value());
    CHECK(*fl.orbit_length == doctest::Approx(4.0 * M_PI * 0.5 / 2.0));
}

TEST_CASE("periodic orbit basics") {
    const ModeParams p = mode(CurvatureSign::Positive, 1.0, 1.0, 2.0, Complex(0.25));
    const ModeState at0 = cp_solution(p, 0.0);
    CHECK(at0.z.cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(at0.psi, p.xi) == 0.0);

    const RegimeReport rep = classify(p);
    REQUIRE(rep.period.has_value());
    const double T = *rep.period;
    const ModeState atT = cp_solution(p, T);
    CHECK(atT.z.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(max_abs_diff(atT.psi, p.xi) < 1e-10);

    // periodicity from arbitrary t
    for (double t : {0.13, 0.67, 1.9}) {
        CHECK(max_abs_diff(cp_solution(p, t + T).z, cp_solution(p, t).z) < 1e-10);
        CHECK(max_abs_diff(cp_solution(p, t + T).psi, cp_solution(p, t).psi) < 1e-10);
    }

    CHECK_THROWS_AS(cp_solution(mode(CurvatureSign::Negative, 1, 1, 2, Complex(0.1)), 0.5),
                    WrongKindError);
    CHECK_THROWS_AS(cp_solution(mode(CurvatureSign::Positive, 1, 1, 0.0, Complex(0.1)), 0.5),
                    DegenerateError);
}

TEST_CASE("periodic orbit norm identity") {
    // (4/a^4)(a^2+|z|^2)(a^2|psi|^2 + |<z,psi>|^2) = 4|xi|^2 along the orbit
    const double a = 1.3;
    const ModeParams p = mode(CurvatureSign::Positive, a, 1.0, 2.0, Complex(0.4, 0.3));
    const double target = 4.0 * p.xi.squaredNorm();
    const double a2 = a * a;
    for (int i = 0; i <= 40; ++i) {
        const double t = 0.1 * i;
        const ModeState st = cp_solution(p, t);
        const double zp = std::norm(bilinear(st.z, st.psi));
        const double lhs = (4.0 / (a2 * a2)) * (a2 + st.z.squaredNorm()) *
                           (a2 * st.psi.squaredNorm() + zp);
        CHECK(std::abs(lhs - target) < 1e-10 * target);
    }
}

TEST_CASE("numeric cross-check of the periodic orbit at a spot time") {
    const ModeParams p = mode(CurvatureSign::Positive, 1.0, 1.0, 2.0, Complex(0.25));
    FlowParams f;
    f.spec = ManifoldSpec::projective(1, 1.0);
    f.mag = MagneticSpec::uniform(2.0, 1.0);
    f.xi = p.xi;
    f.dt = 1e-4;
    f.t_end = 0.3;
    const Trajectory traj = integrate(f);
    const ModeState st = cp_solution(p, 0.3);
    CHECK(max_abs_diff(traj.z.back(), st.z) < 1e-6);
    CHECK(max_abs_diff(traj.psi.back(), st.psi) < 1e-6);
}

TEST_CASE("bounded negative-curvature orbit matches the numeric flow") {
    const ModeParams p = mode(CurvatureSign::Negative, 1.0, 1.0, 4.0, Complex(0.5));  // k = 0.5
    const RegimeReport rep = classify(p);
    CHECK(rep.regime == Regime::Quantum);
    REQUIRE(rep.period.has_value());

    FlowParams f;
    f.spec = ManifoldSpec::hyperbolic(1, 1.0);
    f.mag = MagneticSpec::uniform(4.0, 1.0);
    f.xi = p.xi;
    f.t_end = *rep.period;
    f.dt = f.t_end / std::ceil(f.t_end / 1e-4);
    const Trajectory traj = integrate(f);
    REQUIRE(traj.termination == Termination::Completed);
    double worst = 0.0;
    for (size_t i = 0; i < traj.size(); i += 25) {
        const ModeState st = ch_solution(p, traj.t[i]);
        worst = std::max(worst, max_abs_diff(traj.z[i], st.z));
        worst = std::max(worst, max_abs_diff(traj.psi[i], st.psi));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("runaway orbit approaches the boundary fixed point") {
    const double b = 1.0;
    const ModeParams p = mode(CurvatureSign::Negative, b, 1.0, 2.0, Complex(1.0));  // k = 2
    const ModeState at0 = ch_solution(p, 0.0);
    CHECK(at0.z.cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(at0.psi, p.xi) == 0.0);

    const double k = 2.0, mu = std::sqrt(3.0);
    const Complex xihat = p.xi(0) / std::abs(p.xi(0));
    const Complex zinf = b * (std::sqrt(k * k - 1.0) + I_UNIT) / k * std::conj(xihat);
    CHECK(std::abs(std::abs(zinf) - b) < 1e-14);
    CHECK(std::abs(ch_solution(p, 30.0).z(0) - zinf) < 1e-12);

    // |psi| ~ (k^2/(4(k^2-1))) e^{2 mu t} |xi| for large t
    for (double t : {6.0, 8.0}) {
        const double pred = k * k / (4.0 * (k * k - 1.0)) * std::exp(2.0 * mu * t);
        CHECK(ch_solution(p, t).psi.norm() / pred == doctest::Approx(1.0).epsilon(1e-8));
    }

    // the energy integral stays at 2|xi|^2 along the runaway branch
    const ManifoldSpec ch = ManifoldSpec::hyperbolic(1, b);
    for (double t : {0.5, 2.0, 5.0}) {
        const ModeState st = ch_solution(p, t);
        CHECK(hamiltonian(ch, PhaseState{st.z, st.psi}) ==
              doctest::Approx(2.0 * p.xi.squaredNorm()).epsilon(1e-9));
    }

    CHECK_THROWS_AS(ch_solution(mode(CurvatureSign::Negative, 1, 1, 2, Complex(xi_for_k(1, 1, 2, 1))), 1.0),
                    CriticalRegimeError);
    CHECK_THROWS_AS(ch_solution(mode(CurvatureSign::Positive, 1, 1, 2, Complex(0.1)), 1.0),
                    WrongKindError);
}

TEST_CASE("runaway orbit is time-reversal symmetric") {
    const ModeParams p = mode(CurvatureSign::Negative, 1.0, 1.0, 2.0, Complex(1.0, 0.0));
    for (double t : {0.3, 1.1, 2.4}) {
        const ModeState fwd = ch_solution(p, t);
        const ModeState bwd = ch_solution(p, -t);
        CHECK(std::abs(bwd.z(0) + std::conj(fwd.z(0))) < 1e-12 * std::abs(fwd.z(0)));
        CHECK(std::abs(bwd.psi(0) - std::conj(fwd.psi(0))) < 1e-12 * std::abs(fwd.psi(0)));
    }
}

TEST_CASE("negative charge and conjugation symmetry") {
    // flipping the sign of qH solves the conjugated system
    const ModeParams pos = mode(CurvatureSign::Positive, 1.0, 1.0, 2.0, Complex(0.3, 0.4));
    ModeParams neg = pos;
    neg.H = -pos.H;
    neg.xi = pos.xi.conjugate();
    for (double t : {0.2, 0.9}) {
        const ModeState a = solve(pos, t);
        const ModeState b = solve(neg, t);
        CHECK(max_abs_diff(b.z, CVector(a.z.conjugate())) < 1e-13);
        CHECK(max_abs_diff(b.psi, CVector(a.psi.conjugate())) < 1e-13);
    }
}

TEST_CASE("small-k orbits converge to the flat cyclotron form") {
    const double q = 1.0, H = 2.0;
    const ModeParams p =
        mode(CurvatureSign::Positive, 1.0, q, H, Complex(xi_for_k(1e-4, q, H, 1.0)));
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double t = 2.0 * M_PI / (q * H) * i / 100.0;
        const ModeState exact = cp_solution(p, t);
        const ModeState lim = limit_schrodinger(p, t);
        worst = std::max(worst, max_abs_diff(exact.z, lim.z));
        worst = std::max(worst, max_abs_diff(exact.psi, lim.psi));
    }
    CHECK(worst < 1e-6);

    // the limit form itself: unitary phase and full revolution
    CHECK(std::abs(limit_schrodinger(p, 0.77).psi.norm() - p.xi.norm()) < 1e-15);
    CHECK(max_abs_diff(limit_schrodinger(p, 2.0 * M_PI / (q * H)).psi, p.xi) < 1e-12);
    CHECK_THROWS_AS(limit_schrodinger(mode(CurvatureSign::Flat, 1, 1, 0.0, Complex(0.1)), 1.0),
                    DegenerateError);
}

TEST_CASE("large-k orbits converge to geodesics") {
    const double b = 1.0, q = 1.0, k = 1e3;
    const double H = 4.0 * 1.0 / (q * k * b);  // |xi| = 1
    const ModeParams p = mode(CurvatureSign::Negative, b, q, H, Complex(1.0));

    double worst_plain = 0.0, worst_corrected = 0.0;
    const double mu = (q * H / 2.0) * std::sqrt(k * k - 1.0);
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        const ModeState exact = ch_solution(p, t);
        const ModeState lim = limit_geodesic(p, t);
        const double amp = std::max(1.0, lim.psi.norm());
        worst_plain = std::max(worst_plain, max_abs_diff(exact.z, lim.z));
        worst_plain = std::max(worst_plain, max_abs_diff(exact.psi, lim.psi) / amp);

        // first-order correction in 1/k around the geodesic
        const double th = std::tanh(mu * t);
        const double ch2 = std::cosh(mu * t) * std::cosh(mu * t);
        const Complex zc = b * (1.0 + I_UNIT * th / k) * th;
        const Complex pc = (1.0 - 2.0 * I_UNIT * th / k) * ch2 * p.xi(0);
        worst_corrected = std::max(worst_corrected, std::abs(exact.z(0) - zc));
        worst_corrected = std::max(worst_corrected, std::abs(exact.psi(0) - pc));
    }
    CHECK(worst_plain < 5e-3);      // O(1/k) gap to the uncorrected geodesic
    CHECK(worst_plain > 1e-4);      // the correction below is genuinely needed
    CHECK(worst_corrected < 1e-4);  // O(1/k^2) once the first order is included

    // geodesic-limit form on positive curvature blows up at t* = a pi/(4 |xi|)
    const ModeParams gp = mode(CurvatureSign::Positive, 1.0, 1.0, 0.0, Complex(1.0));
    CHECK(limit_geodesic(gp, 0.3).z(0).real() == doctest::Approx(std::tan(0.6)));
    CHECK_THROWS_AS(limit_geodesic(gp, M_PI / 4.0), PoleOfChartError);
}

TEST_CASE("solve dispatches by regime") {
    // quantum / classical go to the exact branches
    const ModeParams quantum = mode(CurvatureSign::Positive, 1.0, 1.0, 2.0, Complex(0.25));
    CHECK(max_abs_diff(solve(quantum, 0.4).z, cp_solution(quantum, 0.4).z) == 0.0);

    const ModeParams classical = mode(CurvatureSign::Negative, 1.0, 1.0, 2.0, Complex(1.0));
    CHECK(max_abs_diff(solve(classical, 0.4).z, ch_solution(classical, 0.4).z) == 0.0);

    // flat quantum goes to the cyclotron form
    const ModeParams flat = mode(CurvatureSign::Flat, 1.0, 1.0, 2.0, Complex(0.5));
    CHECK(max_abs_diff(solve(flat, 0.4).z, limit_schrodinger(flat, 0.4).z) == 0.0);

    // zero launch momentum rests at the origin
    const ModeState rest = solve(mode(CurvatureSign::Positive, 1.0, 1.0, 2.0, Complex(0.0)), 1.0);
    CHECK(rest.z.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rest.psi.cwiseAbs().maxCoeff() == 0.0);

    // critical band refuses
    CHECK_THROWS_AS(solve(mode(CurvatureSign::Negative, 1.0, 1.0, 2.0,
                               Complex(xi_for_k(1.0, 1, 2, 1))),
                          1.0),
                    CriticalRegimeError);

    // geodesic limit dispatch
    const ModeParams free = mode(CurvatureSign::Negative, 1.0, 1.0, 0.0, Complex(0.5));
    CHECK(solve(free, 0.7).z(0).real() == doctest::Approx(std::tanh(0.7)));
}

TEST_CASE("regimes connect continuously across the critical point") {
    const double q = 1.0, H = 2.0, b = 1.0;
    auto run = [&](double delta) {
        double worst_pair = 0.0, worst_crit = 0.0;
        const ModeParams lo =
            mode(CurvatureSign::Negative, b, q, H, Complex(xi_for_k(1.0 - delta, q, H, b)));
        const ModeParams hi =
            mode(CurvatureSign::Negative, b, q, H, Complex(xi_for_k(1.0 + delta, q, H, b)));
        for (int i = 0; i <= 50; ++i) {
            const double t = 0.02 * i;
            const Complex zl = ch_solution(lo, t).z(0);
            const Complex zh = ch_solution(hi, t).z(0);
            const Complex qht(q * H * t, 0.0);
            const Complex zc = b * qht * (2.0 + I_UNIT * qht) / (4.0 + qht * qht);
            worst_pair = std::max(worst_pair, std::abs(zl - zh));
            worst_crit = std::max(worst_crit, std::max(std::abs(zl - zc), std::abs(zh - zc)));
        }
        return std::make_pair(worst_pair, worst_crit);
    };
    const auto [pair3, crit3] = run(1e-3);
    CHECK(pair3 < 2e-3);
    CHECK(crit3 < 1e-3);
    // first-order shrinkage when delta drops 10x
    const auto [pair4, crit4] = run(1e-4);
    CHECK(pair3 / pair4 > 5.0);
    CHECK(crit3 / crit4 > 5.0);
}

TEST_CASE("polar reduction reproduces the orbit and its phase law") {
    const double a = 1.0, q = 1.0, H = 2.0;
    const ModeParams p = mode(CurvatureSign::Positive, a, q, H, Complex(0.5));  // k = 1
    const RegimeReport rep = classify(p);
    REQUIRE(rep.period.has_value());
    const double T = *rep.period;

    // initial slopes by finite differences: r'(0) = 2|xi|/a, chi'(0) = qH/2
    const double h = 1e-6;
    const double rdot0 = (polar_reduction(p, h).r - polar_reduction(p, -h).r) / (2.0 * h);
    CHECK(rdot0 == doctest::Approx(2.0 * 0.5 / a).epsilon(1e-6));
    const double chidot0 =
        (polar_reduction(p, h).chi - polar_reduction(p, -h).chi) / (2.0 * h);
    CHECK(chidot0 == doctest::Approx(q * H / 2.0).epsilon(1e-6));

    // the radial factor peaks at |r| = k mid-period and returns to the
    // origin after a full one
    CHECK(std::abs(polar_reduction(p, T / 2.0).r) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(polar_reduction(p, T).r) < 1e-12);

    // zeta = r e^{i chi} rebuilds the solution across several periods
    const Complex xihat = p.xi(0) / std::abs(p.xi(0));
    double worst = 0.0, prev_chi = polar_reduction(p, 0.0).chi;
    for (int i = 0; i <= 400; ++i) {
        const double t = 3.0 * T * i / 400.0;
        const PolarSample ps = polar_reduction(p, t);
        const Complex zeta = ps.r * std::exp(I_UNIT * ps.chi);
        worst = std::max(worst, std::abs(a * zeta * std::conj(xihat) - cp_solution(p, t).z(0)));
        // continuity of the unwrapped phase
        CHECK(std::abs(ps.chi - prev_chi) < 0.2);
        prev_chi = ps.chi;
    }
    CHECK(worst < 1e-12);

    // phase rate law chi' = (qH/2)(1 + r^2), checked away from t = 0
    double worst_rate = 0.0;
    for (int i = 1; i < 150; ++i) {
        const double t = 0.02 * i;
        const double chidot =
            (polar_reduction(p, t + h).chi - polar_reduction(p, t - h).chi) / (2.0 * h);
        const double r = polar_reduction(p, t).r;
        worst_rate = std::max(worst_rate, std::abs(chidot - 0.5 * q * H * (1.0 + r * r)));
    }
    CHECK(worst_rate < 1e-6);
}

}  // TEST_SUITE
