#include "kahlerflow/closed_form.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kahlerflow {

const char* to_string(CurvatureSign sign) {
    switch (sign) {
        case CurvatureSign::Positive: return "positive";
        case CurvatureSign::Negative: return "negative";
        case CurvatureSign::Flat: return "flat";
    }
    return "?";
}

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::Quantum: return "quantum";
        case Regime::Classical: return "classical";
        case Regime::Critical: return "critical";
        case Regime::GeodesicLimit: return "geodesic_limit";
        case Regime::SchrodingerLimit: return "schrodinger_limit";
    }
    return "?";
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_radius(const ModeParams& p) {
    if (p.sign != CurvatureSign::Flat && !(p.radius > 0.0))
        throw ConfigError("curved mode needs a positive radius");
}

// The dynamics depend on q and H only through s = qH, and conjugating the
// chart maps s -> -s with xi -> conj(xi).  All solution cores below assume
// s > 0; this helper performs the reflection when s < 0.
struct Normalized {
    ModeParams params;
    bool conjugated = false;
};

Normalized normalize(const ModeParams& p) {
    Normalized n{p, false};
    if (p.q * p.H < 0.0) {
        n.params.H = -p.H;
        n.params.xi = p.xi.conjugate();
        n.conjugated = true;
    }
    return n;
}

ModeState maybe_conjugate(ModeState st, bool conjugated) {
    if (conjugated) {
        st.z = st.z.conjugate();
        st.psi = st.psi.conjugate();
    }
    return st;
}

ModeState zero_state(const ModeParams& p) {
    return ModeState{CVector::Zero(p.xi.size()), CVector::Zero(p.xi.size())};
}

// Positive-curvature core, s = qH > 0, |xi| > 0.
ModeState cp_core(const ModeParams& p, double t) {
    const double s = p.q * p.H;
    const double axi = p.xi.norm();
    const double k = 4.0 * axi / (s * p.radius);
    const double root = std::sqrt(1.0 + k * k);
    const double omega = 0.5 * s * root;
    const double c2 = std::cos(2.0 * omega * t);
    const double s2 = std::sin(2.0 * omega * t);
    const Complex zeta =
        k * (I_UNIT * (1.0 - c2) + root * s2) / (2.0 + k * k + k * k * c2);
    const Complex phase =
        std::pow(Complex(std::cos(omega * t), -std::sin(omega * t) / root), 2);
    ModeState st;
    st.z = (p.radius * zeta / axi) * p.xi.conjugate();
    st.psi = phase * p.xi;
    return st;
}

// Negative-curvature periodic core, s > 0, 0 < k < 1.
ModeState ch_core_quantum(const ModeParams& p, double t) {
    const double s = p.q * p.H;
    const double axi = p.xi.norm();
    const double k = 4.0 * axi / (s * p.radius);
    const double root = std::sqrt(1.0 - k * k);
    const double omega = 0.5 * s * root;
    const double c2 = std::cos(2.0 * omega * t);
    const double s2 = std::sin(2.0 * omega * t);
    const Complex zeta =
        k * (I_UNIT * (1.0 - c2) + root * s2) / (2.0 - k * k - k * k * c2);
    const Complex phase =
        std::pow(Complex(std::cos(omega * t), -std::sin(omega * t) / root), 2);
    ModeState st;
    st.z = (p.radius * zeta / axi) * p.xi.conjugate();
    st.psi = phase * p.xi;
    return st;
}

// Negative-curvature runaway core, s > 0, k > 1, t >= 0.  Uses the form
// scaled by exp(-2 mu t) so hyperbolic overflow cannot occur before |psi|
// itself overflows.
ModeState ch_core_classical_nonneg(const ModeParams& p, double t) {
    const double s = p.q * p.H;
    const double axi = p.xi.norm();
    const double k = 4.0 * axi / (s * p.radius);
    const double root = std::sqrt(k * k - 1.0);
    const double mu = 0.5 * s * root;
    const double em = std::exp(-2.0 * mu * t);
    const Complex num = I_UNIT * (1.0 - em) * (1.0 - em) + root * (1.0 - em * em);
    const double den = k * k * (1.0 + em * em) + (2.0 * k * k - 4.0) * em;
    const Complex zeta = k * num / den;
    // phase = (cosh mu t - i sinh mu t / root)^2, written with the growth
    // factored out:  e^{2 mu t}/4 * ((1+em) - i (1-em)/root)^2
    const Complex base = Complex(1.0 + em, -(1.0 - em) / root);
    const Complex phase = 0.25 * std::exp(2.0 * mu * t) * base * base;
    ModeState st;
    st.z = (p.radius * zeta / axi) * p.xi.conjugate();
    st.psi = phase * p.xi;
    return st;
}

ModeState ch_core_classical(const ModeParams& p, double t) {
    if (t >= 0.0) return ch_core_classical_nonneg(p, t);
    // Time reflection: z(-t) = -conj(z(t)), psi(-t) = conj(psi(t)).
    ModeState st = ch_core_classical_nonneg(p, -t);
    st.z = -st.z.conjugate();
    st.psi = st.psi.conjugate();
    return st;
}

}  // namespace

RegimeReport classify(const ModeParams& p, double critical_band) {
    require_radius(p);
    const double s = std::abs(p.q * p.H);
    const double axi = p.xi.norm();
    RegimeReport rep;

    if (s == 0.0) {
        rep.regime = Regime::GeodesicLimit;
        rep.k = inf;
        rep.omega_or_mu = 0.0;
        if (axi > 0.0 && p.sign == CurvatureSign::Positive) {
            rep.blowup_time = p.radius * M_PI / (4.0 * axi);
            rep.period = M_PI * p.radius / (2.0 * axi);
            rep.orbit_length = M_PI * p.radius;
        }
        return rep;
    }
    if (axi == 0.0) {
        rep.regime = Regime::SchrodingerLimit;
        rep.k = 0.0;
        rep.omega_or_mu = 0.5 * s;
        rep.period = M_PI / rep.omega_or_mu;
        return rep;
    }

    switch (p.sign) {
        case CurvatureSign::Flat: {
            rep.regime = Regime::Quantum;
            rep.k = 0.0;
            rep.omega_or_mu = 0.5 * s;
            rep.period = M_PI / rep.omega_or_mu;
            rep.orbit_length = 4.0 * M_PI * axi / s;
            break;
        }
        case CurvatureSign::Positive: {
            rep.k = 4.0 * axi / (s * p.radius);
            const double root = std::sqrt(1.0 + rep.k * rep.k);
            rep.regime = Regime::Quantum;
            rep.omega_or_mu = 0.5 * s * root;
            rep.period = M_PI / rep.omega_or_mu;
            rep.orbit_length = M_PI * p.radius * rep.k / root;
            break;
        }
        case CurvatureSign::Negative: {
            rep.k = 4.0 * axi / (s * p.radius);
            if (std::abs(rep.k - 1.0) <= critical_band) {
                rep.regime = Regime::Critical;
                rep.omega_or_mu = 0.0;
            } else if (rep.k < 1.0) {
                rep.regime = Regime::Quantum;
                rep.omega_or_mu = 0.5 * s * std::sqrt(1.0 - rep.k * rep.k);
                rep.period = M_PI / rep.omega_or_mu;
            } else {
                rep.regime = Regime::Classical;
                rep.omega_or_mu = 0.5 * s * std::sqrt(rep.k * rep.k - 1.0);
            }
            break;
        }
    }
    return rep;
}

ModeState cp_solution(const ModeParams& params, double t) {
    require_radius(params);
    if (params.sign != CurvatureSign::Positive)
        throw WrongKindError("cp_solution needs positive curvature");
    if (params.q * params.H == 0.0)
        throw DegenerateError("qH = 0 has no cyclotron orbit; use limit_geodesic");
    if (params.xi.norm() == 0.0) return zero_state(params);
    const Normalized n = normalize(params);
    return maybe_conjugate(cp_core(n.params, t), n.conjugated);
}

ModeState ch_solution(const ModeParams& params, double t) {
    require_radius(params);
    if (params.sign != CurvatureSign::Negative)
        throw WrongKindError("ch_solution needs negative curvature");
    if (params.q * params.H == 0.0)
        throw DegenerateError("qH = 0 has no cyclotron orbit; use limit_geodesic");
    if (params.xi.norm() == 0.0) return zero_state(params);
    const Normalized n = normalize(params);
    const double s = n.params.q * n.params.H;
    const double k = 4.0 * n.params.xi.norm() / (s * n.params.radius);
    if (std::abs(k - 1.0) <= 1e-9) {
        std::ostringstream os;
        os << "k = " << k << " lies in the critical band; no oscillatory/runaway form applies";
        throw CriticalRegimeError(os.str());
    }
    const ModeState st = k < 1.0 ? ch_core_quantum(n.params, t) : ch_core_classical(n.params, t);
    return maybe_conjugate(st, n.conjugated);
}

ModeState limit_schrodinger(const ModeParams& params, double t) {
    const double s = params.q * params.H;
    if (s == 0.0) throw DegenerateError("qH = 0: no cyclotron frequency");
    ModeState st;
    // Valid for either sign of s: the flat-space circle.
    st.z = (4.0 / s) * std::sin(0.5 * s * t) * std::exp(I_UNIT * (0.5 * s * t)) *
           params.xi.conjugate();
    st.psi = std::exp(-I_UNIT * (s * t)) * params.xi;
    return st;
}

ModeState limit_geodesic(const ModeParams& params, double t) {
    require_radius(params);
    const double axi = params.xi.norm();
    if (axi == 0.0) return ModeState{CVector::Zero(params.xi.size()), params.xi};
    const CVector dir = params.xi.conjugate() / axi;
    ModeState st;
    switch (params.sign) {
        case CurvatureSign::Positive: {
            const double theta = 2.0 * axi * t / params.radius;
            if (std::abs(std::remainder(theta - M_PI / 2.0, M_PI)) < 1e-9)
                throw PoleOfChartError("geodesic limit reached the pole of the chart");
            const double c = std::cos(theta);
            st.z = (params.radius * std::tan(theta)) * dir;
            st.psi = (c * c) * params.xi;
            break;
        }
        case CurvatureSign::Negative: {
            const double theta = 2.0 * axi * t / params.radius;
            const double c = std::cosh(theta);
            st.z = (params.radius * std::tanh(theta)) * dir;
            st.psi = (c * c) * params.xi;
            break;
        }
        case CurvatureSign::Flat:
            st.z = (2.0 * t) * dir * axi;
            st.psi = params.xi;
            break;
    }
    return st;
}

ModeState solve(const ModeParams& params, double t) {
    const RegimeReport rep = classify(params);
    switch (rep.regime) {
        case Regime::GeodesicLimit:
            return limit_geodesic(params, t);
        case Regime::SchrodingerLimit:
            return zero_state(params);
        case Regime::Critical:
            throw CriticalRegimeError("mode sits in the critical band k = 1");
        case Regime::Quantum:
        case Regime::Classical:
            switch (params.sign) {
                case CurvatureSign::Positive: return cp_solution(params, t);
                case CurvatureSign::Negative: return ch_solution(params, t);
                case CurvatureSign::Flat: return limit_schrodinger(params, t);
            }
    }
    throw Error("unreachable regime");
}

PolarSample polar_reduction(const ModeParams& params, double t) {
    require_radius(params);
    if (params.sign != CurvatureSign::Positive)
        throw WrongKindError("polar reduction applies to the positive-curvature orbit");
    if (params.q * params.H == 0.0 || params.xi.norm() == 0.0)
        throw DegenerateError("polar reduction needs qH != 0 and |xi| > 0");
    const Normalized n = normalize(params);
    const double s = n.params.q * n.params.H;
    const double axi = n.params.xi.norm();
    const double k = 4.0 * axi / (s * n.params.radius);
    const double root = std::sqrt(1.0 + k * k);
    const double omega = 0.5 * s * root;
    const double wt = omega * t;
    const double cw = std::cos(wt);
    const double sw = std::sin(wt);

    PolarSample out;
    out.r = k * sw / std::sqrt(1.0 + k * k * cw * cw);
    // chi = atan(tan(wt)/root) continued across branch points: n-th branch
    // for wt in ((n-1/2) pi, (n+1/2) pi).
    const double local = std::atan(sw / (root * cw));  // +-pi/2 at the pole of tan
    double frac = wt / M_PI + 0.5;
    double branch = std::floor(frac);
    const double rem = frac - branch;
    // Guard the floating-point boundary: rem and the local angle must agree.
    if (rem < 0.25 && local > M_PI / 4.0) branch -= 1.0;
    if (rem > 0.75 && local < -M_PI / 4.0) branch += 1.0;
    out.chi = local + branch * M_PI;
    if (n.conjugated) out.chi = -out.chi;
    return out;
}

}  // namespace kahlerflow
