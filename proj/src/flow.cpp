#include "kahlerflow/flow.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kahlerflow/fd.hpp"
#include "kahlerflow/log.hpp"

namespace kahlerflow {

const char* to_string(Termination term) {
    switch (term) {
        case Termination::Completed: return "completed";
        case Termination::BoundaryGuard: return "boundary_guard";
        case Termination::PoleOfChart: return "pole_of_chart";
        case Termination::StepFailure: return "step_failure";
    }
    return "?";
}

namespace {

constexpr double pole_ginv_limit = 1e12;

// Specialized right-hand sides.  qh holds q * H_mu per coordinate.
PhaseDeriv rhs_projective(const ManifoldSpec& spec, const RVector& qh, const PhaseState& st) {
    const double a2 = spec.radius * spec.radius;
    const double s = 1.0 + st.z.squaredNorm() / a2;
    const Complex zp = bilinear(st.z, st.psi);  // sum z^mu psi_mu
    PhaseDeriv d;
    d.dz = 2.0 * s * (st.psi.conjugate() + (std::conj(zp) / a2) * st.z);
    d.dpsi = (-I_UNIT * qh(0)) * st.psi - (2.0 / a2) * s * std::conj(zp) * st.psi -
             (2.0 / a2) * (st.psi.squaredNorm() + std::norm(zp) / a2) * st.z.conjugate();
    return d;
}

PhaseDeriv rhs_hyperbolic(const ManifoldSpec& spec, const RVector& qh, const PhaseState& st) {
    const double b2 = spec.radius * spec.radius;
    const double s = 1.0 - st.z.squaredNorm() / b2;
    const Complex zp = bilinear(st.z, st.psi);
    PhaseDeriv d;
    d.dz = 2.0 * s * (st.psi.conjugate() - (std::conj(zp) / b2) * st.z);
    d.dpsi = (-I_UNIT * qh(0)) * st.psi + (2.0 / b2) * s * std::conj(zp) * st.psi +
             (2.0 / b2) * (st.psi.squaredNorm() - std::norm(zp) / b2) * st.z.conjugate();
    return d;
}

PhaseDeriv rhs_flat(const RVector& qh, const PhaseState& st) {
    PhaseDeriv d;
    d.dz = 2.0 * st.psi.conjugate();
    d.dpsi = CVector(st.psi.size());
    for (int mu = 0; mu < st.psi.size(); ++mu) d.dpsi(mu) = -I_UNIT * qh(mu) * st.psi(mu);
    return d;
}

PhaseDeriv rhs_product(const ManifoldSpec& spec, const RVector& qh, const PhaseState& st) {
    PhaseDeriv d;
    d.dz = CVector(spec.dim);
    d.dpsi = CVector(spec.dim);
    for (int mu = 0; mu < spec.dim; ++mu) {
        const double w = 1.0 + spec.lambdas[mu] * std::norm(st.z(mu)) / 4.0;
        d.dz(mu) = 2.0 * w * w * std::conj(st.psi(mu));
        d.dpsi(mu) = -I_UNIT * qh(mu) * st.psi(mu) -
                     spec.lambdas[mu] * w * std::norm(st.psi(mu)) * std::conj(st.z(mu));
    }
    return d;
}

PhaseDeriv rhs_dispatch(const ManifoldSpec& spec, const RVector& qh, const PhaseState& st) {
    switch (spec.kind) {
        case ManifoldKind::Projective: return rhs_projective(spec, qh, st);
        case ManifoldKind::Hyperbolic: return rhs_hyperbolic(spec, qh, st);
        case ManifoldKind::Flat: return rhs_flat(qh, st);
        case ManifoldKind::Product2D: return rhs_product(spec, qh, st);
    }
    throw Error("unreachable manifold kind");
}

PhaseState advance(const PhaseState& y, const PhaseDeriv& k, double c) {
    return PhaseState{y.z + c * k.dz, y.psi + c * k.dpsi};
}

template <class Rhs>
PhaseState rk4_step(Rhs&& f, const PhaseState& y, double dt) {
    const PhaseDeriv k1 = f(y);
    const PhaseDeriv k2 = f(advance(y, k1, dt / 2));
    const PhaseDeriv k3 = f(advance(y, k2, dt / 2));
    const PhaseDeriv k4 = f(advance(y, k3, dt));
    PhaseState out;
    out.z = y.z + (dt / 6.0) * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
    out.psi = y.psi + (dt / 6.0) * (k1.dpsi + 2.0 * k2.dpsi + 2.0 * k3.dpsi + k4.dpsi);
    return out;
}

bool finite(const PhaseState& st) { return st.z.allFinite() && st.psi.allFinite(); }

// True when z sits on/over the guarded fraction of a hyperbolic chart edge.
bool boundary_hit(const ManifoldSpec& spec, const CVector& z, double stop_radius) {
    switch (spec.kind) {
        case ManifoldKind::Hyperbolic:
            return z.norm() >= stop_radius * spec.radius;
        case ManifoldKind::Product2D:
            for (int mu = 0; mu < spec.dim; ++mu)
                if (spec.lambdas[mu] < 0.0 &&
                    std::abs(z(mu)) >= stop_radius * 2.0 / std::sqrt(-spec.lambdas[mu]))
                    return true;
            return false;
        default:
            return false;
    }
}

}  // namespace

PhaseDeriv eom_rhs(const ManifoldSpec& spec, const MagneticSpec& mag, const PhaseState& state) {
    const RVector qh = mag.q * h_mix(spec, mag);
    return rhs_dispatch(spec, qh, state);
}

PhaseDeriv eom_rhs_generic(const ManifoldSpec& spec, const MagneticSpec& mag,
                           const PhaseState& state) {
    const MetricAtPoint mp = metric(spec, state.z);
    const ChristoffelAtPoint gamma = christoffel(spec, state.z);
    const CMatrix hmix = field_strength(spec, mag, state.z) * mp.g_inv;
    const int m = spec.dim;
    PhaseDeriv d;
    d.dz = (mp.g_inv * state.psi).conjugate();
    d.dpsi = CVector::Zero(m);
    for (int al = 0; al < m; ++al) {
        Complex s = 0.0;
        for (int nu = 0; nu < m; ++nu) s += -I_UNIT * mag.q * hmix(al, nu) * state.psi(nu);
        for (int mu = 0; mu < m; ++mu)
            for (int be = 0; be < m; ++be) s += gamma(mu, al, be) * d.dz(be) * state.psi(mu);
        d.dpsi(al) = s;
    }
    return d;
}

double hamiltonian(const ManifoldSpec& spec, const PhaseState& state) {
    const MetricAtPoint mp = metric(spec, state.z);
    return std::real((state.psi.adjoint() * mp.g_inv * state.psi)(0, 0));
}

double geometric_norm_sq(const ManifoldSpec& spec, const PhaseState& state) {
    return 2.0 * hamiltonian(spec, state);
}

Trajectory integrate(const FlowParams& params) {
    const ManifoldSpec& spec = params.spec;
    if (!(params.dt > 0.0) || !(params.t_end > 0.0))
        throw ConfigError("dt and t_end must be positive");
    if (!(params.stop_radius > 0.0) || params.stop_radius > 1.0)
        throw ConfigError("stop_radius must lie in (0, 1]");
    if (params.xi.size() != spec.dim) throw ConfigError("xi dimension mismatch");
    CVector z0 = params.z0.size() == 0 ? CVector(CVector::Zero(spec.dim)) : params.z0;
    if (z0.size() != spec.dim) throw ConfigError("z0 dimension mismatch");
    if (!spec.in_chart(z0)) throw ChartDomainError("initial point outside chart");
    params.mag.validate(spec);

    const RVector qh = params.mag.q * h_mix(spec, params.mag);
    auto rhs = [&](const PhaseState& st) { return rhs_dispatch(spec, qh, st); };

    const long long n = std::llround(params.t_end / params.dt);
    if (n < 1) throw ConfigError("t_end shorter than one step");
    if (std::abs(static_cast<double>(n) * params.dt - params.t_end) >
        1e-9 * std::max(1.0, params.t_end))
        log::warn("t_end is not an integer number of steps; integrating to n*dt");

    Trajectory traj;
    traj.t.reserve(static_cast<size_t>(n) + 1);
    traj.z.reserve(static_cast<size_t>(n) + 1);
    traj.psi.reserve(static_cast<size_t>(n) + 1);
    traj.energy.reserve(static_cast<size_t>(n) + 1);

    PhaseState state{std::move(z0), params.xi};
    // Records the sample and returns the largest inverse-metric entry (the
    // pole-of-chart indicator); NaN energy if the point left the chart.
    auto record = [&](double t, const PhaseState& st) {
        double energy = std::numeric_limits<double>::quiet_NaN();
        double ginv_max = 0.0;
        if (spec.in_chart(st.z)) {
            const MetricAtPoint mp = metric(spec, st.z);
            energy = std::real((st.psi.adjoint() * mp.g_inv * st.psi)(0, 0));
            ginv_max = mp.g_inv.cwiseAbs().maxCoeff();
        }
        traj.t.push_back(t);
        traj.z.push_back(st.z);
        traj.psi.push_back(st.psi);
        traj.energy.push_back(energy);
        return ginv_max;
    };
    record(0.0, state);

    traj.termination = Termination::Completed;
    for (long long i = 1; i <= n; ++i) {
        PhaseState next;
        try {
            if (params.method == IntegrationMethod::RK4Richardson) {
                const PhaseState full = rk4_step(rhs, state, params.dt);
                PhaseState half = rk4_step(rhs, state, params.dt / 2);
                half = rk4_step(rhs, half, params.dt / 2);
                if (finite(full) && finite(half)) {
                    const double err =
                        std::max((half.z - full.z).cwiseAbs().maxCoeff(),
                                 (half.psi - full.psi).cwiseAbs().maxCoeff()) /
                        15.0;
                    traj.max_step_error = std::max(traj.max_step_error, err);
                }
                next = std::move(half);
            } else {
                next = rk4_step(rhs, state, params.dt);
            }
        } catch (const PoleOfChartError&) {
            traj.termination = Termination::PoleOfChart;
            break;
        } catch (const ChartDomainError&) {
            traj.termination = Termination::BoundaryGuard;
            break;
        } catch (const Error&) {
            traj.termination = Termination::StepFailure;
            break;
        }
        if (!finite(next)) {
            traj.termination = Termination::StepFailure;
            break;
        }

        state = std::move(next);
        const double ginv_max = record(static_cast<double>(i) * params.dt, state);
        if (boundary_hit(spec, state.z, params.stop_radius)) {
            traj.termination = Termination::BoundaryGuard;
            break;
        }
        if (ginv_max > pole_ginv_limit) {
            traj.termination = Termination::PoleOfChart;
            break;
        }
    }
    return traj;
}

namespace {

using GaugeFn = std::function<CVector(const CVector&)>;

// Unreduced (z, p) integration against an explicit gauge-potential callback.
// Derivatives of A are taken by Wirtinger finite differences so canonical
// and shifted gauges run through identical machinery.
std::vector<CVector> integrate_p_system(const FlowParams& params, const GaugeFn& A,
                                        double fd_step) {
    const ManifoldSpec& spec = params.spec;
    const int m = spec.dim;
    const double q = params.mag.q;

    auto rhs = [&](const std::pair<CVector, CVector>& y) {
        const CVector& z = y.first;
        const CVector psi = y.second + q * A(z);
        const MetricAtPoint mp = metric(spec, z);
        const ChristoffelAtPoint gamma = christoffel(spec, z);
        const CVector dz = (mp.g_inv * psi).conjugate();
        CVector dp(m);
        for (int al = 0; al < m; ++al) {
            Complex t1 = 0.0;
            for (int mu = 0; mu < m; ++mu)
                for (int ga = 0; ga < m; ++ga) t1 += gamma(mu, al, ga) * dz(ga) * psi(mu);
            const CVector dA = fd::d1_vec(A, z, al, fd_step);
            const CVector dAbar = fd::d1_bar_vec(A, z, al, fd_step);
            Complex t2 = 0.0;
            for (int mu = 0; mu < m; ++mu) t2 += dA(mu) * dz(mu);
            for (int nu = 0; nu < m; ++nu) t2 += std::conj(dAbar(nu)) * std::conj(dz(nu));
            dp(al) = t1 - q * t2;
        }
        return std::make_pair(dz, dp);
    };

    CVector z = params.z0.size() == 0 ? CVector(CVector::Zero(m)) : params.z0;
    CVector p = params.xi - q * A(z);
    const long long n = std::llround(params.t_end / params.dt);
    std::vector<CVector> zs;
    zs.reserve(static_cast<size_t>(n) + 1);
    zs.push_back(z);
    for (long long i = 1; i <= n; ++i) {
        const auto k1 = rhs({z, p});
        const auto k2 = rhs({z + 0.5 * params.dt * k1.first, p + 0.5 * params.dt * k1.second});
        const auto k3 = rhs({z + 0.5 * params.dt * k2.first, p + 0.5 * params.dt * k2.second});
        const auto k4 = rhs({z + params.dt * k3.first, p + params.dt * k3.second});
        z += (params.dt / 6.0) * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
        p += (params.dt / 6.0) * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
        zs.push_back(z);
    }
    return zs;
}

}  // namespace

double gauge_shift_test(const FlowParams& params, const std::function<double(const CVector&)>& f,
                        double fd_step) {
    params.mag.validate(params.spec);
    if (params.xi.size() != params.spec.dim) throw ConfigError("xi dimension mismatch");

    GaugeFn canonical = [&](const CVector& z) {
        return gauge_potential(params.spec, params.mag, z);
    };
    GaugeFn shifted = [&](const CVector& z) {
        CVector a = gauge_potential(params.spec, params.mag, z);
        for (int mu = 0; mu < params.spec.dim; ++mu) a(mu) += fd::d1(f, z, mu, fd_step);
        return a;
    };

    const std::vector<CVector> run0 = integrate_p_system(params, canonical, fd_step);
    const std::vector<CVector> run1 = integrate_p_system(params, shifted, fd_step);
    double dev = 0.0;
    for (size_t i = 0; i < run0.size(); ++i)
        dev = std::max(dev, (run0[i] - run1[i]).cwiseAbs().maxCoeff());
    return dev;
}

}  // namespace kahlerflow
