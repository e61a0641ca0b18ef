#include "kahlerflow/observables.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

#include "kahlerflow/log.hpp"

namespace kahlerflow {

namespace {

constexpr double self_adjoint_tol = 1e-10;

bool metric_is_diagonal(const ManifoldSpec& spec) {
    switch (spec.kind) {
        case ManifoldKind::Flat:
        case ManifoldKind::Product2D:
            return true;
        case ManifoldKind::Projective:
        case ManifoldKind::Hyperbolic:
            return spec.dim == 1;
    }
    return false;
}

// Cumulative line integrals c_mu(t_i) = int_0^{t_i} dz^mu/dt Gamma_mu dt
// by trapezoid over the recorded samples.
std::vector<CVector> transport_exponents(const ManifoldSpec& spec, const Trajectory& traj) {
    if (!metric_is_diagonal(spec))
        throw NonDiagonalMetricError("factorized transport needs a diagonal metric");
    if (traj.size() == 0) throw ConfigError("empty trajectory");
    const int m = spec.dim;

    double max_spacing = 0.0;
    for (size_t i = 1; i < traj.size(); ++i)
        max_spacing = std::max(max_spacing, traj.t[i] - traj.t[i - 1]);
    if (max_spacing > 1.5e-3)
        log::warn("transport quadrature on a coarse trajectory (dt > 1e-3)");

    std::vector<CVector> c(traj.size());
    c[0] = CVector::Zero(m);
    CVector prev_integrand(m);
    for (size_t i = 0; i < traj.size(); ++i) {
        const MetricAtPoint mp = metric(spec, traj.z[i]);
        const ChristoffelAtPoint gamma = christoffel(spec, traj.z[i]);
        const CVector dz = (mp.g_inv * traj.psi[i]).conjugate();
        CVector integrand(m);
        for (int mu = 0; mu < m; ++mu) integrand(mu) = dz(mu) * gamma(mu, mu, mu);
        if (i > 0)
            c[i] = c[i - 1] +
                   0.5 * (traj.t[i] - traj.t[i - 1]) * (integrand + prev_integrand);
        prev_integrand = std::move(integrand);
    }
    return c;
}

CMatrix apply_exponents(const CMatrix& A0, const CVector& c) {
    const int m = static_cast<int>(c.size());
    CMatrix A(m, m);
    for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) A(mu, nu) = std::exp(c(mu) - c(nu)) * A0(mu, nu);
    return A;
}

}  // namespace

double self_adjointness_residual(const ManifoldSpec& spec, const CVector& z, const CMatrix& A) {
    if (A.rows() != spec.dim || A.cols() != spec.dim)
        throw ConfigError("observable dimension mismatch");
    const MetricAtPoint mp = metric(spec, z);
    return (A.adjoint() - mp.g_inv * A * mp.g).cwiseAbs().maxCoeff();
}

double expectation(const ManifoldSpec& spec, const PhaseState& state, const CMatrix& A) {
    const double residual = self_adjointness_residual(spec, state.z, A);
    if (residual > self_adjoint_tol) {
        std::ostringstream os;
        os << "observable is not metric-self-adjoint (residual " << residual << ")";
        throw NonSelfAdjointError(os.str());
    }
    const MetricAtPoint mp = metric(spec, state.z);
    const double norm_sq = std::real((state.psi.adjoint() * mp.g_inv * state.psi)(0, 0));
    if (!(norm_sq > std::numeric_limits<double>::min()))
        throw ZeroNormError("state has zero norm");
    const double val = std::real((state.psi.adjoint() * mp.g_inv * (A * state.psi))(0, 0));
    return val / norm_sq;
}

std::vector<BornOutcome> born_probabilities(const CMatrix& A, const CVector& psi) {
    if (A.rows() != A.cols() || A.rows() != psi.size())
        throw ConfigError("observable/state dimension mismatch");
    if ((A - A.adjoint()).cwiseAbs().maxCoeff() > self_adjoint_tol)
        throw NonSelfAdjointError("observable is not Hermitian");
    const double norm_sq = psi.squaredNorm();
    if (!(norm_sq > std::numeric_limits<double>::min()))
        throw ZeroNormError("state has zero norm");

    Eigen::SelfAdjointEigenSolver<CMatrix> solver(A);
    if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
    std::vector<BornOutcome> outcomes(static_cast<size_t>(psi.size()));
    for (int i = 0; i < psi.size(); ++i) {
        const Complex amp = solver.eigenvectors().col(i).adjoint() * psi;
        outcomes[static_cast<size_t>(i)] =
            BornOutcome{solver.eigenvalues()(i), std::norm(amp) / norm_sq};
    }
    return outcomes;
}

CMatrix transport(const ManifoldSpec& spec, const Trajectory& traj, const CMatrix& A0) {
    if (A0.rows() != spec.dim || A0.cols() != spec.dim)
        throw ConfigError("observable dimension mismatch");
    return apply_exponents(A0, transport_exponents(spec, traj).back());
}

std::vector<CMatrix> transport_series(const ManifoldSpec& spec, const Trajectory& traj,
                                      const CMatrix& A0) {
    if (A0.rows() != spec.dim || A0.cols() != spec.dim)
        throw ConfigError("observable dimension mismatch");
    const std::vector<CVector> c = transport_exponents(spec, traj);
    std::vector<CMatrix> out;
    out.reserve(c.size());
    for (const CVector& ci : c) out.push_back(apply_exponents(A0, ci));
    return out;
}

}  // namespace kahlerflow
