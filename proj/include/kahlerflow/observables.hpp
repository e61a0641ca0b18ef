// Observables as matrix fields over the chart: metric self-adjointness,
// expectation values, Born probabilities, and parallel transport of the
// matrix along a trajectory (diagonal-metric fast path).
#pragma once

#include <vector>

#include "kahlerflow/flow.hpp"
#include "kahlerflow/manifold.hpp"
#include "kahlerflow/types.hpp"

namespace kahlerflow {

// max |A^dagger - g^{-1} A g| at the point; zero for metric-self-adjoint A.
double self_adjointness_residual(const ManifoldSpec& spec, const CVector& z, const CMatrix& A);

// <A> = (psi, A psi) / ||psi||^2 with the inverse-metric inner product.
// Rejects observables whose self-adjointness residual exceeds 1e-10.
double expectation(const ManifoldSpec& spec, const PhaseState& state, const CMatrix& A);

struct BornOutcome {
    double eigenvalue = 0.0;
    double probability = 0.0;
};

// Spectral measure of a plain-Hermitian observable at the chart origin;
// outcomes come back with ascending eigenvalues and probabilities that sum
// to one.
std::vector<BornOutcome> born_probabilities(const CMatrix& A, const CVector& psi);

// Parallel transport of A along the trajectory.  Requires a diagonal metric
// (flat space, products of 2-D factors, or one-dimensional charts); the
// transport then factorizes through per-coordinate line integrals
// c_mu = integral dz^mu Gamma_mu and A(t) = e^{c_mu - c_nu} A0.
CMatrix transport(const ManifoldSpec& spec, const Trajectory& traj, const CMatrix& A0);
std::vector<CMatrix> transport_series(const ManifoldSpec& spec, const Trajectory& traj,
                                      const CMatrix& A0);

}  // namespace kahlerflow
