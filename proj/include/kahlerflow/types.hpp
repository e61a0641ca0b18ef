// Shared scalar/vector aliases for holomorphic-chart data.
//
// Convention used throughout: a point is the column vector of holomorphic
// coordinates z^mu; covectors (momenta, gauge potentials) are stored with
// their *unbarred* index, the barred component being the conjugate.  Metric
// data uses
//   G(mu, nu)    = g_{mu nubar}          (Hermitian positive definite)
//   Ginv(nu, mu) = g^{nubar mu}          (so G * Ginv == identity)
#pragma once

#include <Eigen/Dense>
#include <complex>

namespace kahlerflow {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr int api_version = 1;

inline constexpr Complex I_UNIT{0.0, 1.0};

// Bilinear pairing sum_mu a^mu b_mu (no conjugation).
inline Complex bilinear(const CVector& a, const CVector& b) {
    return (a.array() * b.array()).sum();
}

}  // namespace kahlerflow
