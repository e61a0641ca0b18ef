// Constant-curvature Kaehler chart geometry: metric, Christoffel symbols,
// curvature, geodesics, and finite-difference self-checks.
//
// Supported kinds:
//   Projective  - complex projective space, radius a, one affine chart
//   Hyperbolic  - complex hyperbolic ball, radius b, chart |z| < b
//   Flat        - C^m with the Euclidean Kaehler potential rho/2
//   Product2D   - product of 2-real-dimensional factors with signed
//                 curvature constants Lambda_mu (metric 1/(2(1+L|z|^2/4)^2))
//
// All tensors are returned in the holomorphic chart at a point; see
// types.hpp for the index conventions.
#pragma once

#include <optional>
#include <vector>

#include "kahlerflow/errors.hpp"
#include "kahlerflow/types.hpp"

namespace kahlerflow {

enum class ManifoldKind { Projective, Hyperbolic, Flat, Product2D };

const char* to_string(ManifoldKind kind);

struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::Flat;
    int dim = 1;                   // complex dimension m
    double radius = 1.0;           // Projective: a, Hyperbolic: b (unused otherwise)
    std::vector<double> lambdas;   // Product2D: per-factor curvature constants

    static ManifoldSpec projective(int m, double a);
    static ManifoldSpec hyperbolic(int m, double b);
    static ManifoldSpec flat(int m);
    static ManifoldSpec product2d(std::vector<double> factor_lambdas);

    // True when z lies strictly inside the coordinate chart.  margin shrinks
    // the chart by an absolute amount (used to keep FD stencils inside).
    bool in_chart(const CVector& z, double margin = 0.0) const;

    // Einstein constant Lambda_eff with Ricci = Lambda_eff * g.  Defined for
    // Projective (2(m+1)/a^2), Hyperbolic (-2(m+1)/b^2) and Flat (0).
    // Product2D factors have individual constants; use lambdas directly.
    double einstein_constant() const;

    // Chart volume of the closed positive-curvature 2-D factor, 4*pi/Lambda.
    // Only defined for Product2D factors with Lambda > 0.
    double factor_volume(int mu) const;
};

struct MetricAtPoint {
    CMatrix g;      // g(mu, nu) = g_{mu nubar}
    CMatrix g_inv;  // g_inv(nu, mu) = g^{nubar mu}
};

// Gamma^nu_{mu alpha}, symmetric in (mu, alpha).  Dense storage m^3.
struct ChristoffelAtPoint {
    int dim = 0;
    std::vector<Complex> data;  // index (nu, mu, alpha)

    Complex operator()(int nu, int mu, int alpha) const {
        return data[static_cast<size_t>((nu * dim + mu) * dim + alpha)];
    }
    Complex& at(int nu, int mu, int alpha) {
        return data[static_cast<size_t>((nu * dim + mu) * dim + alpha)];
    }
    // (Gamma(v, w))^nu = Gamma^nu_{mu alpha} v^mu w^alpha
    CVector contract(const CVector& v, const CVector& w) const;
};

struct CurvatureAtPoint {
    int dim = 0;
    std::vector<Complex> riemann;  // index (beta, mu, nu, alpha) = R_{betabar mu nu alphabar}
    CMatrix ricci;                 // ricci(mu, nu) = R_{mu nubar}
    double scalar = 0.0;

    Complex riem(int beta, int mu, int nu, int alpha) const {
        return riemann[static_cast<size_t>(((beta * dim + mu) * dim + nu) * dim + alpha)];
    }
    Complex& riem_at(int beta, int mu, int nu, int alpha) {
        return riemann[static_cast<size_t>(((beta * dim + mu) * dim + nu) * dim + alpha)];
    }
};

// Residuals of the defining Kaehler identities, checked by central
// finite differences with Wirtinger step h.
struct IdentityReport {
    double metric_residual = 0.0;       // max |dd K - g|
    double christoffel_residual = 0.0;  // max |g^{-1} dg - Gamma|
    double ricci_residual = 0.0;        // max |-dd log det g - Lambda g|
};

double kahler_potential(const ManifoldSpec& spec, const CVector& z);
CVector grad_kahler_potential(const ManifoldSpec& spec, const CVector& z);  // d_mu K

MetricAtPoint metric(const ManifoldSpec& spec, const CVector& z);
ChristoffelAtPoint christoffel(const ManifoldSpec& spec, const CVector& z);
CurvatureAtPoint curvature(const ManifoldSpec& spec, const CVector& z);

double log_det_metric(const ManifoldSpec& spec, const CVector& z);
CVector grad_log_det_metric(const ManifoldSpec& spec, const CVector& z);  // d_mu log det g

// Length of the closed geodesics on the positive-curvature space, pi * a.
// Other kinds have no closed geodesics and raise WrongKindError.
double geodesic_length_closed(const ManifoldSpec& spec);

// Unit-energy geodesic through the chart origin with initial velocity u.
CVector geodesic(const ManifoldSpec& spec, const CVector& u, double t);
CVector geodesic_velocity(const ManifoldSpec& spec, const CVector& u, double t);

IdentityReport verify_kahler_identities(const ManifoldSpec& spec, const CVector& z,
                                        double h = 1e-4);

}  // namespace kahlerflow
