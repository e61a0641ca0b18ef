// Closed magnetic 2-forms built from the geometry: F = kappa * Ricci +
// lambda o g, together with the global scalar potential N (F = dd N) and the
// symmetric gauge potential A_mu = -(i/2) d_mu N.
//
// On Einstein backgrounds the mixed tensor F g^{-1} is a real constant H per
// coordinate; that constant is what the dynamics and closed-form orbits use.
#pragma once

#include <vector>

#include "kahlerflow/manifold.hpp"
#include "kahlerflow/types.hpp"

namespace kahlerflow {

struct MagneticSpec {
    double kappa = 0.0;          // coupling to the Ricci form
    std::vector<double> lambda;  // coupling(s) to the Kaehler form; one entry,
                                 // or one per factor on product manifolds
    double q = 1.0;              // particle charge

    // F = kappa * Ricci + lambda * g with a single lambda everywhere.
    static MagneticSpec einstein(double kappa, double lambda, double q);
    // Pure Kaehler-form field normalized so the mixed tensor equals H
    // (kappa = 0, lambda = H).
    static MagneticSpec uniform(double H, double q);
    // Independent Kaehler couplings per product factor.
    static MagneticSpec per_factor(double kappa, std::vector<double> lambda, double q);

    double lambda_at(int mu) const;
    void validate(const ManifoldSpec& spec) const;
};

// Mixed-tensor field strengths H_mu (constant over the chart), one per
// coordinate: H_mu = kappa * Lambda_mu + lambda_mu.
RVector h_mix(const ManifoldSpec& spec, const MagneticSpec& mag);

// F(mu, nu) = F_{mu nubar}.
CMatrix field_strength(const ManifoldSpec& spec, const MagneticSpec& mag, const CVector& z);

// Real potential N with F = d dbar N;  N = lambda K - kappa log det g.
double field_scalar_potential(const ManifoldSpec& spec, const MagneticSpec& mag,
                              const CVector& z);

// Symmetric-gauge potential A_mu = -(i/2) d_mu N (the barred component is the
// complex conjugate).
CVector gauge_potential(const ManifoldSpec& spec, const MagneticSpec& mag, const CVector& z);

}  // namespace kahlerflow
