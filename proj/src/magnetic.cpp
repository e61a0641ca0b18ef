#include "kahlerflow/magnetic.hpp"

#include <cmath>
#include <sstream>

namespace kahlerflow {

MagneticSpec MagneticSpec::einstein(double kappa, double lambda, double q) {
    return MagneticSpec{kappa, {lambda}, q};
}

MagneticSpec MagneticSpec::uniform(double H, double q) { return MagneticSpec{0.0, {H}, q}; }

MagneticSpec MagneticSpec::per_factor(double kappa, std::vector<double> lambda, double q) {
    return MagneticSpec{kappa, std::move(lambda), q};
}

double MagneticSpec::lambda_at(int mu) const {
    if (lambda.empty()) return 0.0;
    return lambda.size() == 1 ? lambda[0] : lambda[static_cast<size_t>(mu)];
}

void MagneticSpec::validate(const ManifoldSpec& spec) const {
    if (!std::isfinite(kappa) || !std::isfinite(q))
        throw ConfigError("magnetic couplings must be finite");
    for (double l : lambda)
        if (!std::isfinite(l)) throw ConfigError("magnetic couplings must be finite");
    if (lambda.size() != 1 &&
        lambda.size() != static_cast<size_t>(spec.dim)) {
        std::ostringstream os;
        os << "lambda has " << lambda.size() << " entries; expected 1 or " << spec.dim;
        throw ConfigError(os.str());
    }
    if (lambda.size() > 1 && spec.kind != ManifoldKind::Product2D)
        throw ConfigError("per-coordinate lambda only makes sense on product manifolds");
}

RVector h_mix(const ManifoldSpec& spec, const MagneticSpec& mag) {
    mag.validate(spec);
    RVector h(spec.dim);
    if (spec.kind == ManifoldKind::Product2D) {
        for (int mu = 0; mu < spec.dim; ++mu)
            h(mu) = mag.kappa * spec.lambdas[mu] + mag.lambda_at(mu);
    } else {
        const double val = mag.kappa * spec.einstein_constant() + mag.lambda_at(0);
        h.setConstant(val);
    }
    return h;
}

CMatrix field_strength(const ManifoldSpec& spec, const MagneticSpec& mag, const CVector& z) {
    mag.validate(spec);
    const MetricAtPoint mp = metric(spec, z);
    const CurvatureAtPoint cv = curvature(spec, z);
    CMatrix F = mag.kappa * cv.ricci;
    for (int mu = 0; mu < spec.dim; ++mu)
        for (int nu = 0; nu < spec.dim; ++nu) F(mu, nu) += mag.lambda_at(mu) * mp.g(mu, nu);
    return F;
}

double field_scalar_potential(const ManifoldSpec& spec, const MagneticSpec& mag,
                              const CVector& z) {
    mag.validate(spec);
    double N = -mag.kappa * log_det_metric(spec, z);
    if (spec.kind == ManifoldKind::Product2D && mag.lambda.size() > 1) {
        // Per-factor Kaehler potentials.
        for (int mu = 0; mu < spec.dim; ++mu) {
            const double l = spec.lambdas[mu];
            const double rmu = std::norm(z(mu));
            const double Kmu = (l == 0.0) ? 0.5 * rmu : (2.0 / l) * std::log1p(l * rmu / 4.0);
            N += mag.lambda_at(mu) * Kmu;
        }
    } else {
        N += mag.lambda_at(0) * kahler_potential(spec, z);
    }
    return N;
}

CVector gauge_potential(const ManifoldSpec& spec, const MagneticSpec& mag, const CVector& z) {
    mag.validate(spec);
    const CVector dK = grad_kahler_potential(spec, z);
    const CVector dh = grad_log_det_metric(spec, z);
    CVector A(spec.dim);
    for (int mu = 0; mu < spec.dim; ++mu)
        A(mu) = -0.5 * I_UNIT * (mag.lambda_at(mu) * dK(mu) - mag.kappa * dh(mu));
    return A;
}

}  // namespace kahlerflow
