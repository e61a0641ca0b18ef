#include "kahlerflow/manifold.hpp"

#include <cmath>
#include <sstream>

#include "kahlerflow/fd.hpp"

namespace kahlerflow {

namespace {

double rho_of(const CVector& z) { return z.squaredNorm(); }

void require_dim(const ManifoldSpec& spec, const CVector& z) {
    if (z.size() != spec.dim) {
        std::ostringstream os;
        os << "point has dimension " << z.size() << ", manifold has " << spec.dim;
        throw ChartDomainError(os.str());
    }
}

void require_chart(const ManifoldSpec& spec, const CVector& z, double margin = 0.0) {
    require_dim(spec, z);
    if (!spec.in_chart(z, margin)) throw ChartDomainError("point outside coordinate chart");
}

// Metric factor of a 2-D constant-curvature piece: 1 / (2 (1 + L rho/4)^2).
double factor_metric(double lambda, double rho) {
    const double w = 1.0 + lambda * rho / 4.0;
    return 1.0 / (2.0 * w * w);
}

}  // namespace

const char* to_string(ManifoldKind kind) {
    switch (kind) {
        case ManifoldKind::Projective: return "cp";
        case ManifoldKind::Hyperbolic: return "ch";
        case ManifoldKind::Flat: return "flat";
        case ManifoldKind::Product2D: return "product2d";
    }
    return "?";
}

ManifoldSpec ManifoldSpec::projective(int m, double a) {
    if (m < 1) throw ConfigError("projective space needs m >= 1");
    if (!(a > 0.0)) throw ConfigError("projective radius must be positive");
    return ManifoldSpec{ManifoldKind::Projective, m, a, {}};
}

ManifoldSpec ManifoldSpec::hyperbolic(int m, double b) {
    if (m < 1) throw ConfigError("hyperbolic space needs m >= 1");
    if (!(b > 0.0)) throw ConfigError("hyperbolic radius must be positive");
    return ManifoldSpec{ManifoldKind::Hyperbolic, m, b, {}};
}

ManifoldSpec ManifoldSpec::flat(int m) {
    if (m < 1) throw ConfigError("flat space needs m >= 1");
    return ManifoldSpec{ManifoldKind::Flat, m, 0.0, {}};
}

ManifoldSpec ManifoldSpec::product2d(std::vector<double> factor_lambdas) {
    if (factor_lambdas.empty()) throw ConfigError("product needs at least one factor");
    for (double l : factor_lambdas)
        if (!std::isfinite(l)) throw ConfigError("factor curvature must be finite");
    ManifoldSpec spec;
    spec.kind = ManifoldKind::Product2D;
    spec.dim = static_cast<int>(factor_lambdas.size());
    spec.radius = 0.0;
    spec.lambdas = std::move(factor_lambdas);
    return spec;
}

bool ManifoldSpec::in_chart(const CVector& z, double margin) const {
    if (!z.allFinite()) return false;
    switch (kind) {
        case ManifoldKind::Projective:
        case ManifoldKind::Flat:
            return true;
        case ManifoldKind::Hyperbolic:
            return z.norm() < radius - margin;
        case ManifoldKind::Product2D:
            for (int mu = 0; mu < dim; ++mu) {
                if (lambdas[mu] < 0.0) {
                    const double edge = 2.0 / std::sqrt(-lambdas[mu]);
                    if (!(std::abs(z(mu)) < edge - margin)) return false;
                }
            }
            return true;
    }
    return false;
}

double ManifoldSpec::einstein_constant() const {
    switch (kind) {
        case ManifoldKind::Projective: return 2.0 * (dim + 1) / (radius * radius);
        case ManifoldKind::Hyperbolic: return -2.0 * (dim + 1) / (radius * radius);
        case ManifoldKind::Flat: return 0.0;
        case ManifoldKind::Product2D:
            throw WrongKindError("product factors carry individual curvature constants");
    }
    return 0.0;
}

double ManifoldSpec::factor_volume(int mu) const {
    if (kind != ManifoldKind::Product2D) throw WrongKindError("factor_volume needs a product manifold");
    if (mu < 0 || mu >= dim) throw ConfigError("factor index out of range");
    if (!(lambdas[mu] > 0.0))
        throw WrongKindError("chart volume is finite only for positive-curvature factors");
    return 4.0 * M_PI / lambdas[mu];
}

double geodesic_length_closed(const ManifoldSpec& spec) {
    if (spec.kind != ManifoldKind::Projective)
        throw WrongKindError("closed geodesics exist only on the positive-curvature space");
    return M_PI * spec.radius;
}

double kahler_potential(const ManifoldSpec& spec, const CVector& z) {
    require_chart(spec, z);
    const double rho = rho_of(z);
    switch (spec.kind) {
        case ManifoldKind::Projective: {
            const double a2 = spec.radius * spec.radius;
            return 0.5 * a2 * std::log1p(rho / a2);
        }
        case ManifoldKind::Hyperbolic: {
            const double b2 = spec.radius * spec.radius;
            return -0.5 * b2 * std::log1p(-rho / b2);
        }
        case ManifoldKind::Flat:
            return 0.5 * rho;
        case ManifoldKind::Product2D: {
            double sum = 0.0;
            for (int mu = 0; mu < spec.dim; ++mu) {
                const double l = spec.lambdas[mu];
                const double rmu = std::norm(z(mu));
                sum += (l == 0.0) ? 0.5 * rmu : (2.0 / l) * std::log1p(l * rmu / 4.0);
            }
            return sum;
        }
    }
    return 0.0;
}

CVector grad_kahler_potential(const ManifoldSpec& spec, const CVector& z) {
    require_chart(spec, z);
    const double rho = rho_of(z);
    switch (spec.kind) {
        case ManifoldKind::Projective: {
            const double a2 = spec.radius * spec.radius;
            return (0.5 * a2 / (a2 + rho)) * z.conjugate();
        }
        case ManifoldKind::Hyperbolic: {
            const double b2 = spec.radius * spec.radius;
            return (0.5 * b2 / (b2 - rho)) * z.conjugate();
        }
        case ManifoldKind::Flat:
            return 0.5 * z.conjugate();
        case ManifoldKind::Product2D: {
            CVector g(spec.dim);
            for (int mu = 0; mu < spec.dim; ++mu) {
                const double w = 1.0 + spec.lambdas[mu] * std::norm(z(mu)) / 4.0;
                g(mu) = 0.5 * std::conj(z(mu)) / w;
            }
            return g;
        }
    }
    return CVector::Zero(spec.dim);
}

MetricAtPoint metric(const ManifoldSpec& spec, const CVector& z) {
    require_chart(spec, z);
    const int m = spec.dim;
    const double rho = rho_of(z);
    MetricAtPoint out;
    switch (spec.kind) {
        case ManifoldKind::Projective: {
            const double a2 = spec.radius * spec.radius;
            const double s = a2 + rho;
            const CMatrix zz = z.conjugate() * z.transpose();  // (mu,nu) = zbar^mu z^nu
            out.g = (a2 / (2.0 * s * s)) * (s * CMatrix::Identity(m, m) - zz);
            out.g_inv = (2.0 * s / (a2 * a2)) * (a2 * CMatrix::Identity(m, m) + zz);
            break;
        }
        case ManifoldKind::Hyperbolic: {
            const double b2 = spec.radius * spec.radius;
            const double s = b2 - rho;
            const CMatrix zz = z.conjugate() * z.transpose();
            out.g = (b2 / (2.0 * s * s)) * (s * CMatrix::Identity(m, m) + zz);
            out.g_inv = (2.0 * s / (b2 * b2)) * (b2 * CMatrix::Identity(m, m) - zz);
            break;
        }
        case ManifoldKind::Flat:
            out.g = 0.5 * CMatrix::Identity(m, m);
            out.g_inv = 2.0 * CMatrix::Identity(m, m);
            break;
        case ManifoldKind::Product2D: {
            out.g = CMatrix::Zero(m, m);
            out.g_inv = CMatrix::Zero(m, m);
            for (int mu = 0; mu < m; ++mu) {
                const double gmu = factor_metric(spec.lambdas[mu], std::norm(z(mu)));
                out.g(mu, mu) = gmu;
                out.g_inv(mu, mu) = 1.0 / gmu;
            }
            break;
        }
    }
    return out;
}

ChristoffelAtPoint christoffel(const ManifoldSpec& spec, const CVector& z) {
    require_chart(spec, z);
    const int m = spec.dim;
    ChristoffelAtPoint gamma;
    gamma.dim = m;
    gamma.data.assign(static_cast<size_t>(m) * m * m, Complex(0.0));
    switch (spec.kind) {
        case ManifoldKind::Projective:
        case ManifoldKind::Hyperbolic: {
            const double r2 = spec.radius * spec.radius;
            const bool pos = spec.kind == ManifoldKind::Projective;
            const double denom = pos ? r2 + rho_of(z) : r2 - rho_of(z);
            const double sign = pos ? -1.0 : 1.0;
            for (int nu = 0; nu < m; ++nu)
                for (int mu = 0; mu < m; ++mu)
                    for (int al = 0; al < m; ++al) {
                        Complex v = 0.0;
                        if (nu == mu) v += std::conj(z(al));
                        if (nu == al) v += std::conj(z(mu));
                        gamma.at(nu, mu, al) = sign * v / denom;
                    }
            break;
        }
        case ManifoldKind::Flat:
            break;
        case ManifoldKind::Product2D:
            for (int mu = 0; mu < m; ++mu) {
                const double l = spec.lambdas[mu];
                const double w = 1.0 + l * std::norm(z(mu)) / 4.0;
                gamma.at(mu, mu, mu) = -0.5 * l * std::conj(z(mu)) / w;
            }
            break;
    }
    return gamma;
}

CVector ChristoffelAtPoint::contract(const CVector& v, const CVector& w) const {
    CVector out = CVector::Zero(dim);
    for (int nu = 0; nu < dim; ++nu) {
        Complex s = 0.0;
        for (int mu = 0; mu < dim; ++mu)
            for (int al = 0; al < dim; ++al) s += (*this)(nu, mu, al) * v(mu) * w(al);
        out(nu) = s;
    }
    return out;
}

CurvatureAtPoint curvature(const ManifoldSpec& spec, const CVector& z) {
    require_chart(spec, z);
    const int m = spec.dim;
    CurvatureAtPoint out;
    out.dim = m;
    out.riemann.assign(static_cast<size_t>(m) * m * m * m, Complex(0.0));
    const MetricAtPoint mp = metric(spec, z);
    switch (spec.kind) {
        case ManifoldKind::Projective:
        case ManifoldKind::Hyperbolic: {
            const double c = (spec.kind == ManifoldKind::Projective ? 2.0 : -2.0) /
                             (spec.radius * spec.radius);
            // R_{betabar mu nu alphabar} = c (g_{betabar mu} g_{nu alphabar}
            //                               + g_{betabar nu} g_{mu alphabar})
            for (int be = 0; be < m; ++be)
                for (int mu = 0; mu < m; ++mu)
                    for (int nu = 0; nu < m; ++nu)
                        for (int al = 0; al < m; ++al)
                            out.riem_at(be, mu, nu, al) =
                                c * (mp.g(mu, be) * mp.g(nu, al) + mp.g(nu, be) * mp.g(mu, al));
            out.ricci = spec.einstein_constant() * mp.g;
            break;
        }
        case ManifoldKind::Flat:
            out.ricci = CMatrix::Zero(m, m);
            break;
        case ManifoldKind::Product2D: {
            out.ricci = CMatrix::Zero(m, m);
            for (int mu = 0; mu < m; ++mu) {
                const double gmu = std::real(mp.g(mu, mu));
                out.riem_at(mu, mu, mu, mu) = spec.lambdas[mu] * gmu * gmu;
                out.ricci(mu, mu) = spec.lambdas[mu] * gmu;
            }
            break;
        }
    }
    out.scalar = 2.0 * std::real((mp.g_inv * out.ricci).trace());
    return out;
}

double log_det_metric(const ManifoldSpec& spec, const CVector& z) {
    require_chart(spec, z);
    const int m = spec.dim;
    const double rho = rho_of(z);
    switch (spec.kind) {
        case ManifoldKind::Projective: {
            const double a2 = spec.radius * spec.radius;
            return (m + 1) * std::log(a2) - m * std::log(2.0) - (m + 1) * std::log(a2 + rho);
        }
        case ManifoldKind::Hyperbolic: {
            const double b2 = spec.radius * spec.radius;
            return (m + 1) * std::log(b2) - m * std::log(2.0) - (m + 1) * std::log(b2 - rho);
        }
        case ManifoldKind::Flat:
            return -m * std::log(2.0);
        case ManifoldKind::Product2D: {
            double sum = 0.0;
            for (int mu = 0; mu < m; ++mu)
                sum += -std::log(2.0) -
                       2.0 * std::log(1.0 + spec.lambdas[mu] * std::norm(z(mu)) / 4.0);
            return sum;
        }
    }
    return 0.0;
}

CVector grad_log_det_metric(const ManifoldSpec& spec, const CVector& z) {
    require_chart(spec, z);
    const int m = spec.dim;
    const double rho = rho_of(z);
    switch (spec.kind) {
        case ManifoldKind::Projective:
            return (-(m + 1) / (spec.radius * spec.radius + rho)) * z.conjugate();
        case ManifoldKind::Hyperbolic:
            return ((m + 1) / (spec.radius * spec.radius - rho)) * z.conjugate();
        case ManifoldKind::Flat:
            return CVector::Zero(m);
        case ManifoldKind::Product2D: {
            CVector g(m);
            for (int mu = 0; mu < m; ++mu) {
                const double l = spec.lambdas[mu];
                const double w = 1.0 + l * std::norm(z(mu)) / 4.0;
                g(mu) = -0.5 * l * std::conj(z(mu)) / w;
            }
            return g;
        }
    }
    return CVector::Zero(m);
}

namespace {

// Scalar geodesic through 0 on a 2-D factor of curvature lambda,
// initial complex velocity u; returns position at time t.
Complex factor_geodesic(double lambda, Complex u, double t, bool velocity) {
    const double au = std::abs(u);
    if (au == 0.0) return velocity ? u : Complex(0.0);
    const Complex dir = u / au;
    if (lambda > 0.0) {
        const double sl = std::sqrt(lambda);
        const double theta = 0.5 * au * sl * t;
        if (std::abs(std::remainder(theta - M_PI / 2.0, M_PI)) < 1e-9)
            throw PoleOfChartError("geodesic reached the pole of the chart");
        const double c = std::cos(theta);
        return velocity ? (u / (c * c)) : Complex((2.0 / sl) * std::tan(theta)) * dir;
    }
    if (lambda < 0.0) {
        const double sl = std::sqrt(-lambda);
        const double theta = 0.5 * au * sl * t;
        const double c = std::cosh(theta);
        return velocity ? (u / (c * c)) : Complex((2.0 / sl) * std::tanh(theta)) * dir;
    }
    return velocity ? u : u * t;
}

}  // namespace

CVector geodesic(const ManifoldSpec& spec, const CVector& u, double t) {
    require_dim(spec, u);
    const double au = u.norm();
    switch (spec.kind) {
        case ManifoldKind::Projective: {
            if (au == 0.0) return CVector::Zero(spec.dim);
            const double theta = au * t / spec.radius;
            if (std::abs(std::remainder(theta - M_PI / 2.0, M_PI)) < 1e-9)
                throw PoleOfChartError("geodesic reached the pole of the chart");
            return (spec.radius * std::tan(theta) / au) * u;
        }
        case ManifoldKind::Hyperbolic: {
            if (au == 0.0) return CVector::Zero(spec.dim);
            const double theta = au * t / spec.radius;
            return (spec.radius * std::tanh(theta) / au) * u;
        }
        case ManifoldKind::Flat:
            return u * t;
        case ManifoldKind::Product2D: {
            CVector z(spec.dim);
            for (int mu = 0; mu < spec.dim; ++mu)
                z(mu) = factor_geodesic(spec.lambdas[mu], u(mu), t, false);
            return z;
        }
    }
    return CVector::Zero(spec.dim);
}

CVector geodesic_velocity(const ManifoldSpec& spec, const CVector& u, double t) {
    require_dim(spec, u);
    const double au = u.norm();
    switch (spec.kind) {
        case ManifoldKind::Projective: {
            if (au == 0.0) return CVector::Zero(spec.dim);
            const double theta = au * t / spec.radius;
            if (std::abs(std::remainder(theta - M_PI / 2.0, M_PI)) < 1e-9)
                throw PoleOfChartError("geodesic reached the pole of the chart");
            const double c = std::cos(theta);
            return u / (c * c);
        }
        case ManifoldKind::Hyperbolic: {
            if (au == 0.0) return CVector::Zero(spec.dim);
            const double c = std::cosh(au * t / spec.radius);
            return u / (c * c);
        }
        case ManifoldKind::Flat:
            return u;
        case ManifoldKind::Product2D: {
            CVector v(spec.dim);
            for (int mu = 0; mu < spec.dim; ++mu)
                v(mu) = factor_geodesic(spec.lambdas[mu], u(mu), t, true);
            return v;
        }
    }
    return CVector::Zero(spec.dim);
}

IdentityReport verify_kahler_identities(const ManifoldSpec& spec, const CVector& z, double h) {
    // The full FD stencil must stay inside the chart.
    require_chart(spec, z, 3.0 * h);
    const int m = spec.dim;
    IdentityReport rep;

    const MetricAtPoint mp = metric(spec, z);
    auto K = [&](const CVector& w) { return kahler_potential(spec, w); };
    for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) {
            const Complex fd = fd::d2_mixed(K, z, mu, nu, h);
            rep.metric_residual = std::max(rep.metric_residual, std::abs(fd - mp.g(mu, nu)));
        }

    // Gamma^nu_{mu alpha} = g^{nubar beta} ... contracted from d_mu g_{alpha betabar}.
    const ChristoffelAtPoint gamma = christoffel(spec, z);
    for (int mu = 0; mu < m; ++mu) {
        CMatrix dg(m, m);  // dg(alpha, beta) = d_mu g_{alpha betabar}
        for (int al = 0; al < m; ++al)
            for (int be = 0; be < m; ++be) {
                auto entry_re = [&](const CVector& w) { return std::real(metric(spec, w).g(al, be)); };
                auto entry_im = [&](const CVector& w) { return std::imag(metric(spec, w).g(al, be)); };
                dg(al, be) = fd::d1(entry_re, z, mu, h) + I_UNIT * fd::d1(entry_im, z, mu, h);
            }
        for (int nu = 0; nu < m; ++nu)
            for (int al = 0; al < m; ++al) {
                Complex fdval = 0.0;
                for (int be = 0; be < m; ++be) fdval += mp.g_inv(be, nu) * dg(al, be);
                rep.christoffel_residual =
                    std::max(rep.christoffel_residual, std::abs(fdval - gamma(nu, mu, al)));
            }
    }

    // Einstein property via FD Ricci: -d_mu d_nubar log det g == Lambda g.
    auto logdet = [&](const CVector& w) {
        return std::log(std::abs(metric(spec, w).g.determinant()));
    };
    for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) {
            const Complex ricci_fd = -fd::d2_mixed(logdet, z, mu, nu, h);
            const double lam = spec.kind == ManifoldKind::Product2D
                                   ? (mu == nu ? spec.lambdas[mu] : 0.0)
                                   : spec.einstein_constant();
            const Complex target = (spec.kind == ManifoldKind::Product2D && mu != nu)
                                       ? Complex(0.0)
                                       : lam * mp.g(mu, nu);
            rep.ricci_residual = std::max(rep.ricci_residual, std::abs(ricci_fd - target));
        }
    return rep;
}

}  // namespace kahlerflow
