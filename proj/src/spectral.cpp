#include "kahlerflow/spectral.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kahlerflow {

const char* to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::AllQuantum: return "all_quantum";
        case Verdict::Collapse: return "collapse";
        case Verdict::Degenerate: return "degenerate";
    }
    return "?";
}

SpectralSystem SpectralSystem::build(const SpectralInput& input) {
    const int n = static_cast<int>(input.eigenvalues.size());
    if (n < 1) throw ConfigError("spectral system needs at least one mode");
    if (input.xi.size() != n) throw ConfigError("xi and eigenvalues must have equal length");
    for (int j = 0; j < n; ++j) {
        if (!(input.eigenvalues(j) > 0.0)) throw ConfigError("eigenvalues must be positive");
        if (j > 0 && input.eigenvalues(j) < input.eigenvalues(j - 1))
            throw ConfigError("eigenvalues must be nondecreasing");
    }
    if (!(input.xi.norm() > 0.0)) throw ConfigError("xi must be nonzero");
    if (!(input.hbar > 0.0)) throw ConfigError("hbar must be positive");
    if (!(input.mass_m > 0.0) || !(input.mass_M > 0.0))
        throw ConfigError("masses must be positive");
    if (input.radii_override && input.radii_override->size() != n)
        throw ConfigError("radii_override length mismatch");

    SpectralSystem sys;
    sys.in_ = input;
    sys.b_.resize(n);
    sys.k_.resize(n);
    const double axi = input.xi.norm();
    for (int j = 0; j < n; ++j) {
        double b;
        if (input.radii_override) {
            b = (*input.radii_override)(j);
            if (std::isnan(b) || b <= 0.0) throw ConfigError("override radii must be positive");
        } else {
            b = 4.0 * input.hbar * (input.mass_M / input.mass_m) * axi / input.eigenvalues(j);
        }
        sys.b_(j) = b;
        sys.k_(j) = std::isinf(b)
                        ? 0.0
                        : 4.0 * input.hbar * std::abs(input.xi(j)) / (input.eigenvalues(j) * b);
    }
    return sys;
}

ModeParams SpectralSystem::mode_params(int j) const {
    if (j < 0 || j >= n_modes()) throw ConfigError("mode index out of range");
    ModeParams p;
    p.sign = std::isinf(b_(j)) ? CurvatureSign::Flat : CurvatureSign::Negative;
    p.radius = std::isinf(b_(j)) ? 1.0 : b_(j);
    p.q = 1.0 / in_.hbar;
    p.H = in_.eigenvalues(j);
    p.xi = CVector::Constant(1, in_.xi(j));
    return p;
}

std::vector<ModeState> SpectralSystem::evolve(double t) const {
    for (int j = 0; j < n_modes(); ++j) {
        if (classify(mode_params(j)).regime == Regime::Critical) {
            std::ostringstream os;
            os << "mode " << j << " sits in the critical band k = 1";
            throw CriticalRegimeError(os.str());
        }
    }
    std::vector<ModeState> states;
    states.reserve(static_cast<size_t>(n_modes()));
    for (int j = 0; j < n_modes(); ++j) states.push_back(solve(mode_params(j), t));
    return states;
}

CollapseReport SpectralSystem::collapse_report() const {
    CollapseReport rep;
    rep.per_mode.reserve(static_cast<size_t>(n_modes()));
    for (int j = 0; j < n_modes(); ++j) {
        const RegimeReport r = classify(mode_params(j));
        rep.per_mode.push_back(ModeCensusEntry{j, k_(j), r.regime, r.omega_or_mu});
    }

    int dominant = -1;
    for (const ModeCensusEntry& e : rep.per_mode) {
        if (e.regime != Regime::Classical) continue;
        if (dominant < 0 || e.rate > rep.per_mode[static_cast<size_t>(dominant)].rate)
            dominant = e.index;
    }

    if (dominant < 0) {
        rep.verdict = Verdict::AllQuantum;
    } else {
        rep.dominant_mode = dominant;
        const double mu_n = rep.per_mode[static_cast<size_t>(dominant)].rate;
        // Quantum (bounded) competitors count with rate 0; the contest is in
        // exponential growth, which they do not have.
        bool tied = false;
        double tau = 0.0;
        for (const ModeCensusEntry& e : rep.per_mode) {
            if (e.index == dominant) continue;
            const double rate = e.regime == Regime::Classical ? e.rate : 0.0;
            if (mu_n == rate) {
                tied = true;
                break;
            }
            tau = std::max(tau, 1.0 / std::abs(mu_n - rate));
        }
        if (tied) {
            rep.verdict = Verdict::Degenerate;
        } else {
            rep.verdict = Verdict::Collapse;
            if (n_modes() > 1) rep.collapse_time = tau;
        }
    }

    if (!in_.radii_override && in_.mass_m > in_.mass_M) {
        bool consistent = true;
        for (int j = 0; j < n_modes(); ++j)
            if ((k_(j) > 1.0) !=
                amplitude_above_threshold(in_.xi, j, in_.mass_m, in_.mass_M)) {
                consistent = false;
                break;
            }
        rep.threshold_consistent = consistent;
    }
    return rep;
}

double SpectralSystem::l2_norm_sq(double t) const {
    double sum = 0.0;
    for (const ModeState& st : evolve(t)) sum += st.psi.squaredNorm();
    return sum;
}

double SpectralSystem::geometric_norm_sq() const { return 4.0 * in_.xi.squaredNorm(); }

double SpectralSystem::tail_energy(int n) const {
    double sum = 0.0;
    for (int j = std::max(n, 0); j < n_modes(); ++j) sum += std::norm(in_.xi(j));
    return sum;
}

bool amplitude_above_threshold(const CVector& xi, int j, double mass_m, double mass_M) {
    if (!(mass_m > mass_M))
        throw DegenerateError("amplitude threshold needs m > M");
    const double rest = xi.squaredNorm() - std::norm(xi(j));
    const double bound = mass_M * mass_M / (mass_m * mass_m - mass_M * mass_M) * rest;
    return std::norm(xi(j)) > bound;
}

double planck_mass(double G, double hbar, double c) {
    if (!(G > 0.0) || !(hbar > 0.0) || !(c > 0.0))
        throw ConfigError("G, hbar, c must be positive");
    return std::sqrt(hbar * c / G);
}

RVector planck_mass_k(double G, double hbar, double c, double mass_m, const CVector& xi) {
    const double mp = planck_mass(G, hbar, c);
    const double axi = xi.norm();
    if (!(axi > 0.0)) throw ConfigError("xi must be nonzero");
    RVector k(xi.size());
    for (int j = 0; j < xi.size(); ++j) k(j) = (mass_m / mp) * std::abs(xi(j)) / axi;
    return k;
}

}  // namespace kahlerflow
