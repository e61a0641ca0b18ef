// Diagonalized mode system: one negative-curvature (or flat) 2-D factor per
// eigenvalue, radii tied to the mass ratio, and the resulting
// quantum/classical census with collapse verdict.
//
// Mode j carries k_j = 4 hbar |xi_j| / (H_j b_j); with the mass rule
// b_j = 4 hbar (M/m) |xi| / H_j this reduces to k_j = (m/M) |xi_j|/|xi|.
// Modes with k_j > 1 run away exponentially at rate mu_j and out-compete the
// bounded quantum modes; the fastest one dominates after ~tau_c.
#pragma once

#include <optional>
#include <vector>

#include "kahlerflow/closed_form.hpp"
#include "kahlerflow/types.hpp"

namespace kahlerflow {

struct SpectralInput {
    RVector eigenvalues;  // H_j > 0, nondecreasing
    CVector xi;           // initial mode amplitudes, |xi| > 0
    double hbar = 1.0;
    double mass_m = 1.0;  // system mass
    double mass_M = 1.0;  // reference mass in the radius rule
    std::optional<RVector> radii_override;  // explicit b_j (entries may be +inf)
};

enum class Verdict { AllQuantum, Collapse, Degenerate };
const char* to_string(Verdict verdict);

struct ModeCensusEntry {
    int index = 0;  // zero-based mode index
    double k = 0.0;
    Regime regime = Regime::Quantum;
    double rate = 0.0;  // omega (quantum) or mu (classical); 0 for critical
};

struct CollapseReport {
    Verdict verdict = Verdict::AllQuantum;
    std::optional<int> dominant_mode;
    std::optional<double> collapse_time;  // tau_c = max_{j != N} 1/|mu_N - rate_j|
    std::vector<ModeCensusEntry> per_mode;
    // Agreement between k_j > 1 and the explicit amplitude threshold; only
    // meaningful under the mass rule with m > M.
    std::optional<bool> threshold_consistent;
};

class SpectralSystem {
  public:
    static SpectralSystem build(const SpectralInput& input);

    int n_modes() const { return static_cast<int>(in_.eigenvalues.size()); }
    double k(int j) const { return k_(j); }
    double radius(int j) const { return b_(j); }
    const SpectralInput& input() const { return in_; }

    // Scalar single-mode parameters for the closed-form layer.
    ModeParams mode_params(int j) const;

    // Exact per-mode states at time t (scalar z_j, psi_j each).
    std::vector<ModeState> evolve(double t) const;

    CollapseReport collapse_report() const;

    double l2_norm_sq(double t) const;  // sum_j |psi_j(t)|^2 (grows on collapse)
    double geometric_norm_sq() const;   // 4 sum_j |xi_j|^2 (conserved)
    double tail_energy(int n) const;    // sum_{j >= n} |xi_j|^2

  private:
    SpectralInput in_;
    RVector b_;  // per-mode radii
    RVector k_;  // per-mode ratios
};

// Threshold form of k_j > 1 under the mass rule (requires m > M):
// |xi_j|^2 > M^2/(m^2 - M^2) * sum_{i != j} |xi_i|^2.
bool amplitude_above_threshold(const CVector& xi, int j, double mass_m, double mass_M);

// Gravitational reading of the ratio: k_j = sqrt(G m^2/(hbar c)) |xi_j|/|xi|,
// i.e. k_j = (m / M_planck) |xi_j|/|xi| with M_planck = sqrt(hbar c / G).
double planck_mass(double G, double hbar, double c);
RVector planck_mass_k(double G, double hbar, double c, double mass_m, const CVector& xi);

}  // namespace kahlerflow
