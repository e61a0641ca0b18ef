// Reduced charged-particle equations of motion in the holomorphic chart and
// their fixed-step RK4 integration.
//
// State is (z, psi) where psi_mu = p_mu + q A_mu is the covariant momentum.
// On Einstein backgrounds the gauge field enters only through the constant
// mixed tensor H, which is why the reduced system needs no explicit A.
#pragma once

#include <functional>
#include <vector>

#include "kahlerflow/magnetic.hpp"
#include "kahlerflow/manifold.hpp"
#include "kahlerflow/types.hpp"

namespace kahlerflow {

enum class Termination { Completed, BoundaryGuard, PoleOfChart, StepFailure };
const char* to_string(Termination term);

enum class IntegrationMethod { RK4, RK4Richardson };

struct PhaseState {
    CVector z;
    CVector psi;
};

struct PhaseDeriv {
    CVector dz;
    CVector dpsi;
};

struct FlowParams {
    ManifoldSpec spec;
    MagneticSpec mag;
    CVector xi;                // psi(0)
    CVector z0;                // empty means chart origin
    double dt = 1e-3;
    double t_end = 1.0;
    IntegrationMethod method = IntegrationMethod::RK4;
    double stop_radius = 0.999;  // fraction of the chart radius that triggers
                                 // the boundary guard on hyperbolic charts
};

struct Trajectory {
    std::vector<double> t;
    std::vector<CVector> z;
    std::vector<CVector> psi;
    std::vector<double> energy;  // g^{mu nubar} psi_mu psibar_nu per sample
    Termination termination = Termination::Completed;
    double max_step_error = 0.0;  // Richardson estimate; 0 for plain RK4

    size_t size() const { return t.size(); }
};

// Closed-form right-hand side (specialized per manifold kind).
PhaseDeriv eom_rhs(const ManifoldSpec& spec, const MagneticSpec& mag, const PhaseState& state);

// Same derivative assembled from the general tensor contractions; used to
// cross-check the specialized forms.
PhaseDeriv eom_rhs_generic(const ManifoldSpec& spec, const MagneticSpec& mag,
                           const PhaseState& state);

// Conserved energy E = g^{mu nubar} psi_mu psibar_nu.
double hamiltonian(const ManifoldSpec& spec, const PhaseState& state);

// Geometric norm ||psi||^2 = 2E (equals 4|xi|^2 for launches from the origin).
double geometric_norm_sq(const ManifoldSpec& spec, const PhaseState& state);

Trajectory integrate(const FlowParams& params);

// Integrates the unreduced (z, p) system twice: once in the symmetric gauge
// and once with A -> A + df, p(0) -> p(0) - q df for a user-supplied real f.
// Returns the maximum |z - z'| over the run; gauge invariance makes it
// vanish up to integration error.
double gauge_shift_test(const FlowParams& params, const std::function<double(const CVector&)>& f,
                        double fd_step = 1e-5);

}  // namespace kahlerflow
