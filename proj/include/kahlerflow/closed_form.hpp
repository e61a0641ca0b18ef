// Exact orbits of a charged particle in the uniform magnetic 2-form on the
// constant-curvature chart, plus regime classification.
//
// Everything is controlled by the dimensionless ratio
//     k = 4 |xi| / (qH * radius)
// which weighs the launch momentum against the magnetic confinement.
// Positive curvature: always periodic.  Negative curvature: periodic below
// k = 1, runaway towards the chart boundary above it, with degenerate
// behaviour exactly at k = 1.
#pragma once

#include <optional>

#include "kahlerflow/errors.hpp"
#include "kahlerflow/types.hpp"

namespace kahlerflow {

enum class CurvatureSign { Positive, Negative, Flat };
enum class Regime { Quantum, Classical, Critical, GeodesicLimit, SchrodingerLimit };

const char* to_string(CurvatureSign sign);
const char* to_string(Regime regime);

struct ModeParams {
    CurvatureSign sign = CurvatureSign::Flat;
    double radius = 1.0;  // a (positive) or b (negative); ignored for Flat
    double q = 1.0;       // charge
    double H = 0.0;       // mixed-tensor field strength
    CVector xi;           // covariant momentum at the chart origin
};

struct ModeState {
    CVector z;
    CVector psi;
};

struct RegimeReport {
    Regime regime = Regime::Quantum;
    double k = 0.0;              // infinity in the geodesic limit
    double omega_or_mu = 0.0;    // angular frequency (periodic) or growth rate (runaway)
    std::optional<double> period;
    std::optional<double> orbit_length;  // closed-orbit length (positive curvature / flat)
    std::optional<double> blowup_time;   // chart-pole time of the uncharged positive orbit
};

RegimeReport classify(const ModeParams& params, double critical_band = 1e-9);

// Exact orbit on positive curvature (periodic for every k).
ModeState cp_solution(const ModeParams& params, double t);

// Exact orbit on negative curvature; periodic branch (k < 1) and runaway
// branch (k > 1).  Throws CriticalRegimeError inside the critical band.
ModeState ch_solution(const ModeParams& params, double t);

// k -> 0 limit: flat-space cyclotron circle, psi = exp(-i q H t) xi.
ModeState limit_schrodinger(const ModeParams& params, double t);

// k -> infinity (q H -> 0) limit: pure geodesic motion with parallel psi.
ModeState limit_geodesic(const ModeParams& params, double t);

// Dispatch through classify(); the one entry point the engine layers use.
ModeState solve(const ModeParams& params, double t);

// Positive-curvature orbit in factorized form z = radius * r e^{i chi} *
// conj(xi)/|xi| with chi unwrapped continuously across branch points.
struct PolarSample {
    double r = 0.0;    // signed radial factor
    double chi = 0.0;  // continuous phase
};
PolarSample polar_reduction(const ModeParams& params, double t);

}  // namespace kahlerflow
