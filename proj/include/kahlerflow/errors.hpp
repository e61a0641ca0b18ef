#pragma once

#include <stdexcept>
#include <string>

namespace kahlerflow {

// Base class so callers can catch everything from this library at once.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Point lies outside the coordinate chart (e.g. |z| >= disc radius).
struct ChartDomainError : Error {
    using Error::Error;
};

// Operation asked of a manifold kind that does not support it.
struct WrongKindError : Error {
    using Error::Error;
};

// Trajectory or evaluation ran into the coordinate singularity of the chart.
struct PoleOfChartError : Error {
    using Error::Error;
};

// Closed-form solution requested exactly at the oscillatory/runaway boundary.
struct CriticalRegimeError : Error {
    using Error::Error;
};

// Ill-posed request (zero frequency, tied decay rates, ...).
struct DegenerateError : Error {
    using Error::Error;
};

// Bad or inconsistent configuration input.
struct ConfigError : Error {
    using Error::Error;
};

// Observable fails the metric self-adjointness requirement.
struct NonSelfAdjointError : Error {
    using Error::Error;
};

// State has (numerically) zero norm where a normalized one is needed.
struct ZeroNormError : Error {
    using Error::Error;
};

// Parallel transport shortcut needs a diagonal metric and did not get one.
struct NonDiagonalMetricError : Error {
    using Error::Error;
};

}  // namespace kahlerflow
