// Config-driven command layer behind the CLI binary: strict JSON configs in,
// CSV/JSON artifacts out.  Lives in the library so the command paths are
// directly testable.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace kahlerflow::io {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;    // malformed/contradictory configuration
inline constexpr int exit_runtime = 3;   // integration stopped abnormally
inline constexpr int exit_analytic = 4;  // closed form undefined at the request

struct RunOptions {
    std::string out_override;  // overrides output.path when nonempty
    int jobs = 0;              // worker threads; 0 = hardware concurrency
    std::uint64_t seed = 12345;
};

// Known commands: geodesic, flow, closed-form, sweep, collapse, validate.
// Returns one of the exit codes above; human-readable diagnostics go to
// stderr via the logger.
int run_from_file(const std::string& command, const std::string& config_path,
                  const RunOptions& opts);

// The self-check suite behind `kahlerflow validate`; prints one row per
// check and returns true when everything passes.
bool validate_suite(std::uint64_t seed, std::ostream& out);

}  // namespace kahlerflow::io
