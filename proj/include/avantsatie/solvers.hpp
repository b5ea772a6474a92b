#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "avantsatie/chain.hpp"

namespace avantsatie {

struct SolverSettings {
    double tolerance = 1e-3; // meters for position goals, radians for orientation goals
    std::size_t max_iterations = 50;

    void validate() const;
};

// Outcome of a positional (CCD / FABRIK) solve.
struct ReachReport {
    double position_error = 0.0; // meters, effector to target
    std::size_t iterations = 0;
    bool converged = false;
    // Error before the first iteration followed by the error after each one.
    std::vector<double> error_trace;
};

struct ReachResult {
    Posture posture;
    ReachReport report;
};

// Cyclic coordinate descent, tip to root, each joint kept inside its limit.
ReachResult ccd_solve(const KinematicChain& chain, const Posture& start, const Point& target,
                      const SolverSettings& settings);

// FABRIK point relaxation; joint angles are re-extracted from the relaxed points
// and clamped during the forward pass. Returns the best posture seen.
ReachResult fabrik_solve(const KinematicChain& chain, const Posture& start, const Point& target,
                         const SolverSettings& settings);

struct WarpSettings {
    double tolerance = 1e-3; // radians
    std::size_t max_sweeps = 200;
};

// Rotates `expression` so its gaze points along `target_direction`, spreading
// the rotation over all joints root to tip. Joint limits are ignored.
Posture bwcd_warp(const KinematicChain& chain, const Posture& expression, const Vec3& target_direction,
                  const WarpSettings& settings = {});

// Same as bwcd_warp; `error_trace` receives the gaze error before the first
// sweep and after each one.
Posture bwcd_warp_traced(const KinematicChain& chain, const Posture& expression, const Vec3& target_direction,
                         const WarpSettings& settings, std::vector<double>& error_trace);

// Writes "iteration,error" rows.
void write_trace_csv(std::ostream& out, const std::vector<double>& error_trace);

} // namespace avantsatie
