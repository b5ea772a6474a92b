#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "avantsatie/erik.hpp"

namespace avantsatie {

struct Envelope {
    double yaw_min_deg = -70.0;
    double yaw_max_deg = 70.0;
    double pitch_min_deg = 0.0;
    double pitch_max_deg = 80.0;
    double step_deg = 10.0;

    void validate() const;
    std::vector<double> yaws() const;
    std::vector<double> pitches() const;
};

struct SweepRow {
    std::string expression;
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    SolveReport report;
    bool within_limits = true;
    double solve_us = 0.0;
};

// Solves every (expression, yaw, pitch) cell; rows come back ordered by
// expression, then pitch, then yaw, whatever the thread count.
std::vector<SweepRow> run_sweep(const KinematicChain& chain, const std::vector<ExpressionPosture>& expressions,
                                const Envelope& envelope, const ErikSettings& settings, std::size_t threads = 0);

// "expression,yaw_deg,pitch_deg,error_deg,divergence_deg,iterations,converged,solve_us"
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

} // namespace avantsatie
