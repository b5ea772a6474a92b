#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "avantsatie/chain.hpp"
#include "avantsatie/solvers.hpp"

namespace avantsatie {

// An authored posture and the direction it looks at as authored.
struct ExpressionPosture {
    std::string name;
    Posture posture;
    Vec3 native_direction;

    // Builds an expression whose native direction is taken from FK; throws
    // ContractViolation if the posture breaks the chain's limits.
    static ExpressionPosture authored(const KinematicChain& chain, std::string name, Posture posture);
    void validate(const KinematicChain& chain) const;
};

// Neutral / Warm / Cold for the default desk chain. Neutral looks 25 deg above
// the horizon; Warm leans back with the head up, Cold hunches with the head down.
std::vector<ExpressionPosture> default_expression_set(const KinematicChain& chain);

const ExpressionPosture& find_expression(const std::vector<ExpressionPosture>& set, const std::string& name);

struct FilterSettings {
    double time_constant = 0.12;     // seconds
    double max_joint_velocity = 3.0; // rad/s

    void validate() const;
};

struct ErikSettings {
    SolverSettings solver{deg_to_rad(1.0), 30};
    double posture_pull = 0.5; // weight pulling each joint back towards the warped posture
    FilterSettings filter;
    WarpSettings warp;

    void validate() const;
};

struct SolveReport {
    double angle_error = 0.0;        // radians between gaze and target
    double posture_divergence = 0.0; // posture_distance to the warped posture
    std::size_t iterations = 0;
    bool converged = false;
};

struct SolveResult {
    Posture posture;
    SolveReport report;
};

// Warp the expression onto the target, then refine under joint limits.
SolveResult erik_solve(const KinematicChain& chain, const ExpressionPosture& expression, const GazeTarget& target,
                       const ErikSettings& settings);

struct FilterState {
    Posture posture;
    std::vector<double> velocity; // rad/s, per joint
};

FilterState make_filter_state(const Posture& posture);

// Exponential smoothing towards `raw` followed by a per-joint velocity cap.
FilterState motion_filter_step(const FilterState& state, const Posture& raw, double dt, const FilterSettings& settings);

struct StreamTick {
    Posture posture;    // filtered, limit-satisfying
    SolveReport report; // from the solve of this tick
    double tracking_error = 0.0; // gaze error of the emitted posture
    bool solve_failed = false;   // degenerate target; the last good posture was reused
};

// Per-tick solve + filter. Exactly one caller may advance an instance.
class PostureStream {
public:
    PostureStream(KinematicChain chain, ErikSettings settings, double dt);

    StreamTick tick(const ExpressionPosture& expression, const GazeTarget& target);

    // Feeds an already solved posture (e.g. from a posture grid) through the filter.
    Posture filter(const Posture& raw);

    const std::optional<FilterState>& state() const { return state_; }
    const KinematicChain& chain() const { return chain_; }
    double dt() const { return dt_; }

private:
    KinematicChain chain_;
    ErikSettings settings_;
    double dt_;
    std::optional<FilterState> state_;
    std::optional<Posture> last_good_;
};

std::vector<StreamTick> solve_stream(const KinematicChain& chain, const std::vector<ExpressionPosture>& expressions,
                                     const std::vector<GazeTarget>& targets, double dt, const ErikSettings& settings);

// "tick,target_yaw_deg,target_pitch_deg,error,divergence" rows.
void write_stream_csv(std::ostream& out, const std::vector<GazeTarget>& targets, const std::vector<StreamTick>& ticks);

} // namespace avantsatie
