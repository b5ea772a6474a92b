#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "avantsatie/chain.hpp"
#include "avantsatie/erik.hpp"

namespace avantsatie {

// Authored postures of one expression on a (yaw, pitch) knot lattice.
// Postures are stored pitch-major: index = pitch_index * yaw_count + yaw_index.
class PostureGrid {
public:
    // Yaw -70..70 deg step 10 (15 knots), pitch {0, 80} deg.
    static std::vector<double> standard_yaw_knots_deg();
    static std::vector<double> standard_pitch_knots_deg();

    PostureGrid(std::string expression, std::vector<double> yaw_knots_deg, std::vector<double> pitch_knots_deg,
                std::vector<Posture> postures, std::vector<JointLimit> limits);

    const std::string& expression() const { return expression_; }
    const std::vector<double>& yaw_knots_deg() const { return yaw_knots_; }
    const std::vector<double>& pitch_knots_deg() const { return pitch_knots_; }
    const std::vector<Posture>& postures() const { return postures_; }
    const std::vector<JointLimit>& limits() const { return limits_; }
    std::size_t knot_count() const { return postures_.size(); }

    const Posture& at(std::size_t yaw_index, std::size_t pitch_index) const;

private:
    std::string expression_;
    std::vector<double> yaw_knots_;
    std::vector<double> pitch_knots_;
    std::vector<Posture> postures_;
    std::vector<JointLimit> limits_;
};

// Bilinear interpolation between the knots around (yaw, pitch); queries
// outside the knot range are clamped onto it.
Posture ebps_synthesize(const PostureGrid& grid, double yaw_deg, double pitch_deg);

class GridBuildError : public std::runtime_error {
public:
    GridBuildError(const std::string& expression, double yaw_deg, double pitch_deg, double error);
    double yaw_deg;
    double pitch_deg;
};

PostureGrid build_grid_from_erik(const KinematicChain& chain, const ExpressionPosture& expression,
                                 const ErikSettings& settings);

} // namespace avantsatie
