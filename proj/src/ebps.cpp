#include "avantsatie/ebps.hpp"

#include <algorithm>
#include <cmath>

#include "avantsatie/csv.hpp"
#include "avantsatie/errors.hpp"

namespace avantsatie {

namespace {

void require_increasing(const std::vector<double>& knots, const char* what)
{
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i] > knots[i - 1]))
            throw ContractViolation(std::string(what) + " knots must be strictly increasing");
}

// Bracketing knot index and fraction for a clamped query.
struct Bracket {
    std::size_t lo;
    double t;
};

Bracket bracket(const std::vector<double>& knots, double value)
{
    const double v = std::clamp(value, knots.front(), knots.back());
    auto it = std::upper_bound(knots.begin(), knots.end(), v);
    std::size_t hi = static_cast<std::size_t>(it - knots.begin());
    if (hi >= knots.size())
        hi = knots.size() - 1;
    const std::size_t lo = hi - 1;
    return Bracket{lo, (v - knots[lo]) / (knots[hi] - knots[lo])};
}

// Difference b - a travelled inside the joint's admissible interval. Only a
// joint free to turn all the way round takes the shortest arc.
double joint_delta(double a, double b, const JointLimit& limit)
{
    return limit.full_circle() ? wrap_angle(b - a) : b - a;
}

// Knots on either end come back bit-exact.
double blend(double a, double b, double t, const JointLimit& limit)
{
    if (t == 0.0)
        return a;
    if (t == 1.0)
        return b;
    return a + t * joint_delta(a, b, limit);
}

} // namespace

std::vector<double> PostureGrid::standard_yaw_knots_deg()
{
    std::vector<double> knots;
    for (int yaw = -70; yaw <= 70; yaw += 10)
        knots.push_back(yaw);
    return knots;
}

std::vector<double> PostureGrid::standard_pitch_knots_deg()
{
    return {0.0, 80.0};
}

PostureGrid::PostureGrid(std::string expression, std::vector<double> yaw_knots_deg,
                         std::vector<double> pitch_knots_deg, std::vector<Posture> postures,
                         std::vector<JointLimit> limits)
    : expression_(std::move(expression)), yaw_knots_(std::move(yaw_knots_deg)),
      pitch_knots_(std::move(pitch_knots_deg)), postures_(std::move(postures)), limits_(std::move(limits))
{
    if (yaw_knots_.size() != 15 || pitch_knots_.size() != 2)
        throw ContractViolation("posture grid needs 15 yaw knots and 2 pitch knots");
    require_increasing(yaw_knots_, "yaw");
    require_increasing(pitch_knots_, "pitch");
    if (postures_.size() != yaw_knots_.size() * pitch_knots_.size())
        throw ContractViolation("posture grid for '" + expression_ + "' holds " + std::to_string(postures_.size()) +
                                " postures, expected " + std::to_string(yaw_knots_.size() * pitch_knots_.size()));
    for (const Posture& p : postures_) {
        if (p.size() != limits_.size())
            throw ContractViolation("posture grid posture length does not match joint count");
        for (std::size_t j = 0; j < p.size(); ++j)
            if (!limits_[j].contains(p[j], 1e-12))
                throw ContractViolation("posture grid for '" + expression_ + "' stores a posture outside joint limits");
    }
}

const Posture& PostureGrid::at(std::size_t yaw_index, std::size_t pitch_index) const
{
    if (yaw_index >= yaw_knots_.size() || pitch_index >= pitch_knots_.size())
        throw ContractViolation("posture grid knot index out of range");
    return postures_[pitch_index * yaw_knots_.size() + yaw_index];
}

Posture ebps_synthesize(const PostureGrid& grid, double yaw_deg, double pitch_deg)
{
    const Bracket by = bracket(grid.yaw_knots_deg(), yaw_deg);
    const Bracket bp = bracket(grid.pitch_knots_deg(), pitch_deg);

    const Posture& p00 = grid.at(by.lo, bp.lo);
    const Posture& p10 = grid.at(by.lo + 1, bp.lo);
    const Posture& p01 = grid.at(by.lo, bp.lo + 1);
    const Posture& p11 = grid.at(by.lo + 1, bp.lo + 1);

    std::vector<double> out(p00.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const JointLimit& lim = grid.limits()[j];
        const double low = blend(p00[j], p10[j], by.t, lim);
        const double high = blend(p01[j], p11[j], by.t, lim);
        out[j] = blend(low, high, bp.t, lim);
    }
    return Posture(std::move(out));
}

GridBuildError::GridBuildError(const std::string& expression, double yaw, double pitch, double error)
    : std::runtime_error("grid build for '" + expression + "' did not converge at knot yaw " + format_number(yaw) +
                         " deg, pitch " + format_number(pitch) + " deg (error " + format_number(rad_to_deg(error)) +
                         " deg)"),
      yaw_deg(yaw), pitch_deg(pitch)
{
}

PostureGrid build_grid_from_erik(const KinematicChain& chain, const ExpressionPosture& expression,
                                 const ErikSettings& settings)
{
    const auto yaws = PostureGrid::standard_yaw_knots_deg();
    const auto pitches = PostureGrid::standard_pitch_knots_deg();
    std::vector<Posture> postures;
    postures.reserve(yaws.size() * pitches.size());
    for (double pitch : pitches) {
        for (double yaw : yaws) {
            const Vec3 dir = direction_from_yaw_pitch(deg_to_rad(yaw), deg_to_rad(pitch));
            SolveResult r = erik_solve(chain, expression, Direction{dir}, settings);
            if (!r.report.converged)
                throw GridBuildError(expression.name, yaw, pitch, r.report.angle_error);
            postures.push_back(std::move(r.posture));
        }
    }
    std::vector<JointLimit> limits;
    for (const auto& j : chain.joints())
        limits.push_back(j.limit);
    return PostureGrid(expression.name, yaws, pitches, std::move(postures), std::move(limits));
}

} // namespace avantsatie
