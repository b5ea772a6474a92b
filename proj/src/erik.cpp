#include "avantsatie/erik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "avantsatie/csv.hpp"
#include "avantsatie/errors.hpp"
#include "rotation_util.hpp"

namespace avantsatie {

ExpressionPosture ExpressionPosture::authored(const KinematicChain& chain, std::string name, Posture posture)
{
    ExpressionPosture e{std::move(name), std::move(posture), Vec3::UnitX()};
    chain.require_matches(e.posture);
    e.native_direction = effector_gaze_direction(chain, e.posture);
    e.validate(chain);
    return e;
}

void ExpressionPosture::validate(const KinematicChain& chain) const
{
    chain.require_matches(posture);
    if (!within_limits(chain, posture))
        throw ContractViolation("expression '" + name + "' violates joint limits");
    if (std::abs(native_direction.norm() - 1.0) > 1e-9)
        throw ContractViolation("expression '" + name + "' native direction is not unit length");
}

std::vector<ExpressionPosture> default_expression_set(const KinematicChain& chain)
{
    if (chain.joint_count() != 5)
        throw ContractViolation("default expressions are authored for the 5-joint desk chain");
    const std::vector<double> neutral{0.0, -10.0, 0.0, -15.0, 0.0};
    const std::vector<double> warm{0.0, -40.0, 0.0, -5.0, 0.0};
    const std::vector<double> cold{0.0, 35.0, 0.0, 0.0, 0.0};
    return {
        ExpressionPosture::authored(chain, "Neutral", Posture::from_degrees(neutral)),
        ExpressionPosture::authored(chain, "Warm", Posture::from_degrees(warm)),
        ExpressionPosture::authored(chain, "Cold", Posture::from_degrees(cold)),
    };
}

const ExpressionPosture& find_expression(const std::vector<ExpressionPosture>& set, const std::string& name)
{
    for (const auto& e : set)
        if (e.name == name)
            return e;
    throw NotFound("no expression named '" + name + "'");
}

void FilterSettings::validate() const
{
    if (!(time_constant > 0.0))
        throw ContractViolation("filter time constant must be positive");
    if (!(max_joint_velocity > 0.0))
        throw ContractViolation("filter velocity cap must be positive");
}

void ErikSettings::validate() const
{
    solver.validate();
    filter.validate();
    if (!(posture_pull >= 0.0 && posture_pull <= 1.0))
        throw ContractViolation("posture pull weight must lie in [0, 1]");
}

namespace {

struct AimState {
    std::vector<Vec3> axes;
    Vec3 gaze;
    Vec3 target;
};

AimState aim_state(const KinematicChain& chain, const std::vector<double>& angles, const GazeTarget& target)
{
    if (const auto* d = std::get_if<Direction>(&target)) {
        auto s = detail::orientation_state(chain, angles);
        return AimState{std::move(s.axes), s.gaze, d->value.normalized()};
    }
    const auto frames = forward_kinematics(chain, Posture(angles));
    AimState s;
    s.axes.resize(chain.joint_count());
    for (std::size_t k = 0; k < chain.joint_count(); ++k)
        s.axes[k] = frames[k].orientation * chain.joint(k).rotation_axis;
    s.gaze = (frames.back().orientation * chain.effector_axis()).normalized();
    s.target = resolve_target_direction(target, frames.back().position);
    return s;
}

double aim_error(const KinematicChain& chain, const std::vector<double>& angles, const GazeTarget& target)
{
    const AimState s = aim_state(chain, angles, target);
    return angle_between(s.gaze, s.target);
}

void aim_joint(const KinematicChain& chain, std::vector<double>& angles, const GazeTarget& target, const Vec3& up,
               std::size_t k, double share)
{
    const AimState s = aim_state(chain, angles, target);
    const auto delta = detail::signed_angle_about(s.axes[k], s.gaze, s.target, up);
    if (delta)
        angles[k] = chain.joint(k).limit.nearest_admissible(angles[k] + share * *delta);
}

// One reaching relaxation in the spirit of FABRIK: a tip-to-root pass then a
// root-to-tip pass, each joint taking an even share of the remaining gaze
// rotation it can express, clamped to its limit.
void aim_relaxation(const KinematicChain& chain, std::vector<double>& angles, const GazeTarget& target,
                    const Vec3& up)
{
    const std::size_t n = chain.joint_count();
    for (std::size_t k = n; k-- > 0;)
        aim_joint(chain, angles, target, up, k, 1.0 / static_cast<double>(k + 1));
    for (std::size_t k = 0; k < n; ++k)
        aim_joint(chain, angles, target, up, k, 1.0 / static_cast<double>(n - k));
}

} // namespace

SolveResult erik_solve(const KinematicChain& chain, const ExpressionPosture& expression, const GazeTarget& target,
                       const ErikSettings& settings)
{
    settings.validate();
    chain.require_matches(expression.posture);

    const Vec3 start_effector = forward_kinematics(chain, expression.posture).back().position;
    const Vec3 warp_direction = resolve_target_direction(target, start_effector);
    const Posture warped = bwcd_warp(chain, expression.posture, warp_direction, settings.warp);

    const Vec3 up = detail::chain_up(chain);
    const Posture clamped = clamp_to_limits(chain, warped);
    std::vector<double> angles(clamped.angles().begin(), clamped.angles().end());

    double error = aim_error(chain, angles, target);
    std::vector<double> best = angles;
    double best_error = error;
    std::size_t iterations = 0;

    while (best_error >= settings.solver.tolerance && iterations < settings.solver.max_iterations) {
        ++iterations;
        aim_relaxation(chain, angles, target, up);
        error = aim_error(chain, angles, target);
        if (error < best_error) {
            best_error = error;
            best = angles;
        }
        if (best_error < settings.solver.tolerance || iterations == settings.solver.max_iterations)
            break;
        for (std::size_t k = 0; k < angles.size(); ++k) {
            const double blended = angles[k] + settings.posture_pull * wrap_angle(warped[k] - angles[k]);
            angles[k] = chain.joint(k).limit.clamp(wrap_angle(blended));
        }
    }

    SolveResult out{iterations == 0 ? clamped : Posture(std::move(best)), {}};
    out.report.angle_error = best_error;
    out.report.posture_divergence = posture_distance(out.posture, warped);
    out.report.iterations = iterations;
    out.report.converged = best_error < settings.solver.tolerance;
    return out;
}

FilterState make_filter_state(const Posture& posture)
{
    return FilterState{posture, std::vector<double>(posture.size(), 0.0)};
}

FilterState motion_filter_step(const FilterState& state, const Posture& raw, double dt, const FilterSettings& settings)
{
    if (!(dt > 0.0))
        throw ContractViolation("filter step needs dt > 0");
    settings.validate();
    if (raw.size() != state.posture.size())
        throw ContractViolation("filter step: posture length mismatch");

    const double alpha = 1.0 - std::exp(-dt / settings.time_constant);
    const double cap = settings.max_joint_velocity * dt;
    std::vector<double> next(raw.size());
    FilterState out{Posture(), std::vector<double>(raw.size(), 0.0)};
    for (std::size_t i = 0; i < raw.size(); ++i) {
        // Plain difference: the step stays inside the interval spanned by the
        // previous and raw angles, so limit intervals are preserved.
        const double step = std::clamp(alpha * (raw[i] - state.posture[i]), -cap, cap);
        next[i] = state.posture[i] + step;
        out.velocity[i] = step / dt;
    }
    out.posture = Posture(std::move(next));
    return out;
}

PostureStream::PostureStream(KinematicChain chain, ErikSettings settings, double dt)
    : chain_(std::move(chain)), settings_(std::move(settings)), dt_(dt)
{
    settings_.validate();
    if (!(dt_ > 0.0))
        throw ContractViolation("stream tick dt must be positive");
}

Posture PostureStream::filter(const Posture& raw)
{
    chain_.require_matches(raw);
    if (!state_)
        state_ = make_filter_state(raw);
    else
        state_ = motion_filter_step(*state_, raw, dt_, settings_.filter);
    return clamp_to_limits(chain_, state_->posture);
}

StreamTick PostureStream::tick(const ExpressionPosture& expression, const GazeTarget& target)
{
    StreamTick out;
    Posture raw;
    try {
        SolveResult solved = erik_solve(chain_, expression, target, settings_);
        raw = solved.posture;
        out.report = solved.report;
        last_good_ = raw;
    } catch (const DegenerateTarget&) {
        out.solve_failed = true;
        out.report.angle_error = std::numeric_limits<double>::quiet_NaN();
        raw = last_good_ ? *last_good_ : (state_ ? state_->posture : clamp_to_limits(chain_, expression.posture));
    }
    out.posture = filter(raw);
    try {
        out.tracking_error = angle_error_to_target(chain_, out.posture, target);
    } catch (const DegenerateTarget&) {
        out.tracking_error = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

std::vector<StreamTick> solve_stream(const KinematicChain& chain, const std::vector<ExpressionPosture>& expressions,
                                     const std::vector<GazeTarget>& targets, double dt, const ErikSettings& settings)
{
    if (expressions.size() != targets.size())
        throw ContractViolation("solve_stream: expression and target streams differ in length");
    PostureStream stream(chain, settings, dt);
    std::vector<StreamTick> ticks;
    ticks.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
        ticks.push_back(stream.tick(expressions[i], targets[i]));
    return ticks;
}

void write_stream_csv(std::ostream& out, const std::vector<GazeTarget>& targets, const std::vector<StreamTick>& ticks)
{
    out << "tick,target_yaw_deg,target_pitch_deg,error,divergence\n";
    for (std::size_t i = 0; i < ticks.size() && i < targets.size(); ++i) {
        double yaw = std::numeric_limits<double>::quiet_NaN();
        double pitch = yaw;
        if (const auto* d = std::get_if<Direction>(&targets[i])) {
            const YawPitch yp = yaw_pitch_of(d->value);
            yaw = rad_to_deg(yp.yaw);
            pitch = rad_to_deg(yp.pitch);
        } else {
            const YawPitch yp = yaw_pitch_of(std::get<Point>(targets[i]).value);
            yaw = rad_to_deg(yp.yaw);
            pitch = rad_to_deg(yp.pitch);
        }
        out << csv_row({std::to_string(i), format_fixed(yaw, 4), format_fixed(pitch, 4),
                        format_number(ticks[i].report.angle_error), format_number(ticks[i].report.posture_divergence)})
            << '\n';
    }
}

} // namespace avantsatie
