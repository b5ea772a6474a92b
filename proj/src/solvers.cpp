#include "avantsatie/solvers.hpp"

#include <cmath>
#include <ostream>

#include "avantsatie/csv.hpp"
#include "avantsatie/errors.hpp"
#include "rotation_util.hpp"

namespace avantsatie {

namespace detail {

std::optional<double> signed_angle_about(const Vec3& axis, const Vec3& from, const Vec3& to, const Vec3& up)
{
    const Vec3 f = from - axis * axis.dot(from);
    const Vec3 t = to - axis * axis.dot(to);
    const double fn = f.norm();
    const double tn = t.norm();
    if (fn < 1e-12 || tn < 1e-12)
        return std::nullopt;
    const double s = axis.dot(f.cross(t));
    const double c = f.dot(t);
    if (c < 0.0 && std::abs(s) <= 1e-15 * fn * tn)
        return axis.dot(up) >= 0.0 ? kPi : -kPi;
    return std::atan2(s, c);
}

Vec3 alignment_rotation(const Vec3& from, const Vec3& to, const Vec3& up)
{
    const double angle = angle_between(from, to);
    if (angle < 1e-15)
        return Vec3::Zero();
    Vec3 axis = from.cross(to);
    if (axis.norm() < 1e-12 * std::max(1.0, angle)) {
        // Half turn: any axis normal to `from` works; take the one closest to up.
        axis = up - from * from.dot(up);
        if (axis.norm() < 1e-12)
            axis = from.unitOrthogonal();
    }
    return angle * axis.normalized();
}

OrientationState orientation_state(const KinematicChain& chain, std::span<const double> angles)
{
    OrientationState out;
    out.axes.resize(chain.joint_count());
    Quat q = chain.base().orientation;
    for (std::size_t i = 0; i < chain.joint_count(); ++i) {
        const Vec3& local = chain.joint(i).rotation_axis;
        out.axes[i] = q * local;
        q = (q * Quat(Eigen::AngleAxisd(angles[i], local))).normalized();
    }
    out.gaze = (q * chain.effector_axis()).normalized();
    return out;
}

} // namespace detail

namespace {

double reach_error(const KinematicChain& chain, const std::vector<double>& angles, const Vec3& target)
{
    return (forward_kinematics(chain, Posture(angles)).back().position - target).norm();
}

} // namespace

void SolverSettings::validate() const
{
    if (!(tolerance > 0.0))
        throw ContractViolation("solver tolerance must be positive");
    if (max_iterations < 1)
        throw ContractViolation("solver max_iterations must be at least 1");
}

ReachResult ccd_solve(const KinematicChain& chain, const Posture& start, const Point& target,
                      const SolverSettings& settings)
{
    settings.validate();
    chain.require_matches(start);
    const Vec3 up = detail::chain_up(chain);
    const std::size_t n = chain.joint_count();

    std::vector<double> angles(start.angles().begin(), start.angles().end());
    double error = reach_error(chain, angles, target.value);

    ReachResult result{start, ReachReport{error, 0, error < settings.tolerance, {error}}};
    if (result.report.converged)
        return result;

    for (std::size_t iter = 1; iter <= settings.max_iterations; ++iter) {
        for (std::size_t k = n; k-- > 0;) {
            const auto frames = forward_kinematics(chain, Posture(angles));
            const Vec3 axis = frames[k].orientation * chain.joint(k).rotation_axis;
            const Vec3& pivot = frames[k].position;
            const auto delta =
                detail::signed_angle_about(axis, frames[n].position - pivot, target.value - pivot, up);
            if (delta)
                angles[k] = chain.joint(k).limit.nearest_admissible(angles[k] + *delta);
        }
        error = reach_error(chain, angles, target.value);
        result.report.iterations = iter;
        if (error < result.report.position_error) {
            result.report.position_error = error;
            result.posture = Posture(angles);
        }
        result.report.error_trace.push_back(result.report.position_error);
        if (result.report.position_error < settings.tolerance) {
            result.report.converged = true;
            break;
        }
    }
    return result;
}

ReachResult fabrik_solve(const KinematicChain& chain, const Posture& start, const Point& target,
                         const SolverSettings& settings)
{
    settings.validate();
    chain.require_matches(start);
    const std::size_t n = chain.joint_count();

    std::vector<double> angles(start.angles().begin(), start.angles().end());
    double error = reach_error(chain, angles, target.value);

    ReachResult result{start, ReachReport{error, 0, error < settings.tolerance, {error}}};
    if (result.report.converged)
        return result;

    std::vector<Vec3> desired(n + 1);
    for (std::size_t iter = 1; iter <= settings.max_iterations; ++iter) {
        auto frames = forward_kinematics(chain, Posture(angles));

        // Backward: pin the effector on the target and pull each point back
        // onto its segment length.
        desired[n] = target.value;
        for (std::size_t k = n; k-- > 0;) {
            Vec3 dir = frames[k].position - desired[k + 1];
            if (dir.norm() < 1e-12)
                dir = frames[k].position - frames[k + 1].position;
            desired[k] = desired[k + 1] + chain.joint(k).segment_length * dir.normalized();
        }

        // Forward: the base stays put; each hinge takes the admissible angle
        // that best swings its descendants onto their relaxed points (least
        // squares about the hinge axis). The effector dominates so that a
        // chain pinned at a limit still turns its tip towards the target.
        for (std::size_t k = 0; k < n; ++k) {
            frames = forward_kinematics(chain, Posture(angles));
            const Vec3 axis = frames[k].orientation * chain.joint(k).rotation_axis;
            const Vec3& pivot = frames[k].position;
            double s = 0.0;
            double c = 0.0;
            for (std::size_t d = k + 1; d <= n; ++d) {
                Vec3 from = frames[d].position - pivot;
                Vec3 to = desired[d] - pivot;
                from -= axis * axis.dot(from);
                to -= axis * axis.dot(to);
                const double w = (d == n) ? 5.0 * static_cast<double>(n) : 1.0;
                s += w * axis.dot(from.cross(to));
                c += w * from.dot(to);
            }
            if (std::abs(s) + std::abs(c) > 1e-15)
                angles[k] = chain.joint(k).limit.nearest_admissible(angles[k] + std::atan2(s, c));
        }

        error = reach_error(chain, angles, target.value);
        result.report.iterations = iter;
        if (error < result.report.position_error) {
            result.report.position_error = error;
            result.posture = Posture(angles);
        }
        result.report.error_trace.push_back(result.report.position_error);
        if (result.report.position_error < settings.tolerance) {
            result.report.converged = true;
            break;
        }
    }
    return result;
}

Posture bwcd_warp_traced(const KinematicChain& chain, const Posture& expression, const Vec3& target_direction,
                         const WarpSettings& settings, std::vector<double>& error_trace)
{
    chain.require_matches(expression);
    const double norm = target_direction.norm();
    if (!(norm > 1e-12))
        throw DegenerateTarget("warp target direction has zero length");
    const Vec3 target = target_direction / norm;
    const Vec3 up = detail::chain_up(chain);
    const std::size_t n = chain.joint_count();

    std::vector<double> angles(expression.angles().begin(), expression.angles().end());
    error_trace.clear();

    for (std::size_t sweep = 0;; ++sweep) {
        const double error = angle_between(detail::orientation_state(chain, angles).gaze, target);
        error_trace.push_back(error);
        if (error < settings.tolerance || sweep == settings.max_sweeps)
            break;
        // Joint k takes 1/(n-k) of the remaining alignment rotation, projected
        // onto its axis.
        for (std::size_t k = 0; k < n; ++k) {
            const auto state = detail::orientation_state(chain, angles);
            const auto rotation = detail::alignment_rotation(state.gaze, target, up);
            angles[k] = wrap_angle(angles[k] + rotation.dot(state.axes[k]) / static_cast<double>(n - k));
        }
    }
    if (error_trace.size() == 1)
        return expression;
    return Posture(std::move(angles));
}

Posture bwcd_warp(const KinematicChain& chain, const Posture& expression, const Vec3& target_direction,
                  const WarpSettings& settings)
{
    std::vector<double> trace;
    return bwcd_warp_traced(chain, expression, target_direction, settings, trace);
}

void write_trace_csv(std::ostream& out, const std::vector<double>& error_trace)
{
    out << "iteration,error\n";
    for (std::size_t i = 0; i < error_trace.size(); ++i)
        out << i << ',' << format_number(error_trace[i]) << '\n';
}

} // namespace avantsatie
