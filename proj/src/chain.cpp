#include "avantsatie/chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "avantsatie/errors.hpp"

namespace avantsatie {

double wrap_angle(double radians)
{
    double r = std::remainder(radians, 2.0 * kPi);
    if (r <= -kPi)
        r += 2.0 * kPi;
    return r;
}

double JointLimit::clamp(double angle) const
{
    return std::clamp(angle, min, max);
}

double JointLimit::nearest_admissible(double desired) const
{
    const double d = wrap_angle(desired);
    if (contains(d))
        return d;
    const double to_min = std::abs(wrap_angle(d - min));
    const double to_max = std::abs(wrap_angle(d - max));
    return to_min <= to_max ? min : max;
}

Posture::Posture(std::vector<double> angles) : angles_(std::move(angles))
{
    for (double& a : angles_) {
        if (!std::isfinite(a))
            throw ContractViolation("posture angle is not finite");
        a = wrap_angle(a);
    }
}

Posture Posture::from_degrees(std::span<const double> degrees)
{
    std::vector<double> rad(degrees.size());
    std::transform(degrees.begin(), degrees.end(), rad.begin(), deg_to_rad);
    return Posture(std::move(rad));
}

std::vector<double> Posture::degrees() const
{
    std::vector<double> out(angles_.size());
    std::transform(angles_.begin(), angles_.end(), out.begin(), rad_to_deg);
    return out;
}

Posture Posture::with(std::size_t i, double angle) const
{
    Posture copy = *this;
    copy.angles_.at(i) = wrap_angle(angle);
    return copy;
}

KinematicChain::KinematicChain(FrameTransform base, std::vector<JointSpec> joints, Vec3 effector_axis)
    : base_(std::move(base)), joints_(std::move(joints)), effector_axis_(std::move(effector_axis))
{
    if (joints_.empty())
        throw ContractViolation("kinematic chain needs at least one joint");
    if (std::abs(base_.orientation.norm() - 1.0) > 1e-9)
        throw ContractViolation("base orientation is not a unit quaternion");
    if (std::abs(effector_axis_.norm() - 1.0) > 1e-9)
        throw ContractViolation("effector axis is not unit length");
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        const JointSpec& j = joints_[i];
        const std::string where = "joint " + std::to_string(i) + ": ";
        if (std::abs(j.rotation_axis.norm() - 1.0) > 1e-9)
            throw ContractViolation(where + "rotation axis is not unit length");
        if (!(j.segment_length > 0.0) || !std::isfinite(j.segment_length))
            throw ContractViolation(where + "segment length must be positive");
        if (!(j.limit.min <= j.limit.max) || j.limit.min < -kPi || j.limit.max > kPi)
            throw ContractViolation(where + "limit must satisfy -pi <= min <= max <= pi");
    }
}

KinematicChain KinematicChain::default_desk_chain()
{
    // Base frame turns local +x up (world +z); local +y stays world +y and
    // local -z faces world +x, which is where the head looks at rest.
    FrameTransform base;
    base.orientation = Quat(Eigen::AngleAxisd(-kPi / 2.0, Vec3::UnitY()));

    const JointLimit limit{deg_to_rad(-100.0), deg_to_rad(100.0)};
    std::vector<JointSpec> joints;
    for (int i = 0; i < 5; ++i) {
        const Vec3 axis = (i % 2 == 0) ? Vec3::UnitX() : Vec3::UnitY();
        joints.push_back(JointSpec{axis, 0.06, limit});
    }
    return KinematicChain(base, std::move(joints), -Vec3::UnitZ());
}

double KinematicChain::total_length() const
{
    double sum = 0.0;
    for (const auto& j : joints_)
        sum += j.segment_length;
    return sum;
}

void KinematicChain::require_matches(const Posture& posture) const
{
    if (posture.size() != joints_.size())
        throw ContractViolation("posture has " + std::to_string(posture.size()) + " angles, chain has " +
                                std::to_string(joints_.size()) + " joints");
}

GazeTarget make_direction_target(const Vec3& direction)
{
    const double n = direction.norm();
    if (!(n > 1e-12) || !std::isfinite(n))
        throw DegenerateTarget("gaze direction has zero length");
    return Direction{direction / n};
}

Vec3 direction_from_yaw_pitch(double yaw, double pitch)
{
    return Vec3(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch));
}

YawPitch yaw_pitch_of(const Vec3& d)
{
    return YawPitch{std::atan2(d.y(), d.x()), std::atan2(d.z(), std::hypot(d.x(), d.y()))};
}

std::vector<FrameTransform> forward_kinematics(const KinematicChain& chain, const Posture& posture)
{
    chain.require_matches(posture);
    const std::size_t n = chain.joint_count();
    std::vector<FrameTransform> frames(n + 1);

    Vec3 position = chain.base().position;
    Quat orientation = chain.base().orientation;
    for (std::size_t i = 0; i < n; ++i) {
        const JointSpec& j = chain.joint(i);
        orientation = (orientation * Quat(Eigen::AngleAxisd(posture[i], j.rotation_axis))).normalized();
        frames[i] = FrameTransform{position, orientation};
        position += orientation * (j.segment_length * Vec3::UnitX());
    }
    frames[n] = FrameTransform{position, orientation};
    return frames;
}

Vec3 effector_gaze_direction(const KinematicChain& chain, const Posture& posture)
{
    const auto frames = forward_kinematics(chain, posture);
    return (frames.back().orientation * chain.effector_axis()).normalized();
}

Posture clamp_to_limits(const KinematicChain& chain, const Posture& posture)
{
    chain.require_matches(posture);
    std::vector<double> out(posture.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = chain.joint(i).limit.clamp(posture[i]);
    return Posture(std::move(out));
}

bool within_limits(const KinematicChain& chain, const Posture& posture, double eps)
{
    chain.require_matches(posture);
    for (std::size_t i = 0; i < posture.size(); ++i)
        if (!chain.joint(i).limit.contains(posture[i], eps))
            return false;
    return true;
}

double posture_distance(const Posture& a, const Posture& b)
{
    if (a.size() != b.size())
        throw ContractViolation("posture_distance: length mismatch");
    if (a.size() == 0)
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += std::abs(wrap_angle(a[i] - b[i]));
    return sum / static_cast<double>(a.size());
}

Vec3 resolve_target_direction(const GazeTarget& target, const Vec3& effector_position)
{
    if (const auto* d = std::get_if<Direction>(&target)) {
        const double n = d->value.norm();
        if (!(n > 1e-12))
            throw DegenerateTarget("gaze direction has zero length");
        return d->value / n;
    }
    const Vec3 delta = std::get<Point>(target).value - effector_position;
    const double n = delta.norm();
    if (!(n > 1e-9))
        throw DegenerateTarget("target point coincides with the effector");
    return delta / n;
}

double angle_between(const Vec3& a, const Vec3& b)
{
    // atan2 form stays accurate near 0 and pi.
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

double angle_error_to_target(const KinematicChain& chain, const Posture& posture, const GazeTarget& target)
{
    const auto frames = forward_kinematics(chain, posture);
    const Vec3 gaze = (frames.back().orientation * chain.effector_axis()).normalized();
    return angle_between(gaze, resolve_target_direction(target, frames.back().position));
}

} // namespace avantsatie
