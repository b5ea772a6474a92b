#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace avantsatie {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

// Closed interval of admissible joint angles, radians, inside [-pi, pi].
struct JointLimit {
    double min = -kPi;
    double max = kPi;

    bool contains(double angle, double eps = 0.0) const { return angle >= min - eps && angle <= max + eps; }
    double clamp(double angle) const;
    // Admissible angle closest (on the circle) to `desired`.
    double nearest_admissible(double desired) const;
    bool full_circle() const { return max - min >= 2.0 * kPi - 1e-12; }
};

struct JointSpec {
    Vec3 rotation_axis = Vec3::UnitZ(); // local frame, unit length
    double segment_length = 1.0;        // meters, towards the child along local +x
    JointLimit limit;
};

struct FrameTransform {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    Vec3 transform_point(const Vec3& local) const { return position + orientation * local; }
    Vec3 transform_direction(const Vec3& local) const { return orientation * local; }
    // Expresses a world point in this frame.
    Vec3 inverse_transform_point(const Vec3& world) const { return orientation.conjugate() * (world - position); }
};

// Per-joint angle vector. Angles are wrapped into (-pi, pi] on construction.
class Posture {
public:
    Posture() = default;
    explicit Posture(std::vector<double> angles);

    static Posture zeros(std::size_t n) { return Posture(std::vector<double>(n, 0.0)); }
    static Posture from_degrees(std::span<const double> degrees);

    std::size_t size() const { return angles_.size(); }
    double operator[](std::size_t i) const { return angles_[i]; }
    std::span<const double> angles() const { return angles_; }
    std::vector<double> degrees() const;

    // Returns a copy with joint i set (wrapped).
    Posture with(std::size_t i, double angle) const;

    bool operator==(const Posture&) const = default;

private:
    std::vector<double> angles_;
};

// Serial chain of hinge joints. Joint i rotates about its axis, then its
// segment extends along the rotated local +x to joint i+1 (or the effector).
class KinematicChain {
public:
    KinematicChain(FrameTransform base, std::vector<JointSpec> joints, Vec3 effector_axis);

    // Five alternating yaw/pitch hinges standing upright, 6 cm segments,
    // +-100 deg limits; looks along world +x at the zero posture.
    static KinematicChain default_desk_chain();

    std::size_t joint_count() const { return joints_.size(); }
    const std::vector<JointSpec>& joints() const { return joints_; }
    const JointSpec& joint(std::size_t i) const { return joints_[i]; }
    const FrameTransform& base() const { return base_; }
    const Vec3& effector_axis() const { return effector_axis_; }
    double total_length() const;

    void require_matches(const Posture& posture) const;

private:
    FrameTransform base_;
    std::vector<JointSpec> joints_;
    Vec3 effector_axis_;
};

struct Direction {
    Vec3 value; // unit
};
struct Point {
    Vec3 value; // meters
};
using GazeTarget = std::variant<Direction, Point>;

GazeTarget make_direction_target(const Vec3& direction);

// Unit vector for a robot-relative (yaw, pitch): yaw about +z from +x, pitch up from the horizon.
Vec3 direction_from_yaw_pitch(double yaw, double pitch);
struct YawPitch {
    double yaw = 0.0;
    double pitch = 0.0;
};
YawPitch yaw_pitch_of(const Vec3& direction);

// N+1 frames: one per joint (after its rotation) plus the effector frame.
std::vector<FrameTransform> forward_kinematics(const KinematicChain& chain, const Posture& posture);

Vec3 effector_gaze_direction(const KinematicChain& chain, const Posture& posture);

Posture clamp_to_limits(const KinematicChain& chain, const Posture& posture);
bool within_limits(const KinematicChain& chain, const Posture& posture, double eps = 1e-12);

// Mean wrapped absolute per-joint difference, in [0, pi].
double posture_distance(const Posture& a, const Posture& b);

// Target direction as seen from `effector_position`.
Vec3 resolve_target_direction(const GazeTarget& target, const Vec3& effector_position);

double angle_between(const Vec3& a, const Vec3& b);
double angle_error_to_target(const KinematicChain& chain, const Posture& posture, const GazeTarget& target);

} // namespace avantsatie
