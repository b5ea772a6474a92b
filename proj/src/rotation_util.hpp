#pragma once

#include <optional>
#include <vector>

#include "avantsatie/chain.hpp"

namespace avantsatie::detail {

// Signed angle about `axis` (unit) taking the projection of `from` onto the
// projection of `to`, both projected on the plane normal to the axis.
// nullopt when either projection vanishes. An exact half turn is resolved
// towards the rotation whose axis leans along `up`.
std::optional<double> signed_angle_about(const Vec3& axis, const Vec3& from, const Vec3& to, const Vec3& up);

// Rotation vector (axis * angle) turning unit `from` onto unit `to`. For an
// exact half turn the axis normal to `from` closest to `up` is used.
Vec3 alignment_rotation(const Vec3& from, const Vec3& to, const Vec3& up);

// Direction the chain grows at rest, used for half-turn tie breaking.
inline Vec3 chain_up(const KinematicChain& chain)
{
    return chain.base().transform_direction(Vec3::UnitX());
}

// World-frame joint axes and effector gaze without computing positions.
struct OrientationState {
    std::vector<Vec3> axes;
    Vec3 gaze;
};
OrientationState orientation_state(const KinematicChain& chain, std::span<const double> angles);

} // namespace avantsatie::detail
