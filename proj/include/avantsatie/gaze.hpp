#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "avantsatie/chain.hpp"
#include "avantsatie/phase.hpp"

namespace avantsatie {

// Scene geometry in meters, world frame (x forward, y left, z up).
struct SceneLayout {
    FrameTransform robot_base;
    Vec3 screen_center = Vec3(0.5, 1.2, 1.5);
    std::vector<Vec3> piano_keys; // ordered along the piano axis
    std::optional<Vec3> player_head;

    // Robot on the floor; a 13-key floor piano 0.8 m ahead spanning y in
    // [-0.6, 0.6]; the screen up and to the robot's left.
    static SceneLayout default_layout();
    void validate() const;
};

struct PlayerFace {};
struct Screen {};
struct PianoKey {
    std::size_t index = 0;
};
// The nod overlay; the gaze keeps aiming at the player meanwhile.
struct AffirmativeOverlay {};
using AttentionTarget = std::variant<PlayerFace, Screen, PianoKey, AffirmativeOverlay>;

std::string attention_name(const AttentionTarget& attention);

struct GazeAngles {
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
};

// Robot-frame yaw/pitch from the robot base towards the attended point.
// Throws DegenerateTarget if the point sits on the base, ContractViolation
// for a key index out of range or a face that is not present.
GazeAngles resolve_direction(const SceneLayout& layout, const AttentionTarget& attention);
Vec3 resolve_direction_vector(const SceneLayout& layout, const AttentionTarget& attention);

// Instructions look at the screen, replays point at the replayed key, and
// everything else follows the face when one is present.
AttentionTarget select_attention(PhaseKind phase, bool face_present, std::optional<std::size_t> replay_key);

struct NodSettings {
    double amplitude_deg = 12.0;
    double frequency_hz = 2.0;
    double duration_s = 1.2;

    void validate() const;
};

// Last joint turning about local y: the head pitch on the desk chain.
std::size_t nod_joint_index(const KinematicChain& chain);

// Per-joint offsets (radians) t seconds after the trigger.
std::vector<double> affirmative_overlay(const KinematicChain& chain, double t, const NodSettings& settings = {});

// Adds the overlay to `posture` and clamps the result to the limits.
Posture apply_overlay(const KinematicChain& chain, const Posture& posture, const std::vector<double>& offsets);

// Source of player head positions over time; nullopt means no face.
class FaceProvider {
public:
    virtual ~FaceProvider() = default;
    virtual std::optional<Vec3> face_at(double t) const = 0;
};

// Sways along a horizontal arc in front of the robot, bobbing in height.
class ScriptedArcFace final : public FaceProvider {
public:
    ScriptedArcFace(double radius = 1.6, double half_angle_deg = 35.0, double period_s = 20.0,
                    double height = 1.55, double bob = 0.15);
    std::optional<Vec3> face_at(double t) const override;

private:
    double radius_, half_angle_, period_, height_, bob_;
};

struct FaceSample {
    double t = 0.0;
    Vec3 position;
};

// Piecewise-linear playback of a recorded (t, x, y, z) trace; empty outside it.
class RecordedFace final : public FaceProvider {
public:
    explicit RecordedFace(std::vector<FaceSample> samples);
    std::optional<Vec3> face_at(double t) const override;
    const std::vector<FaceSample>& samples() const { return samples_; }

private:
    std::vector<FaceSample> samples_;
};

// "t,x,y,z" with a header line; LoadError names the offending line.
std::vector<FaceSample> read_face_trace(std::istream& in);
void write_face_trace(std::ostream& out, const std::vector<FaceSample>& samples);

} // namespace avantsatie
