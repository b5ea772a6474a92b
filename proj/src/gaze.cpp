#include "avantsatie/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "avantsatie/csv.hpp"
#include "avantsatie/errors.hpp"

namespace avantsatie {

std::string_view phase_kind_name(PhaseKind kind)
{
    switch (kind) {
    case PhaseKind::StartScreen: return "StartScreen";
    case PhaseKind::Instructions: return "Instructions";
    case PhaseKind::Guessing: return "Guessing";
    case PhaseKind::Replay: return "Replay";
    case PhaseKind::FullReplay: return "FullReplay";
    case PhaseKind::Done: return "Done";
    }
    return "?";
}

std::optional<PhaseKind> parse_phase_kind(std::string_view name)
{
    for (PhaseKind k : {PhaseKind::StartScreen, PhaseKind::Instructions, PhaseKind::Guessing, PhaseKind::Replay,
                        PhaseKind::FullReplay, PhaseKind::Done})
        if (phase_kind_name(k) == name)
            return k;
    return std::nullopt;
}

SceneLayout SceneLayout::default_layout()
{
    SceneLayout s;
    for (int i = 0; i < 13; ++i)
        s.piano_keys.emplace_back(0.8, (6 - i) / 10.0, 0.0);
    return s;
}

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

} // namespace

void SceneLayout::validate() const
{
    if (!finite(robot_base.position) || !robot_base.orientation.coeffs().allFinite())
        throw ContractViolation("scene layout: robot base is not finite");
    if (std::abs(robot_base.orientation.norm() - 1.0) > 1e-9)
        throw ContractViolation("scene layout: robot base orientation is not a unit quaternion");
    if (!finite(screen_center))
        throw ContractViolation("scene layout: screen center is not finite");
    if (player_head && !finite(*player_head))
        throw ContractViolation("scene layout: player head is not finite");
    if (piano_keys.empty())
        throw ContractViolation("scene layout: no piano keys");
    for (const Vec3& k : piano_keys)
        if (!finite(k))
            throw ContractViolation("scene layout: piano key is not finite");
    if (piano_keys.size() >= 2) {
        // Keys must advance monotonically along the first-to-second key axis.
        const Vec3 axis = (piano_keys[1] - piano_keys[0]).normalized();
        for (std::size_t i = 1; i < piano_keys.size(); ++i)
            if (!((piano_keys[i] - piano_keys[i - 1]).dot(axis) > 0.0))
                throw ContractViolation("scene layout: piano keys are not strictly ordered");
    }
}

std::string attention_name(const AttentionTarget& attention)
{
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, PlayerFace>)
                return "PlayerFace";
            else if constexpr (std::is_same_v<T, Screen>)
                return "Screen";
            else if constexpr (std::is_same_v<T, PianoKey>)
                return "PianoKey(" + std::to_string(a.index) + ")";
            else
                return "Affirmative";
        },
        attention);
}

namespace {

Vec3 attended_point(const SceneLayout& layout, const AttentionTarget& attention)
{
    if (std::holds_alternative<Screen>(attention))
        return layout.screen_center;
    if (const auto* key = std::get_if<PianoKey>(&attention)) {
        if (key->index >= layout.piano_keys.size())
            throw ContractViolation("piano key index " + std::to_string(key->index) + " out of range");
        return layout.piano_keys[key->index];
    }
    if (!layout.player_head)
        throw ContractViolation("attention on the player face with no face present");
    return *layout.player_head;
}

} // namespace

Vec3 resolve_direction_vector(const SceneLayout& layout, const AttentionTarget& attention)
{
    const Vec3 local = layout.robot_base.inverse_transform_point(attended_point(layout, attention));
    if (local.norm() < 1e-9)
        throw DegenerateTarget("attended point coincides with the robot base");
    return local.normalized();
}

GazeAngles resolve_direction(const SceneLayout& layout, const AttentionTarget& attention)
{
    const YawPitch yp = yaw_pitch_of(resolve_direction_vector(layout, attention));
    return GazeAngles{rad_to_deg(yp.yaw), rad_to_deg(yp.pitch)};
}

AttentionTarget select_attention(PhaseKind phase, bool face_present, std::optional<std::size_t> replay_key)
{
    if (phase == PhaseKind::Instructions)
        return Screen{};
    if ((phase == PhaseKind::Replay || phase == PhaseKind::FullReplay) && replay_key)
        return PianoKey{*replay_key};
    if (face_present)
        return PlayerFace{};
    return Screen{};
}

void NodSettings::validate() const
{
    if (!(amplitude_deg >= 0.0 && std::isfinite(amplitude_deg)))
        throw ContractViolation("nod amplitude must be finite and >= 0");
    if (!(frequency_hz > 0.0) || !(duration_s > 0.0))
        throw ContractViolation("nod frequency and duration must be positive");
}

std::size_t nod_joint_index(const KinematicChain& chain)
{
    for (std::size_t k = chain.joint_count(); k-- > 0;)
        if (std::abs(chain.joint(k).rotation_axis.y()) > 0.5)
            return k;
    return chain.joint_count() - 1;
}

std::vector<double> affirmative_overlay(const KinematicChain& chain, double t, const NodSettings& settings)
{
    if (!(t >= 0.0))
        throw ContractViolation("overlay time must be >= 0");
    settings.validate();
    std::vector<double> offsets(chain.joint_count(), 0.0);
    if (t >= settings.duration_s)
        return offsets;
    const double envelope = 1.0 - t / settings.duration_s;
    offsets[nod_joint_index(chain)] =
        deg_to_rad(settings.amplitude_deg) * envelope * std::sin(2.0 * kPi * settings.frequency_hz * t);
    return offsets;
}

Posture apply_overlay(const KinematicChain& chain, const Posture& posture, const std::vector<double>& offsets)
{
    chain.require_matches(posture);
    if (offsets.size() != posture.size())
        throw ContractViolation("overlay length does not match the chain");
    std::vector<double> out(posture.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = chain.joint(i).limit.clamp(posture[i] + offsets[i]);
    return Posture(std::move(out));
}

ScriptedArcFace::ScriptedArcFace(double radius, double half_angle_deg, double period_s, double height, double bob)
    : radius_(radius), half_angle_(deg_to_rad(half_angle_deg)), period_(period_s), height_(height), bob_(bob)
{
    if (!(radius_ > 0.0) || !(period_ > 0.0))
        throw ContractViolation("scripted face arc needs a positive radius and period");
}

std::optional<Vec3> ScriptedArcFace::face_at(double t) const
{
    const double phase = 2.0 * kPi * t / period_;
    const double angle = half_angle_ * std::sin(phase);
    return Vec3(radius_ * std::cos(angle), radius_ * std::sin(angle), height_ + bob_ * std::sin(2.0 * phase));
}

RecordedFace::RecordedFace(std::vector<FaceSample> samples) : samples_(std::move(samples))
{
    for (std::size_t i = 1; i < samples_.size(); ++i)
        if (!(samples_[i].t > samples_[i - 1].t))
            throw ContractViolation("face trace times must be strictly increasing");
}

std::optional<Vec3> RecordedFace::face_at(double t) const
{
    if (samples_.empty() || t < samples_.front().t || t > samples_.back().t)
        return std::nullopt;
    auto hi = std::lower_bound(samples_.begin(), samples_.end(), t,
                               [](const FaceSample& s, double v) { return s.t < v; });
    if (hi == samples_.begin())
        return hi->position;
    auto lo = hi - 1;
    const double u = (t - lo->t) / (hi->t - lo->t);
    return Vec3(lo->position + u * (hi->position - lo->position));
}

std::vector<FaceSample> read_face_trace(std::istream& in)
{
    std::vector<FaceSample> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (number == 1 && line.rfind("t,", 0) == 0)
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4)
            throw LoadError("face trace line " + std::to_string(number) + ": expected 4 columns");
        double v[4];
        for (int i = 0; i < 4; ++i) {
            const auto parsed = parse_number(cells[i]);
            if (!parsed)
                throw LoadError("face trace line " + std::to_string(number) + ": bad number '" + cells[i] + "'");
            v[i] = *parsed;
        }
        out.push_back(FaceSample{v[0], Vec3(v[1], v[2], v[3])});
    }
    return out;
}

void write_face_trace(std::ostream& out, const std::vector<FaceSample>& samples)
{
    out << "t,x,y,z\n";
    for (const auto& s : samples)
        out << csv_row({format_number(s.t), format_number(s.position.x()), format_number(s.position.y()),
                        format_number(s.position.z())})
            << '\n';
}

} // namespace avantsatie
