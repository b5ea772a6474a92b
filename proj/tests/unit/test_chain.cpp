#include "doctest.h"

#include <random>

#include "avantsatie/chain.hpp"
#include "avantsatie/errors.hpp"
#include "fk_oracle.hpp"

using namespace avantsatie;

namespace {

KinematicChain random_chain(std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> len(0.05, 0.4);
    std::vector<JointSpec> joints;
    for (int i = 0; i < 6; ++i) {
        Vec3 axis(n(rng), n(rng), n(rng));
        joints.push_back({axis.normalized(), len(rng), {}});
    }
    Quat q(n(rng), n(rng), n(rng), n(rng));
    FrameTransform base{Vec3(n(rng), n(rng), n(rng)), q.normalized()};
    return KinematicChain(base, joints, Vec3(n(rng), n(rng), n(rng)).normalized());
}

void check_against_oracle(const KinematicChain& chain, const std::vector<double>& angles)
{
    const Posture posture(angles);
    const auto frames = forward_kinematics(chain, posture);
    const oracle::Pose ref = oracle::forward(chain, std::vector<double>(posture.angles().begin(), posture.angles().end()));
    REQUIRE(frames.size() == chain.joint_count() + 1);
    for (std::size_t i = 0; i < frames.size(); ++i)
        CHECK((frames[i].position - ref.points[i]).norm() < 1e-12);
    CHECK((effector_gaze_direction(chain, posture) - ref.gaze).norm() < 1e-12);
}

} // namespace

TEST_CASE("forward kinematics agrees with the matrix oracle")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    const KinematicChain desk = KinematicChain::default_desk_chain();
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(desk.joint_count());
        for (double& x : a)
            x = angle(rng);
        check_against_oracle(desk, a);
    }
    for (int c = 0; c < 20; ++c) {
        const KinematicChain chain = random_chain(rng);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> a(chain.joint_count());
            for (double& x : a)
                x = angle(rng);
            check_against_oracle(chain, a);
        }
    }
}

TEST_CASE("segment lengths are preserved by every posture")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    const KinematicChain chain = random_chain(rng);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(chain.joint_count());
        for (double& x : a)
            x = angle(rng);
        const auto frames = forward_kinematics(chain, Posture(a));
        for (std::size_t i = 0; i < chain.joint_count(); ++i)
            CHECK((frames[i + 1].position - frames[i].position).norm() ==
                  doctest::Approx(chain.joint(i).segment_length).epsilon(1e-12));
    }
}

TEST_CASE("desk chain stands up and looks forward at rest")
{
    const KinematicChain chain = KinematicChain::default_desk_chain();
    CHECK(chain.joint_count() == 5);
    CHECK(chain.total_length() == doctest::Approx(0.30));
    const auto frames = forward_kinematics(chain, Posture::zeros(5));
    CHECK((frames.back().position - Vec3(0, 0, 0.30)).norm() < 1e-12);
    CHECK((effector_gaze_direction(chain, Posture::zeros(5)) - Vec3::UnitX()).norm() < 1e-12);
    for (const auto& j : chain.joints())
        CHECK(j.limit.max == doctest::Approx(deg_to_rad(100)));
}

TEST_CASE("chain construction rejects malformed input")
{
    const JointSpec ok{Vec3::UnitZ(), 0.1, {}};
    CHECK_THROWS_AS(KinematicChain({}, {}, Vec3::UnitX()), ContractViolation);
    CHECK_THROWS_AS(KinematicChain({}, {JointSpec{Vec3(0, 0, 2), 0.1, {}}}, Vec3::UnitX()), ContractViolation);
    CHECK_THROWS_AS(KinematicChain({}, {JointSpec{Vec3::UnitZ(), 0.0, {}}}, Vec3::UnitX()), ContractViolation);
    CHECK_THROWS_AS(KinematicChain({}, {JointSpec{Vec3::UnitZ(), 0.1, {1.0, 0.5}}}, Vec3::UnitX()), ContractViolation);
    CHECK_THROWS_AS(KinematicChain({}, {ok}, Vec3(1, 1, 0)), ContractViolation);
    FrameTransform bad_base{Vec3::Zero(), Quat(2, 0, 0, 0)};
    CHECK_THROWS_AS(KinematicChain(bad_base, {ok}, Vec3::UnitX()), ContractViolation);

    const KinematicChain chain({}, {ok, ok}, Vec3::UnitX());
    CHECK_THROWS_AS(forward_kinematics(chain, Posture::zeros(3)), ContractViolation);
    CHECK_THROWS_AS(Posture(std::vector<double>{std::nan("")}), ContractViolation);
}

TEST_CASE("angles wrap into the half-open circle")
{
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3 * kPi + 0.25) == doctest::Approx(-kPi + 0.25));
    CHECK(wrap_angle(-0.5) == doctest::Approx(-0.5));
    const Posture p(std::vector<double>{2 * kPi + 0.1, -2 * kPi - 0.1});
    CHECK(p[0] == doctest::Approx(0.1));
    CHECK(p[1] == doctest::Approx(-0.1));
    CHECK(posture_distance(Posture(std::vector<double>{kPi - 0.1}), Posture(std::vector<double>{-kPi + 0.1})) ==
          doctest::Approx(0.2));
}

TEST_CASE("joint limits clamp and pick the nearest admissible angle on the circle")
{
    const JointLimit lim{deg_to_rad(-100), deg_to_rad(100)};
    CHECK(lim.clamp(deg_to_rad(120)) == doctest::Approx(deg_to_rad(100)));
    CHECK(lim.clamp(deg_to_rad(-130)) == doctest::Approx(deg_to_rad(-100)));
    // 170 deg is 70 deg past +100 but 90 deg short of -100 the other way round.
    CHECK(lim.nearest_admissible(deg_to_rad(170)) == doctest::Approx(deg_to_rad(100)));
    CHECK(lim.nearest_admissible(deg_to_rad(-170)) == doctest::Approx(deg_to_rad(-100)));
    CHECK(lim.nearest_admissible(deg_to_rad(30)) == doctest::Approx(deg_to_rad(30)));
    CHECK_FALSE(lim.full_circle());
    CHECK(JointLimit{}.full_circle());

    const KinematicChain chain = KinematicChain::default_desk_chain();
    const Posture wild = Posture::from_degrees(std::vector<double>{150, -150, 20, 101, -99});
    CHECK_FALSE(within_limits(chain, wild));
    CHECK(within_limits(chain, clamp_to_limits(chain, wild)));
}

TEST_CASE("yaw and pitch round trip")
{
    for (double yaw = -170; yaw <= 170; yaw += 17) {
        for (double pitch = -85; pitch <= 85; pitch += 17) {
            const Vec3 d = direction_from_yaw_pitch(deg_to_rad(yaw), deg_to_rad(pitch));
            CHECK(d.norm() == doctest::Approx(1.0));
            const YawPitch yp = yaw_pitch_of(d);
            CHECK(rad_to_deg(yp.yaw) == doctest::Approx(yaw));
            CHECK(rad_to_deg(yp.pitch) == doctest::Approx(pitch));
        }
    }
    CHECK((direction_from_yaw_pitch(0, kPi / 2) - Vec3::UnitZ()).norm() < 1e-12);
    CHECK((direction_from_yaw_pitch(kPi / 2, 0) - Vec3::UnitY()).norm() < 1e-12);
}

TEST_CASE("target resolution")
{
    CHECK_THROWS_AS(make_direction_target(Vec3::Zero()), DegenerateTarget);
    const Vec3 d = resolve_target_direction(Point{Vec3(1, 1, 0)}, Vec3(1, 0, 0));
    CHECK((d - Vec3::UnitY()).norm() < 1e-12);
    CHECK_THROWS_AS(resolve_target_direction(Point{Vec3(1, 0, 0)}, Vec3(1, 0, 0)), DegenerateTarget);
    CHECK(angle_between(Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(kPi / 2));
    CHECK(angle_between(Vec3::UnitX(), -Vec3::UnitX()) == doctest::Approx(kPi));
}
