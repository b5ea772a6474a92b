#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "avantsatie/erik.hpp"
#include "avantsatie/errors.hpp"

using namespace avantsatie;

namespace {

const KinematicChain& desk()
{
    static const KinematicChain chain = KinematicChain::default_desk_chain();
    return chain;
}

} // namespace

TEST_CASE("default expressions have the intended native pitches")
{
    const auto set = default_expression_set(desk());
    REQUIRE(set.size() == 3);
    const double expected[] = {25.0, 45.0, -35.0};
    for (std::size_t i = 0; i < 3; ++i) {
        const YawPitch yp = yaw_pitch_of(set[i].native_direction);
        CHECK(rad_to_deg(yp.yaw) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(rad_to_deg(yp.pitch) == doctest::Approx(expected[i]));
    }
    CHECK_THROWS_AS(find_expression(set, "Sleepy"), NotFound);
    CHECK_THROWS_AS(ExpressionPosture::authored(desk(), "Bad", Posture::from_degrees(std::vector<double>{0, 0, 0, 120, 0})),
                    ContractViolation);
}

TEST_CASE("solving towards the native direction returns the authored posture")
{
    for (const auto& e : default_expression_set(desk())) {
        const SolveResult r = erik_solve(desk(), e, Direction{e.native_direction}, {});
        CHECK(r.report.converged);
        CHECK(r.report.iterations == 0);
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(std::abs(r.posture[j] - e.posture[j]) < 1e-6);
    }
}

TEST_CASE("ERIK converges inside the envelope and keeps limits")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> yaw(-70, 70), pitch(0, 80);
    for (const auto& e : default_expression_set(desk())) {
        for (int t = 0; t < 200; ++t) {
            const Vec3 d = direction_from_yaw_pitch(deg_to_rad(yaw(rng)), deg_to_rad(pitch(rng)));
            const SolveResult r = erik_solve(desk(), e, Direction{d}, {});
            CHECK(r.report.converged);
            CHECK(r.report.angle_error < deg_to_rad(1.0));
            CHECK(r.report.angle_error == doctest::Approx(angle_between(effector_gaze_direction(desk(), r.posture), d)));
            CHECK(within_limits(desk(), r.posture));
        }
    }
}

TEST_CASE("ERIK aims at points from the effector")
{
    const auto& neutral = default_expression_set(desk())[0];
    const Point p{Vec3(1.2, -0.4, 1.5)};
    const SolveResult r = erik_solve(desk(), neutral, p, {});
    CHECK(r.report.converged);
    CHECK(angle_error_to_target(desk(), r.posture, p) == doctest::Approx(r.report.angle_error));
}

TEST_CASE("ERIK search gives up at the iteration budget and keeps the best posture")
{
    const auto& cold = default_expression_set(desk())[2];
    ErikSettings s;
    s.solver.tolerance = 1e-12;
    s.solver.max_iterations = 4;
    const Vec3 d = direction_from_yaw_pitch(0.0, deg_to_rad(-89));
    const SolveResult r = erik_solve(desk(), cold, Direction{d}, s);
    CHECK(r.report.iterations <= 4);
    CHECK(within_limits(desk(), r.posture));
    CHECK(r.report.angle_error == doctest::Approx(angle_between(effector_gaze_direction(desk(), r.posture), d)));
}

TEST_CASE("ERIK settings validation")
{
    const auto& e = default_expression_set(desk())[0];
    ErikSettings s;
    s.posture_pull = 1.5;
    CHECK_THROWS_AS(erik_solve(desk(), e, Direction{Vec3::UnitX()}, s), ContractViolation);
    s = {};
    s.filter.time_constant = 0.0;
    CHECK_THROWS_AS(s.validate(), ContractViolation);
}

TEST_CASE("motion filter smooths exponentially")
{
    const FilterSettings f;
    const double dt = 1.0 / 30.0;
    const double alpha = 1.0 - std::exp(-dt / f.time_constant);
    FilterState s = make_filter_state(Posture::zeros(1));
    s = motion_filter_step(s, Posture(std::vector<double>{0.01}), dt, f);
    CHECK(s.posture[0] == doctest::Approx(alpha * 0.01));
    CHECK(s.velocity[0] == doctest::Approx(alpha * 0.01 / dt));
}

TEST_CASE("motion filter caps joint velocity and settles on the target")
{
    const FilterSettings f;
    const double dt = 1.0 / 30.0;
    FilterState s = make_filter_state(Posture::zeros(2));
    const Posture raw(std::vector<double>{deg_to_rad(60), deg_to_rad(-60)});
    for (int i = 0; i < 300; ++i) {
        const FilterState next = motion_filter_step(s, raw, dt, f);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(next.posture[j] - s.posture[j]) <= f.max_joint_velocity * dt + 1e-12);
        s = next;
    }
    CHECK(s.posture[0] == doctest::Approx(deg_to_rad(60)));
    CHECK(s.posture[1] == doctest::Approx(deg_to_rad(-60)));
    CHECK_THROWS_AS(motion_filter_step(s, raw, 0.0, f), ContractViolation);
    CHECK_THROWS_AS(motion_filter_step(s, Posture::zeros(3), dt, f), ContractViolation);
}

TEST_CASE("stream tracks a walking target")
{
    const auto set = default_expression_set(desk());
    const double dt = 1.0 / 30.0;
    std::vector<GazeTarget> targets;
    std::vector<ExpressionPosture> expressions;
    for (int i = 0; i <= 140; ++i) {
        targets.push_back(Direction{direction_from_yaw_pitch(deg_to_rad(-70.0 + i), deg_to_rad(30))});
        expressions.push_back(set[1]);
    }
    const ErikSettings settings;
    const auto ticks = solve_stream(desk(), expressions, targets, dt, settings);
    REQUIRE(ticks.size() == targets.size());
    // 1 deg per tick through the filter lags by r (1 - a) / a.
    const double alpha = 1.0 - std::exp(-dt / settings.filter.time_constant);
    const double lag = deg_to_rad(1.0) * (1.0 - alpha) / alpha;
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        CHECK(ticks[i].report.angle_error < 3.0 * settings.solver.tolerance);
        CHECK(within_limits(desk(), ticks[i].posture));
        if (i > 30)
            CHECK(ticks[i].tracking_error < 1.5 * lag + settings.solver.tolerance);
    }

    std::ostringstream csv;
    write_stream_csv(csv, targets, ticks);
    const std::string text = csv.str();
    CHECK(text.rfind("tick,target_yaw_deg,target_pitch_deg,error,divergence\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(ticks.size() + 1));

    CHECK_THROWS_AS(solve_stream(desk(), expressions, {}, dt, settings), ContractViolation);
}

TEST_CASE("stream keeps the last posture through a degenerate target")
{
    const auto set = default_expression_set(desk());
    PostureStream stream(desk(), {}, 1.0 / 30.0);
    const StreamTick first = stream.tick(set[0], Direction{direction_from_yaw_pitch(0.3, 0.4)});
    CHECK_FALSE(first.solve_failed);
    // Targets resolve from the expression's own effector.
    const Vec3 effector = forward_kinematics(desk(), set[0].posture).back().position;
    const StreamTick second = stream.tick(set[0], Point{effector});
    CHECK(second.solve_failed);
    CHECK(posture_distance(second.posture, first.posture) < 1e-9);
    CHECK_THROWS_AS(PostureStream(desk(), {}, 0.0), ContractViolation);
}
