#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "avantsatie/errors.hpp"
#include "avantsatie/io.hpp"

using namespace avantsatie;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = AVANTSATIE_DATA_DIR;

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "avantsatie_test_io";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

std::string load_error_message(const std::function<void()>& f)
{
    try {
        f();
    } catch (const LoadError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("chain JSON round trip preserves kinematics")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    std::vector<JointSpec> joints;
    for (int i = 0; i < 4; ++i)
        joints.push_back({Vec3(n(rng), n(rng), n(rng)).normalized(), 0.1 + 0.01 * i, {-1.0 - 0.1 * i, 1.5}});
    const KinematicChain chain(FrameTransform{Vec3(0.1, -0.2, 0.3), Quat(0.3, 0.1, -0.5, 0.2).normalized()}, joints,
                               Vec3(0, 1, 0));
    const KinematicChain back = io::chain_from_json(io::chain_to_json(chain));
    REQUIRE(back.joint_count() == 4);
    const Posture p = Posture(std::vector<double>{0.3, -0.2, 0.9, 1.1});
    const auto a = forward_kinematics(chain, p), b = forward_kinematics(back, p);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK((a[i].position - b[i].position).norm() < 1e-12);
    CHECK((effector_gaze_direction(chain, p) - effector_gaze_direction(back, p)).norm() < 1e-12);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(back.joint(i).limit.min == doctest::Approx(chain.joint(i).limit.min).epsilon(1e-12));
        CHECK(back.joint(i).limit.max == doctest::Approx(chain.joint(i).limit.max).epsilon(1e-12));
    }
}

TEST_CASE("expression, composition and layout round trips")
{
    const KinematicChain chain = KinematicChain::default_desk_chain();
    const auto set = default_expression_set(chain);
    const auto back = io::expressions_from_json(io::expressions_to_json(set), chain);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].name == set[i].name);
        CHECK(posture_distance(back[i].posture, set[i].posture) < 1e-12);
    }

    const Keyboard kb;
    const Composition c = Composition::default_composition(kb);
    Keyboard kb2{48, 5};
    const Composition c2 = io::composition_from_json(io::composition_to_json(c, kb), kb2);
    CHECK(kb2.lowest_midi == 60);
    CHECK(kb2.key_count == 13);
    REQUIRE(c2.levels.size() == c.levels.size());
    for (std::size_t l = 0; l < c.levels.size(); ++l) {
        CHECK(c2.levels[l].name == c.levels[l].name);
        REQUIRE(c2.levels[l].parts.size() == c.levels[l].parts.size());
        for (std::size_t p = 0; p < c.levels[l].parts.size(); ++p)
            CHECK(c2.levels[l].parts[p].notes == c.levels[l].parts[p].notes);
    }

    SceneLayout layout = SceneLayout::default_layout();
    layout.player_head = Vec3(1.5, 0.2, 1.6);
    const SceneLayout l2 = io::layout_from_json(io::layout_to_json(layout));
    CHECK(l2.piano_keys == layout.piano_keys);
    CHECK(l2.screen_center == layout.screen_center);
    REQUIRE(l2.player_head);
    CHECK(*l2.player_head == *layout.player_head);
}

TEST_CASE("settings and config round trip")
{
    ErikSettings s;
    s.solver.tolerance = deg_to_rad(0.5);
    s.solver.max_iterations = 12;
    s.posture_pull = 0.25;
    s.filter.time_constant = 0.2;
    const ErikSettings s2 = io::settings_from_json(io::settings_to_json(s));
    CHECK(s2.solver.tolerance == doctest::Approx(s.solver.tolerance));
    CHECK(s2.solver.max_iterations == 12);
    CHECK(s2.posture_pull == 0.25);
    CHECK(s2.filter.time_constant == doctest::Approx(0.2));

    io::AppConfig c;
    c.condition = Condition::Ebps;
    c.seed = 1234567890123ULL;
    c.hot_cold_mode = HotColdMode::Relative;
    c.port = 0;
    c.chain_file = "/abs/chain.json";
    const io::AppConfig c2 = io::config_from_json(io::config_to_json(c));
    CHECK(c2.condition == Condition::Ebps);
    CHECK(c2.seed == c.seed);
    CHECK(c2.hot_cold_mode == HotColdMode::Relative);
    CHECK(c2.port == 0);
    CHECK(c2.chain_file == c.chain_file);
}

TEST_CASE("config paths resolve against the config file")
{
    const io::AppConfig c = io::load_config(data_dir / "config.json");
    REQUIRE(c.chain_file);
    CHECK(*c.chain_file == data_dir / "chain.json");
    REQUIRE(c.grid_files.size() == 3);
    CHECK(c.grid_files[0] == data_dir / "grids/grid_Neutral.json");
    CHECK(c.log_dir == data_dir / "logs");
}

TEST_CASE("the shipped data reproduces the built-in assets")
{
    const io::LoadedSetup setup = io::load_setup(io::load_config(data_dir / "config.json"));
    const auto builtin = RobotAssets::make_default();
    CHECK(setup.assets->chain.joint_count() == 5);
    REQUIRE(setup.assets->grids.size() == 3);
    for (std::size_t g = 0; g < 3; ++g)
        for (std::size_t i = 0; i < 30; ++i)
            CHECK(posture_distance(setup.assets->grids[g].postures()[i], builtin->grids[g].postures()[i]) < 1e-9);
    CHECK(setup.loop.game.composition.note_count() == 30);
    CHECK(setup.loop.layout.piano_keys.size() == 13);
}

TEST_CASE("load errors name the file and the problem")
{
    const fs::path missing = scratch("nope.json");
    fs::remove(missing);
    std::string msg = load_error_message([&] { io::read_json_file(missing); });
    CHECK(msg.find(missing.string()) != std::string::npos);

    const fs::path syntax = scratch("syntax.json");
    write_text(syntax, "{\"joints\": [");
    msg = load_error_message([&] { io::read_json_file(syntax); });
    CHECK(msg.find(syntax.string()) != std::string::npos);

    io::json chain = io::chain_to_json(KinematicChain::default_desk_chain());
    chain["joints"][2]["segment_length"] = 0.0;
    const fs::path bad_chain = scratch("bad_chain.json");
    io::write_json_file(bad_chain, chain);
    io::AppConfig c;
    c.chain_file = bad_chain;
    msg = load_error_message([&] { io::load_setup(c); });
    CHECK(msg.find(bad_chain.string()) != std::string::npos);
    CHECK(msg.find("segment length") != std::string::npos);

    chain = io::chain_to_json(KinematicChain::default_desk_chain());
    chain["joints"][0].erase("axis");
    msg = load_error_message([&] { io::chain_from_json(chain); });
    CHECK(msg.find("axis") != std::string::npos);

    io::json comp = io::composition_to_json(Composition::default_composition(), Keyboard{});
    comp["levels"][0]["parts"][0][0] = "E9";
    Keyboard kb;
    CHECK_THROWS_AS(io::composition_from_json(comp, kb), LoadError);

    CHECK_THROWS_AS(io::config_from_json(io::json{{"condition", "C-Other"}}), LoadError);
    CHECK_THROWS_AS(io::config_from_json(io::json{{"port", 70000}}), LoadError);
    CHECK_THROWS_AS(io::config_from_json(io::json{{"tick_hz", 5}}), LoadError);
    CHECK_THROWS_AS(io::config_from_json(io::json{{"seed", -1}}), LoadError);
    CHECK_THROWS_AS(io::config_from_json(io::json::array()), LoadError);

    io::json grid = io::grid_to_json(RobotAssets::make_default()->grids[0]);
    grid["postures"] = io::json::array();
    CHECK_THROWS_AS(io::grid_from_json(grid), LoadError);
}
