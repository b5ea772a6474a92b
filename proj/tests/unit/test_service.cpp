#include "doctest.h"

#include <chrono>
#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "avantsatie/errors.hpp"
#include "avantsatie/service.hpp"

using namespace avantsatie;
using io::json;
using namespace std::chrono_literals;

namespace {

std::shared_ptr<const RobotAssets> assets()
{
    static const auto a = RobotAssets::make_default();
    return a;
}

// A seeded mix of key presses and face movement.
std::vector<std::vector<LoopInput>> scripted_inputs(std::uint64_t seed, std::size_t ticks)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> key(0, 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ScriptedArcFace face;
    std::vector<std::vector<LoopInput>> out(ticks);
    out[0].push_back(KeyPress{2});
    for (std::size_t t = 1; t < ticks; ++t) {
        if (u(rng) < 0.08)
            out[t].push_back(KeyPress{key(rng)});
        if (t % 4 == 0)
            out[t].push_back(FacePosition{*face.face_at(t / 30.0)});
        if (u(rng) < 0.005)
            out[t].push_back(FaceLost{});
    }
    return out;
}

std::vector<json> drain_json(Subscription& sub)
{
    std::vector<json> out;
    for (const auto& line : sub.drain())
        out.push_back(json::parse(line));
    return out;
}

std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "avantsatie_test_service" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("input records parse from note names, indices and faces")
{
    const Keyboard kb;
    CHECK(std::get<KeyPress>(protocol::input_from_json(json{{"kind", "key"}, {"key", "D4"}}, kb)).key == 2);
    CHECK(std::get<KeyPress>(protocol::input_from_json(json{{"kind", "key"}, {"key", 7}}, kb)).key == 7);
    const auto face = protocol::input_from_json(json{{"kind", "face"}, {"position", {1.5, 0.1, 1.6}}}, kb);
    CHECK(std::get<FacePosition>(face).position == Vec3(1.5, 0.1, 1.6));
    CHECK(std::holds_alternative<FaceLost>(protocol::input_from_json(json{{"kind", "face_lost"}}, kb)));

    CHECK_THROWS_AS(protocol::input_from_json(json{{"kind", "key"}, {"key", "Q9"}}, kb), ContractViolation);
    CHECK_THROWS_AS(protocol::input_from_json(json{{"kind", "key"}, {"key", -1}}, kb), ContractViolation);
    CHECK_THROWS_AS(protocol::input_from_json(json{{"kind", "face"}, {"position", {1, 2}}}, kb), ContractViolation);
    CHECK_THROWS_AS(protocol::input_from_json(json{{"kind", "wave"}}, kb), ContractViolation);
    CHECK_THROWS_AS(protocol::input_from_json(json::array(), kb), ContractViolation);

    for (const LoopInput& in : {LoopInput{KeyPress{5}}, LoopInput{FacePosition{Vec3(1, 2, 3)}}, LoopInput{FaceLost{}}})
        CHECK(protocol::input_to_json(protocol::input_from_json(protocol::input_to_json(in), kb)) ==
              protocol::input_to_json(in));

    const Metrics m{12.5, 3, 4, 7};
    CHECK(protocol::metrics_from_json(protocol::metrics_to_json(m)) == m);
    CHECK_THROWS_AS(protocol::metrics_from_json(json{{"time_s", 1}}), LoadError);
}

TEST_CASE("subscriptions drop the oldest record when full")
{
    Subscription sub(3);
    for (int i = 0; i < 5; ++i)
        sub.push(std::to_string(i));
    CHECK(sub.dropped() == 2);
    CHECK(sub.drain() == std::vector<std::string>{"2", "3", "4"});
    CHECK_FALSE(sub.pop(10ms));

    int notified = 0;
    sub.set_notifier([&] { ++notified; });
    sub.push("a");
    CHECK(notified == 1);
    sub.close();
    CHECK(sub.closed());
    CHECK(sub.pop(10ms) == std::string("a"));
    CHECK_FALSE(sub.pop(1000ms));
    sub.push("ignored");
    CHECK(sub.drain().empty());
}

TEST_CASE("sessions fed the same inputs publish the same frames")
{
    const auto script = scripted_inputs(4, 600);
    std::vector<std::string> first, second;
    for (auto* out : {&first, &second}) {
        LoopConfig config;
        config.game.condition = Condition::Ebps;
        SessionCore core("s", assets(), config);
        auto sub = core.subscribe(100000);
        for (const auto& tick : script) {
            for (const auto& in : tick)
                core.post_input(in);
            core.step();
        }
        *out = sub->drain();
    }
    CHECK(first.size() > 600);
    CHECK(first == second);
}

TEST_CASE("late subscribers start from a snapshot")
{
    SessionCore core("late", assets(), LoopConfig{});
    const json empty = json::parse(core.subscribe()->drain().front());
    CHECK(empty["type"] == "snapshot");
    CHECK(empty["frame"].is_null());

    for (int i = 0; i < 50; ++i)
        core.step();
    auto sub = core.subscribe();
    core.step();
    const auto records = drain_json(*sub);
    REQUIRE(records.size() >= 2);
    CHECK(records[0]["type"] == "snapshot");
    CHECK(records[0]["session"] == "late");
    CHECK(records[0]["frame"]["tick"] == 49);
    CHECK(records[0]["metrics"]["wrong_total"] == 0);
    CHECK(records.back()["type"] == "frame");
    CHECK(records.back()["tick"] == 50);
    CHECK(records.back()["angles_deg"].size() == 5);
}

TEST_CASE("every guess is published as an event")
{
    SessionCore core("g", assets(), LoopConfig{});
    auto sub = core.subscribe(1000000);
    const auto script = scripted_inputs(9, 3000);
    for (const auto& tick : script) {
        for (const auto& in : tick)
            core.post_input(in);
        core.step();
    }
    std::size_t guesses = 0, hot = 0, cold = 0;
    for (const json& r : drain_json(*sub)) {
        if (r["type"] != "event" || r["event"] != "Guess")
            continue;
        ++guesses;
        if (r["correct"] == false)
            (r["assessment"] == "Hot" ? hot : cold)++;
    }
    const Metrics m = core.current_metrics();
    CHECK(m.wrong_total > 0);
    CHECK(hot == m.wrong_hot);
    CHECK(cold == m.wrong_cold);
    CHECK(guesses >= m.wrong_total);
    CHECK(sub->dropped() == 0);
}

TEST_CASE("closing a session writes the end record and closes subscribers")
{
    auto buffer = std::make_unique<std::stringstream>();
    std::stringstream* log = buffer.get();
    SessionCore core("c", assets(), LoopConfig{}, std::move(buffer));
    auto sub = core.subscribe();
    core.step();
    core.close();
    core.close();
    CHECK(core.closed());
    CHECK(sub->closed());
    CHECK(core.snapshot()["closed"] == true);
    std::string line, last;
    std::size_t ends = 0;
    while (std::getline(*log, line)) {
        last = line;
        ends += json::parse(line)["type"] == "end" ? 1 : 0;
    }
    CHECK(ends == 1);
    CHECK(json::parse(last)["ticks"] == 1);
    CHECK(core.subscribe()->closed());
}

TEST_CASE("session logs replay to the same final state")
{
    for (Condition condition : {Condition::Erik, Condition::Ebps, Condition::Control}) {
        auto buffer = std::make_unique<std::stringstream>();
        std::stringstream* log = buffer.get();
        LoopConfig config;
        config.game.condition = condition;
        config.game.hot_cold_mode = condition == Condition::Ebps ? HotColdMode::Relative : HotColdMode::Absolute;
        SessionCore core("r", assets(), config, std::move(buffer));
        RobotLoop shadow(assets(), config);
        for (const auto& tick : scripted_inputs(21, 2500)) {
            for (const auto& in : tick)
                core.post_input(in);
            core.step();
            shadow.step(tick);
        }
        core.close();
        CHECK(core.current_metrics().wrong_total > 0);

        std::istringstream in(log->str());
        const ReplayResult r = replay_log(in);
        REQUIRE(r.logged_metrics);
        CHECK(r.metrics == *r.logged_metrics);
        CHECK(r.metrics == core.current_metrics());
        CHECK(r.ticks == 2500);
        const auto& a = r.final_state.guesses;
        const auto& b = shadow.game().state().guesses;
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].key == b[i].key);
            CHECK(a[i].time == b[i].time);
            CHECK(a[i].assessment == b[i].assessment);
        }
    }
}

TEST_CASE("replay rejects corrupt logs with the line number")
{
    auto buffer = std::make_unique<std::stringstream>();
    std::stringstream* log = buffer.get();
    SessionCore core("x", assets(), LoopConfig{}, std::move(buffer));
    core.post_input(KeyPress{2});
    core.step();
    core.post_input(KeyPress{4});
    core.step();
    core.close();
    std::vector<std::string> lines;
    for (std::string l; std::getline(*log, l);)
        lines.push_back(l);
    REQUIRE(lines.size() >= 4);

    auto join = [](const std::vector<std::string>& ls) {
        std::string s;
        for (const auto& l : ls)
            s += l + "\n";
        return s;
    };
    auto error_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            replay_log(in);
        } catch (const LoadError& e) {
            return std::string(e.what());
        }
        return std::string();
    };

    auto corrupt = lines;
    corrupt[2] = corrupt[2].substr(0, corrupt[2].size() / 2);
    CHECK(error_of(join(corrupt)).find("log line 3") != std::string::npos);

    auto unknown = lines;
    unknown[1] = R"({"type":"mystery"})";
    CHECK(error_of(join(unknown)).find("log line 2") != std::string::npos);

    auto headless = lines;
    headless.erase(headless.begin());
    CHECK(error_of(join(headless)).find("log line 1") != std::string::npos);
    CHECK_FALSE(error_of("").empty());

    // Without the end record the log replays up to its last input.
    auto truncated = lines;
    truncated.pop_back();
    std::istringstream in(join(truncated));
    const ReplayResult r = replay_log(in);
    CHECK_FALSE(r.logged_metrics);
    CHECK(r.ticks == 2);
    CHECK(r.final_state.phase.kind == PhaseKind::Instructions);
}

TEST_CASE("session manager drives sessions at the tick rate")
{
    io::AppConfig base;
    base.log_dir = scratch_dir("manager");
    SessionManager manager(base);
    const std::string id = manager.create_session();
    CHECK(manager.ids() == std::vector<std::string>{id});
    auto core = manager.find(id);
    auto sub = core->subscribe(4096);

    std::this_thread::sleep_for(300ms);
    auto tick_now = [&] {
        std::optional<std::size_t> tick;
        for (const json& r : drain_json(*sub))
            if (r["type"] == "frame")
                tick = r["tick"].get<std::size_t>();
            else if (r["type"] == "snapshot" && !r["frame"].is_null())
                tick = r["frame"]["tick"].get<std::size_t>();
        return tick;
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto first = tick_now();
    std::this_thread::sleep_for(2000ms);
    const auto last = tick_now();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(first);
    REQUIRE(last);
    const double rate = static_cast<double>(*last - *first) / elapsed;
    CAPTURE(rate);
    CHECK(rate >= 29.0);
    CHECK(rate <= 31.0);

    core->post_input(KeyPress{2});
    std::this_thread::sleep_for(200ms);
    CHECK(core->snapshot()["frame"]["phase"]["kind"] == "Instructions");

    manager.close_session(id);
    CHECK_THROWS_AS(manager.find(id), NotFound);
    CHECK_THROWS_AS(manager.close_session(id), NotFound);
    const ReplayResult r = replay_log_file(base.log_dir / (id + ".jsonl"));
    REQUIRE(r.logged_metrics);
    CHECK(r.final_state.phase.kind == PhaseKind::Instructions);

    const std::string other = manager.create_session(json{{"condition", "C-Control"}, {"tick_hz", 60}});
    CHECK(other != id);
    CHECK_THROWS_AS(manager.create_session(json{{"condition", "C-Nope"}}), LoadError);
    CHECK_THROWS_AS(manager.create_session(json::array()), LoadError);
    manager.close_all();
    CHECK(manager.ids().empty());
}
