// avantsatie: solver sweeps, grid building, simulated experiments, the
// session server and log replay.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "avantsatie/csv.hpp"
#include "avantsatie/errors.hpp"
#include "avantsatie/io.hpp"
#include "avantsatie/server.hpp"
#include "avantsatie/service.hpp"
#include "avantsatie/simulation.hpp"
#include "avantsatie/solvers.hpp"
#include "avantsatie/sweep.hpp"

using namespace avantsatie;

namespace {

constexpr int kOk = 0;
constexpr int kContract = 1;
constexpr int kNonConvergence = 2;

struct Globals {
    std::string chain;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

io::AppConfig app_config(const Globals& g)
{
    io::AppConfig c = g.config.empty() ? io::AppConfig{} : io::load_config(g.config);
    if (!g.chain.empty())
        c.chain_file = g.chain;
    if (g.seed)
        c.seed = *g.seed;
    return c;
}

// Writes to --out when given, stdout otherwise.
template <class F>
void emit(const std::string& path, F&& write)
{
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw LoadError(path + ": cannot write file");
    write(out);
}

std::vector<double> degrees_of(const Posture& p) { return p.degrees(); }

int cmd_solve(const Globals& g, const std::string& method, const std::string& expression, double yaw, double pitch,
              const std::vector<double>& point, const std::string& trace_path)
{
    const io::LoadedSetup setup = io::load_setup(app_config(g));
    const RobotAssets& a = *setup.assets;
    const ExpressionPosture& e = find_expression(a.expressions, expression);
    io::json out{{"method", method}, {"expression", expression}};
    bool converged = false;

    if (method == "erik" || method == "bwcd") {
        const Vec3 dir = direction_from_yaw_pitch(deg_to_rad(yaw), deg_to_rad(pitch));
        out["target"] = {{"yaw_deg", yaw}, {"pitch_deg", pitch}};
        if (method == "erik") {
            const SolveResult r = erik_solve(a.chain, e, Direction{dir}, setup.loop.erik);
            out["angles_deg"] = degrees_of(r.posture);
            out["error_deg"] = rad_to_deg(r.report.angle_error);
            out["divergence_deg"] = rad_to_deg(r.report.posture_divergence);
            out["iterations"] = r.report.iterations;
            converged = r.report.converged;
        } else {
            std::vector<double> trace;
            const Posture p = bwcd_warp_traced(a.chain, e.posture, dir, setup.loop.erik.warp, trace);
            out["angles_deg"] = degrees_of(p);
            out["error_deg"] = rad_to_deg(trace.back());
            out["sweeps"] = trace.size() - 1;
            converged = trace.back() < setup.loop.erik.warp.tolerance;
            if (!trace_path.empty())
                emit(trace_path, [&](std::ostream& os) { write_trace_csv(os, trace); });
        }
    } else if (method == "ccd" || method == "fabrik") {
        if (point.size() != 3)
            throw ContractViolation("--point x y z is required for " + method);
        const Point target{Vec3(point[0], point[1], point[2])};
        const SolverSettings settings{1e-3, 200};
        const ReachResult r = method == "ccd" ? ccd_solve(a.chain, e.posture, target, settings)
                                              : fabrik_solve(a.chain, e.posture, target, settings);
        out["target"] = {{"point", point}};
        out["angles_deg"] = degrees_of(r.posture);
        out["position_error_m"] = r.report.position_error;
        out["iterations"] = r.report.iterations;
        converged = r.report.converged;
        if (!trace_path.empty())
            emit(trace_path, [&](std::ostream& os) { write_trace_csv(os, r.report.error_trace); });
    } else {
        throw ContractViolation("unknown method '" + method + "' (erik, bwcd, ccd, fabrik)");
    }
    out["converged"] = converged;
    emit(g.out, [&](std::ostream& os) { os << out.dump(2) << '\n'; });
    return converged ? kOk : kNonConvergence;
}

int cmd_sweep(const Globals& g, Envelope env, std::size_t threads)
{
    const io::LoadedSetup setup = io::load_setup(app_config(g));
    const auto rows = run_sweep(setup.assets->chain, setup.assets->expressions, env, setup.loop.erik, threads);
    emit(g.out, [&](std::ostream& os) { write_sweep_csv(os, rows); });
    std::size_t failed = 0;
    for (const auto& r : rows)
        failed += !r.report.converged || !r.within_limits;
    if (failed) {
        std::cerr << failed << " of " << rows.size() << " cells did not converge within limits\n";
        return kNonConvergence;
    }
    return kOk;
}

int cmd_build_grid(const Globals& g)
{
    io::AppConfig c = app_config(g);
    c.grid_files.clear();
    const io::LoadedSetup setup = io::load_setup(c);
    const std::filesystem::path dir = g.out.empty() ? "." : g.out;
    for (const auto& grid : setup.assets->grids) {
        const auto path = dir / ("grid_" + grid.expression() + ".json");
        io::write_json_file(path, io::grid_to_json(grid));
        std::cout << path.string() << '\n';
    }
    return kOk;
}

PolicySpec parse_policy(const std::string& name, Condition condition, double noise)
{
    if (name == "auto")
        return condition == Condition::Control ? PolicySpec{RandomTrialError{}} : PolicySpec{HintFollowing{2, noise}};
    if (name == "random")
        return RandomTrialError{};
    if (name == "hint")
        return HintFollowing{2, noise};
    throw ContractViolation("unknown policy '" + name + "' (auto, random, hint)");
}

int cmd_simulate(const Globals& g, const std::string& conditions, const std::string& policy, std::size_t episodes,
                 double noise, const std::string& summary_path)
{
    const io::AppConfig c = app_config(g);
    const io::LoadedSetup setup = io::load_setup(c);
    std::vector<Cell> cells;
    std::stringstream ss(conditions);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto cond = parse_condition(item);
        if (!cond)
            throw ContractViolation("unknown condition '" + item + "'");
        cells.push_back(Cell{*cond, parse_policy(policy, *cond, noise)});
    }
    const ExperimentResult r = run_experiment(setup.assets, setup.loop, cells, episodes, c.seed);
    emit(g.out, [&](std::ostream& os) { write_results_csv(os, r.episodes); });
    if (!summary_path.empty())
        emit(summary_path, [&](std::ostream& os) { write_summary_csv(os, r); });
    write_summary_text(g.out.empty() ? std::cerr : std::cout, r);
    return kOk;
}

HttpServer* g_server = nullptr;

void on_signal(int)
{
    if (g_server)
        g_server->stop();
}

int cmd_serve(const Globals& g, std::optional<unsigned short> port, std::optional<std::string> bind)
{
    io::AppConfig c = app_config(g);
    if (const char* env = std::getenv("AVANTSATIE_PORT"))
        c.port = static_cast<unsigned short>(std::stoul(env));
    if (const char* env = std::getenv("AVANTSATIE_BIND"))
        c.bind = env;
    if (port)
        c.port = *port;
    if (bind)
        c.bind = *bind;
    io::load_setup(c); // fail fast on bad files
    SessionManager sessions(c);
    HttpServer server(sessions, c.bind, c.port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << c.bind << ":" << server.port() << std::endl;
    server.run();
    g_server = nullptr;
    sessions.close_all();
    return kOk;
}

int cmd_replay(const Globals& g, const std::string& log)
{
    const ReplayResult r = replay_log_file(log);
    io::json out{{"ticks", r.ticks},
                 {"phase", phase_kind_name(r.final_state.phase.kind)},
                 {"metrics", protocol::metrics_to_json(r.metrics)}};
    if (r.logged_metrics)
        out["logged_metrics"] = protocol::metrics_to_json(*r.logged_metrics);
    emit(g.out, [&](std::ostream& os) { os << out.dump(2) << '\n'; });
    if (r.logged_metrics && !(*r.logged_metrics == r.metrics)) {
        std::cerr << "replayed metrics differ from the logged metrics\n";
        return kContract;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Expressive gaze IK toolkit and hot/cold piano game simulator"};
    app.require_subcommand(1, 1);
    app.footer("Exit codes: 0 success, 1 contract/validation failure, 2 non-convergence.");

    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--chain", g.chain, "chain JSON file (default: built-in desk chain)");
    app.add_option("--config", g.config, "config JSON file");
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_option("--out", g.out, "output file (default: stdout)");

    auto* solve = app.add_subcommand("solve", "solve one gaze target and print the posture as JSON");
    std::string method = "erik", expression = "Neutral", trace;
    double yaw = 0.0, pitch = 0.0;
    std::vector<double> point;
    solve->add_option("--method", method, "erik | bwcd | ccd | fabrik")->capture_default_str();
    solve->add_option("--expression", expression, "expression to hold")->capture_default_str();
    solve->add_option("--yaw", yaw, "target yaw, degrees");
    solve->add_option("--pitch", pitch, "target pitch, degrees");
    solve->add_option("--point", point, "reach target x y z, meters (ccd, fabrik)")->expected(3);
    solve->add_option("--trace", trace, "per-iteration error CSV (iteration,error)");

    auto* sweep = app.add_subcommand("sweep", "solve every expression over a yaw/pitch envelope");
    Envelope env;
    std::size_t threads = 0;
    sweep->add_option("--step", env.step_deg, "grid step, degrees")->capture_default_str();
    sweep->add_option("--yaw-min", env.yaw_min_deg)->capture_default_str();
    sweep->add_option("--yaw-max", env.yaw_max_deg)->capture_default_str();
    sweep->add_option("--pitch-min", env.pitch_min_deg)->capture_default_str();
    sweep->add_option("--pitch-max", env.pitch_max_deg)->capture_default_str();
    sweep->add_option("--threads", threads, "worker threads (0: all cores)");
    sweep->footer("CSV columns: expression,yaw_deg,pitch_deg,error_deg,divergence_deg,iterations,"
                  "converged,solve_us. Exit code 2 if any cell fails to converge.");

    auto* build = app.add_subcommand("build-grid", "solve the 30 grid knots per expression; --out is a directory");

    auto* simulate = app.add_subcommand("simulate", "run seeded simulated players through the full game loop");
    std::string conditions = "c-erik,c-ebps,c-control", policy = "auto", summary;
    std::size_t episodes = 19;
    double noise = 0.0;
    simulate->add_option("--conditions", conditions, "comma-separated conditions")->capture_default_str();
    simulate->add_option("--policy", policy, "auto | random | hint")->capture_default_str();
    simulate->add_option("--episodes", episodes, "episodes per cell")->capture_default_str();
    simulate->add_option("--attention-noise", noise, "hint follower miss probability")->capture_default_str();
    simulate->add_option("--summary", summary, "per-cell summary CSV");
    simulate->footer("Results CSV columns: condition,policy,seed,time_s,wrong_hot,wrong_cold,wrong_total. Summary "
                     "CSV columns: kind,cell,other,n,time_mean,time_sd,wrong_hot_mean,wrong_hot_sd,wrong_cold_mean,"
                     "wrong_cold_sd,wrong_total_mean,wrong_total_sd,wrong_total_u,wrong_total_p,time_u,time_p.");

    auto* serve = app.add_subcommand("serve", "host interactive sessions over HTTP and WebSocket");
    std::optional<unsigned short> port;
    std::optional<std::string> bind;
    serve->add_option("--port", port, "listen port (env AVANTSATIE_PORT)");
    serve->add_option("--bind", bind, "bind address (env AVANTSATIE_BIND)");

    auto* replay = app.add_subcommand("replay", "re-execute a JSONL session log and print its metrics");
    std::string log;
    replay->add_option("log", log, "session log")->required();

    for (auto* sub : {solve, sweep, build, simulate, serve, replay})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kContract;
    }
    if (*seed_opt)
        g.seed = seed;

    try {
        if (*solve)
            return cmd_solve(g, method, expression, yaw, pitch, point, trace);
        if (*sweep)
            return cmd_sweep(g, env, threads);
        if (*build)
            return cmd_build_grid(g);
        if (*simulate)
            return cmd_simulate(g, conditions, policy, episodes, noise, summary);
        if (*serve)
            return cmd_serve(g, port, bind);
        if (*replay)
            return cmd_replay(g, log);
    } catch (const GridBuildError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kContract;
    }
    return kContract;
}
