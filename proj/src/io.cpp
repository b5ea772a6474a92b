#include "avantsatie/io.hpp"

#include <fstream>
#include <sstream>

#include "avantsatie/errors.hpp"

namespace avantsatie::io {

namespace {

[[noreturn]] void fail(const std::string& what)
{
    throw LoadError(what);
}

const json& field(const json& doc, const char* key)
{
    if (!doc.is_object())
        fail(std::string("expected an object holding '") + key + "'");
    auto it = doc.find(key);
    if (it == doc.end())
        fail(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& v, const std::string& what)
{
    if (!v.is_number())
        fail(what + " must be a number");
    return v.get<double>();
}

std::string text(const json& v, const std::string& what)
{
    if (!v.is_string())
        fail(what + " must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& what)
{
    if (!v.is_array())
        fail(what + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(number(v[i], what + "[" + std::to_string(i) + "]"));
    return out;
}

Vec3 vec3(const json& v, const std::string& what)
{
    const auto n = numbers(v, what);
    if (n.size() != 3)
        fail(what + " must hold 3 numbers");
    return Vec3(n[0], n[1], n[2]);
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

double opt_number(const json& doc, const char* key, double fallback)
{
    auto it = doc.find(key);
    return it == doc.end() ? fallback : number(*it, key);
}

json frame_json(const FrameTransform& f)
{
    const Quat& q = f.orientation;
    return json{{"position", vec3_json(f.position)}, {"orientation_wxyz", json::array({q.w(), q.x(), q.y(), q.z()})}};
}

FrameTransform frame_from(const json& doc, const std::string& what)
{
    FrameTransform f;
    f.position = vec3(field(doc, "position"), what + ".position");
    const auto q = numbers(field(doc, "orientation_wxyz"), what + ".orientation_wxyz");
    if (q.size() != 4)
        fail(what + ".orientation_wxyz must hold 4 numbers");
    f.orientation = Quat(q[0], q[1], q[2], q[3]);
    if (std::abs(f.orientation.norm() - 1.0) > 1e-6)
        fail(what + ".orientation_wxyz must be a unit quaternion");
    f.orientation.normalize();
    return f;
}

// Runs a constructor that validates with ContractViolation and reports it as a load failure.
template <class F>
auto checked(const std::string& what, F&& make)
{
    try {
        return make();
    } catch (const ContractViolation& e) {
        fail(what + ": " + e.what());
    } catch (const NotFound& e) {
        fail(what + ": " + e.what());
    }
}

template <class F>
auto from_file(const std::filesystem::path& path, F&& parse)
{
    try {
        return parse(read_json_file(path));
    } catch (const LoadError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path.string(), 0) == 0)
            throw;
        fail(path.string() + ": " + msg);
    }
}

} // namespace

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(path.string() + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(path.string() + ": parse error: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        fail(path.string() + ": cannot write file");
    out << doc.dump(2) << '\n';
}

json chain_to_json(const KinematicChain& chain)
{
    json joints = json::array();
    for (const auto& j : chain.joints())
        joints.push_back(json{{"axis", vec3_json(j.rotation_axis)},
                              {"segment_length", j.segment_length},
                              {"limit_deg", json::array({rad_to_deg(j.limit.min), rad_to_deg(j.limit.max)})}});
    return json{{"base", frame_json(chain.base())},
                {"joints", joints},
                {"effector_axis", vec3_json(chain.effector_axis())}};
}

KinematicChain chain_from_json(const json& doc)
{
    const FrameTransform base = frame_from(field(doc, "base"), "base");
    const json& js = field(doc, "joints");
    if (!js.is_array())
        fail("joints must be an array");
    std::vector<JointSpec> joints;
    for (std::size_t i = 0; i < js.size(); ++i) {
        const std::string w = "joints[" + std::to_string(i) + "]";
        JointSpec j;
        j.rotation_axis = vec3(field(js[i], "axis"), w + ".axis");
        j.segment_length = number(field(js[i], "segment_length"), w + ".segment_length");
        const auto lim = numbers(field(js[i], "limit_deg"), w + ".limit_deg");
        if (lim.size() != 2)
            fail(w + ".limit_deg must hold [min, max]");
        j.limit = JointLimit{deg_to_rad(lim[0]), deg_to_rad(lim[1])};
        joints.push_back(j);
    }
    const Vec3 effector = vec3(field(doc, "effector_axis"), "effector_axis");
    return checked("chain", [&] { return KinematicChain(base, std::move(joints), effector); });
}

json expressions_to_json(const std::vector<ExpressionPosture>& set)
{
    json out = json::array();
    for (const auto& e : set)
        out.push_back(json{{"name", e.name}, {"angles_deg", e.posture.degrees()}});
    return out;
}

std::vector<ExpressionPosture> expressions_from_json(const json& doc, const KinematicChain& chain)
{
    if (!doc.is_array())
        fail("expression set must be an array");
    std::vector<ExpressionPosture> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string w = "expressions[" + std::to_string(i) + "]";
        const std::string name = text(field(doc[i], "name"), w + ".name");
        const auto deg = numbers(field(doc[i], "angles_deg"), w + ".angles_deg");
        out.push_back(checked(w, [&] { return ExpressionPosture::authored(chain, name, Posture::from_degrees(deg)); }));
    }
    return out;
}

json grid_to_json(const PostureGrid& grid)
{
    json limits = json::array();
    for (const auto& l : grid.limits())
        limits.push_back(json::array({rad_to_deg(l.min), rad_to_deg(l.max)}));
    json postures = json::array();
    for (std::size_t p = 0; p < grid.pitch_knots_deg().size(); ++p)
        for (std::size_t y = 0; y < grid.yaw_knots_deg().size(); ++y)
            postures.push_back(json{{"yaw_deg", grid.yaw_knots_deg()[y]},
                                    {"pitch_deg", grid.pitch_knots_deg()[p]},
                                    {"angles_deg", grid.at(y, p).degrees()}});
    return json{{"expression", grid.expression()},
                {"yaw_knots_deg", grid.yaw_knots_deg()},
                {"pitch_knots_deg", grid.pitch_knots_deg()},
                {"limits_deg", limits},
                {"postures", postures}};
}

PostureGrid grid_from_json(const json& doc)
{
    const std::string name = text(field(doc, "expression"), "expression");
    const auto yaws = numbers(field(doc, "yaw_knots_deg"), "yaw_knots_deg");
    const auto pitches = numbers(field(doc, "pitch_knots_deg"), "pitch_knots_deg");
    std::vector<JointLimit> limits;
    const json& lj = field(doc, "limits_deg");
    if (!lj.is_array())
        fail("limits_deg must be an array");
    for (std::size_t i = 0; i < lj.size(); ++i) {
        const auto l = numbers(lj[i], "limits_deg[" + std::to_string(i) + "]");
        if (l.size() != 2)
            fail("limits_deg entries must hold [min, max]");
        limits.push_back(JointLimit{deg_to_rad(l[0]), deg_to_rad(l[1])});
    }
    const json& pj = field(doc, "postures");
    if (!pj.is_array())
        fail("postures must be an array");
    std::vector<std::optional<Posture>> slots(yaws.size() * pitches.size());
    for (std::size_t i = 0; i < pj.size(); ++i) {
        const std::string w = "postures[" + std::to_string(i) + "]";
        const double yaw = number(field(pj[i], "yaw_deg"), w + ".yaw_deg");
        const double pitch = number(field(pj[i], "pitch_deg"), w + ".pitch_deg");
        auto yi = std::find(yaws.begin(), yaws.end(), yaw);
        auto pi = std::find(pitches.begin(), pitches.end(), pitch);
        if (yi == yaws.end() || pi == pitches.end())
            fail(w + " is not on a knot");
        const std::size_t slot =
            static_cast<std::size_t>(pi - pitches.begin()) * yaws.size() + static_cast<std::size_t>(yi - yaws.begin());
        if (slots[slot])
            fail(w + " repeats a knot");
        slots[slot] = Posture::from_degrees(numbers(field(pj[i], "angles_deg"), w + ".angles_deg"));
    }
    std::vector<Posture> postures;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        if (!slots[s])
            fail("grid is missing the posture at yaw " + std::to_string(yaws[s % yaws.size()]) + " pitch " +
                 std::to_string(pitches[s / yaws.size()]));
        postures.push_back(*slots[s]);
    }
    return checked("grid", [&] { return PostureGrid(name, yaws, pitches, std::move(postures), std::move(limits)); });
}

json composition_to_json(const Composition& composition, const Keyboard& keyboard)
{
    json levels = json::array();
    for (const auto& l : composition.levels) {
        json parts = json::array();
        for (const auto& p : l.parts) {
            json notes = json::array();
            for (std::size_t n : p.notes)
                notes.push_back(keyboard.key_name(n));
            parts.push_back(notes);
        }
        levels.push_back(json{{"name", l.name}, {"parts", parts}});
    }
    const Keyboard lowest_only{keyboard.lowest_midi, 1};
    return json{{"keyboard", {{"lowest", lowest_only.key_name(0)}, {"keys", keyboard.key_count}}},
                {"levels", levels}};
}

Composition composition_from_json(const json& doc, Keyboard& keyboard)
{
    keyboard = Keyboard{};
    if (auto kb = doc.find("keyboard"); kb != doc.end()) {
        const std::string lowest = text(field(*kb, "lowest"), "keyboard.lowest");
        bool found = false;
        for (int midi = 0; midi < 128 && !found; ++midi) {
            if (Keyboard{midi, 1}.key_name(0) == lowest) {
                keyboard.lowest_midi = midi;
                found = true;
            }
        }
        if (!found)
            fail("keyboard.lowest '" + lowest + "' is not a note name");
        const double keys = number(field(*kb, "keys"), "keyboard.keys");
        if (!(keys >= 1 && keys <= 88) || keys != std::floor(keys))
            fail("keyboard.keys must be an integer in [1, 88]");
        keyboard.key_count = static_cast<std::size_t>(keys);
    }
    Composition c;
    const json& levels = field(doc, "levels");
    if (!levels.is_array())
        fail("levels must be an array");
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const std::string w = "levels[" + std::to_string(l) + "]";
        Level level;
        level.name = text(field(levels[l], "name"), w + ".name");
        const json& parts = field(levels[l], "parts");
        if (!parts.is_array())
            fail(w + ".parts must be an array");
        for (std::size_t p = 0; p < parts.size(); ++p) {
            Part part;
            if (!parts[p].is_array())
                fail(w + ".parts[" + std::to_string(p) + "] must be an array of note names");
            for (const auto& n : parts[p]) {
                const std::string name = text(n, w + " note");
                const auto idx = keyboard.parse_key(name);
                if (!idx)
                    fail(w + ": note '" + name + "' is not on the keyboard");
                part.notes.push_back(*idx);
            }
            level.parts.push_back(std::move(part));
        }
        c.levels.push_back(std::move(level));
    }
    checked("composition", [&] {
        c.validate(keyboard);
        return 0;
    });
    return c;
}

json layout_to_json(const SceneLayout& layout)
{
    json keys = json::array();
    for (const auto& k : layout.piano_keys)
        keys.push_back(vec3_json(k));
    json out{{"robot_base", frame_json(layout.robot_base)},
             {"screen_center", vec3_json(layout.screen_center)},
             {"piano_keys", keys}};
    if (layout.player_head)
        out["player_head"] = vec3_json(*layout.player_head);
    return out;
}

SceneLayout layout_from_json(const json& doc)
{
    SceneLayout s;
    s.robot_base = frame_from(field(doc, "robot_base"), "robot_base");
    s.screen_center = vec3(field(doc, "screen_center"), "screen_center");
    const json& keys = field(doc, "piano_keys");
    if (!keys.is_array())
        fail("piano_keys must be an array");
    for (std::size_t i = 0; i < keys.size(); ++i)
        s.piano_keys.push_back(vec3(keys[i], "piano_keys[" + std::to_string(i) + "]"));
    if (auto h = doc.find("player_head"); h != doc.end() && !h->is_null())
        s.player_head = vec3(*h, "player_head");
    checked("layout", [&] {
        s.validate();
        return 0;
    });
    return s;
}

json settings_to_json(const ErikSettings& s)
{
    return json{{"tolerance_deg", rad_to_deg(s.solver.tolerance)},
                {"max_iterations", s.solver.max_iterations},
                {"posture_pull", s.posture_pull},
                {"filter", {{"time_constant_s", s.filter.time_constant},
                            {"max_joint_velocity_deg_s", rad_to_deg(s.filter.max_joint_velocity)}}},
                {"warp", {{"tolerance_deg", rad_to_deg(s.warp.tolerance)}, {"max_sweeps", s.warp.max_sweeps}}}};
}

ErikSettings settings_from_json(const json& doc)
{
    ErikSettings s;
    if (!doc.is_object())
        fail("erik settings must be an object");
    s.solver.tolerance = deg_to_rad(opt_number(doc, "tolerance_deg", rad_to_deg(s.solver.tolerance)));
    s.solver.max_iterations =
        static_cast<std::size_t>(opt_number(doc, "max_iterations", static_cast<double>(s.solver.max_iterations)));
    s.posture_pull = opt_number(doc, "posture_pull", s.posture_pull);
    if (auto f = doc.find("filter"); f != doc.end()) {
        s.filter.time_constant = opt_number(*f, "time_constant_s", s.filter.time_constant);
        s.filter.max_joint_velocity =
            deg_to_rad(opt_number(*f, "max_joint_velocity_deg_s", rad_to_deg(s.filter.max_joint_velocity)));
    }
    if (auto w = doc.find("warp"); w != doc.end()) {
        s.warp.tolerance = deg_to_rad(opt_number(*w, "tolerance_deg", rad_to_deg(s.warp.tolerance)));
        s.warp.max_sweeps = static_cast<std::size_t>(opt_number(*w, "max_sweeps", static_cast<double>(s.warp.max_sweeps)));
    }
    checked("erik settings", [&] {
        s.validate();
        return 0;
    });
    return s;
}

void AppConfig::validate() const
{
    if (!(tick_hz >= 10.0 && tick_hz <= 120.0))
        throw ContractViolation("tick rate must lie in [10, 120] Hz");
    erik.validate();
    nod.validate();
    if (hot_radius < 0)
        throw ContractViolation("hot radius must be >= 0");
    if (!(page_seconds > 0.0))
        throw ContractViolation("instruction page time must be positive");
}

json config_to_json(const AppConfig& c)
{
    json out{{"condition", condition_name(c.condition)},
             {"tick_hz", c.tick_hz},
             {"seed", c.seed},
             {"hot_radius", c.hot_radius},
             {"hot_cold_mode", c.hot_cold_mode == HotColdMode::Absolute ? "absolute" : "relative"},
             {"page_seconds", c.page_seconds},
             {"erik", settings_to_json(c.erik)},
             {"nod", {{"amplitude_deg", c.nod.amplitude_deg},
                      {"frequency_hz", c.nod.frequency_hz},
                      {"duration_s", c.nod.duration_s}}},
             {"log_dir", c.log_dir.string()},
             {"bind", c.bind},
             {"port", c.port}};
    if (c.chain_file)
        out["chain"] = c.chain_file->string();
    if (c.expressions_file)
        out["expressions"] = c.expressions_file->string();
    if (!c.grid_files.empty()) {
        json g = json::array();
        for (const auto& p : c.grid_files)
            g.push_back(p.string());
        out["grids"] = g;
    }
    if (c.composition_file)
        out["composition"] = c.composition_file->string();
    if (c.layout_file)
        out["layout"] = c.layout_file->string();
    return out;
}

AppConfig config_from_json(const json& doc, const std::filesystem::path& base_dir)
{
    if (!doc.is_object())
        fail("config must be an object");
    AppConfig c;
    auto path_of = [&](const char* key) -> std::optional<std::filesystem::path> {
        auto it = doc.find(key);
        if (it == doc.end() || it->is_null())
            return std::nullopt;
        std::filesystem::path p = text(*it, key);
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    if (auto it = doc.find("condition"); it != doc.end()) {
        const auto cond = parse_condition(text(*it, "condition"));
        if (!cond)
            fail("condition must be one of C-ERIK, C-EBPS, C-Control");
        c.condition = *cond;
    }
    c.chain_file = path_of("chain");
    c.expressions_file = path_of("expressions");
    if (auto it = doc.find("grids"); it != doc.end()) {
        if (!it->is_array())
            fail("grids must be an array of paths");
        for (const auto& g : *it) {
            std::filesystem::path p = text(g, "grids entry");
            c.grid_files.push_back(p.is_absolute() || base_dir.empty() ? p : base_dir / p);
        }
    }
    c.composition_file = path_of("composition");
    c.layout_file = path_of("layout");
    c.tick_hz = opt_number(doc, "tick_hz", c.tick_hz);
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (!it->is_number_unsigned())
            fail("seed must be a non-negative integer");
        c.seed = it->get<std::uint64_t>();
    }
    c.hot_radius = static_cast<int>(opt_number(doc, "hot_radius", c.hot_radius));
    if (auto it = doc.find("hot_cold_mode"); it != doc.end()) {
        const std::string m = text(*it, "hot_cold_mode");
        if (m == "absolute")
            c.hot_cold_mode = HotColdMode::Absolute;
        else if (m == "relative")
            c.hot_cold_mode = HotColdMode::Relative;
        else
            fail("hot_cold_mode must be 'absolute' or 'relative'");
    }
    c.page_seconds = opt_number(doc, "page_seconds", c.page_seconds);
    if (auto it = doc.find("erik"); it != doc.end())
        c.erik = settings_from_json(*it);
    if (auto it = doc.find("nod"); it != doc.end()) {
        c.nod.amplitude_deg = opt_number(*it, "amplitude_deg", c.nod.amplitude_deg);
        c.nod.frequency_hz = opt_number(*it, "frequency_hz", c.nod.frequency_hz);
        c.nod.duration_s = opt_number(*it, "duration_s", c.nod.duration_s);
    }
    if (auto p = path_of("log_dir"))
        c.log_dir = *p;
    if (auto it = doc.find("bind"); it != doc.end())
        c.bind = text(*it, "bind");
    if (auto it = doc.find("port"); it != doc.end()) {
        const double port = number(*it, "port");
        if (!(port >= 0 && port <= 65535) || port != std::floor(port))
            fail("port must be an integer in [0, 65535]");
        c.port = static_cast<unsigned short>(port);
    }
    checked("config", [&] {
        c.validate();
        return 0;
    });
    return c;
}

AppConfig load_config(const std::filesystem::path& path)
{
    return from_file(path, [&](const json& doc) { return config_from_json(doc, path.parent_path()); });
}

LoadedSetup load_setup(const AppConfig& config)
{
    config.validate();
    KinematicChain chain = config.chain_file ? from_file(*config.chain_file, chain_from_json)
                                             : KinematicChain::default_desk_chain();
    std::vector<ExpressionPosture> expressions =
        config.expressions_file
            ? from_file(*config.expressions_file, [&](const json& d) { return expressions_from_json(d, chain); })
            : default_expression_set(chain);

    LoopConfig loop;
    loop.erik = config.erik;
    loop.nod = config.nod;
    loop.tick_hz = config.tick_hz;
    loop.game.condition = config.condition;
    loop.game.hot_radius = config.hot_radius;
    loop.game.hot_cold_mode = config.hot_cold_mode;
    loop.game.page_seconds = config.page_seconds;
    if (config.composition_file)
        loop.game.composition = from_file(*config.composition_file,
                                          [&](const json& d) { return composition_from_json(d, loop.game.keyboard); });
    if (config.layout_file)
        loop.layout = from_file(*config.layout_file, layout_from_json);

    std::vector<PostureGrid> grids;
    for (const auto& p : config.grid_files)
        grids.push_back(from_file(p, grid_from_json));
    if (grids.empty())
        for (const auto& e : expressions)
            grids.push_back(build_grid_from_erik(chain, e, config.erik));

    auto assets = std::make_shared<RobotAssets>(RobotAssets{std::move(chain), std::move(expressions), std::move(grids)});
    checked("setup", [&] {
        assets->validate();
        loop.validate();
        return 0;
    });
    return LoadedSetup{std::move(assets), std::move(loop)};
}

} // namespace avantsatie::io
