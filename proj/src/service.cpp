#include "avantsatie/service.hpp"

#include <chrono>
#include <fstream>
#include <istream>
#include <sstream>

#include "avantsatie/errors.hpp"

namespace avantsatie {

namespace protocol {

namespace {

json phase_json(const Phase& p)
{
    return json{{"kind", phase_kind_name(p.kind)}, {"level", p.level}, {"part", p.part}, {"index", p.index}};
}

json prompt_json(const Prompt& p, const Keyboard& keyboard)
{
    json out{{"id", p.id}, {"level", p.level}, {"part", p.part}, {"ordinal", p.ordinal}};
    out["highlight"] = p.highlight ? json(keyboard.key_name(*p.highlight)) : json(nullptr);
    return out;
}

} // namespace

json event_to_json(const GameEvent& e, std::size_t tick, const Keyboard& keyboard)
{
    json out{{"type", "event"},
             {"event", event_type_name(e.type)},
             {"tick", tick},
             {"t", e.t},
             {"phase", phase_json(e.phase)},
             {"expression", e.expression}};
    if (e.key) {
        out["key"] = *e.key;
        if (keyboard.contains(*e.key))
            out["note"] = keyboard.key_name(*e.key);
    }
    if (e.type == EventType::Guess) {
        out["correct"] = e.correct;
        out["assessment"] = assessment_name(e.assessment);
    }
    if (e.prompt)
        out["prompt"] = prompt_json(*e.prompt, keyboard);
    if (!e.message.empty())
        out["message"] = e.message;
    return out;
}

json frame_to_json(const Frame& f, const Keyboard& keyboard)
{
    json out{{"type", "frame"},
             {"tick", f.tick},
             {"t", f.t},
             {"angles_deg", f.posture.degrees()},
             {"expression", f.expression},
             {"attention", attention_name(f.attention)},
             {"target", {{"yaw_deg", f.target.yaw_deg}, {"pitch_deg", f.target.pitch_deg}}},
             {"phase", phase_json(f.phase)},
             {"prompt", prompt_json(f.prompt, keyboard)},
             {"nod", f.nod_active}};
    out["last_event"] = f.last_event ? event_to_json(*f.last_event, f.tick, keyboard) : json(nullptr);
    return out;
}

json metrics_to_json(const Metrics& m)
{
    return json{{"time_s", m.time}, {"wrong_hot", m.wrong_hot}, {"wrong_cold", m.wrong_cold},
                {"wrong_total", m.wrong_total}};
}

Metrics metrics_from_json(const json& doc)
{
    try {
        Metrics m;
        m.time = doc.at("time_s").get<double>();
        m.wrong_hot = doc.at("wrong_hot").get<std::size_t>();
        m.wrong_cold = doc.at("wrong_cold").get<std::size_t>();
        m.wrong_total = doc.at("wrong_total").get<std::size_t>();
        return m;
    } catch (const json::exception& e) {
        throw LoadError(std::string("bad metrics record: ") + e.what());
    }
}

json input_to_json(const LoopInput& in)
{
    if (const auto* k = std::get_if<KeyPress>(&in))
        return json{{"kind", "key"}, {"key", k->key}};
    if (const auto* f = std::get_if<FacePosition>(&in))
        return json{{"kind", "face"}, {"position", {f->position.x(), f->position.y(), f->position.z()}}};
    return json{{"kind", "face_lost"}};
}

LoopInput input_from_json(const json& doc, const Keyboard& keyboard)
{
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
        throw ContractViolation("input needs a string 'kind'");
    const std::string kind = doc["kind"];
    if (kind == "key") {
        const json& k = doc.value("key", json());
        if (k.is_number_integer() && k.get<long long>() >= 0)
            return KeyPress{k.get<std::size_t>()};
        if (k.is_string()) {
            const auto idx = keyboard.parse_key(k.get<std::string>());
            if (!idx)
                throw ContractViolation("unknown note '" + k.get<std::string>() + "'");
            return KeyPress{*idx};
        }
        throw ContractViolation("key input needs 'key' as a note name or index");
    }
    if (kind == "face") {
        const json& p = doc.value("position", json());
        if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
            throw ContractViolation("face input needs 'position': [x, y, z]");
        const Vec3 v(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        if (!v.allFinite())
            throw ContractViolation("face position must be finite");
        return FacePosition{v};
    }
    if (kind == "face_lost")
        return FaceLost{};
    throw ContractViolation("unknown input kind '" + kind + "'");
}

} // namespace protocol

Subscription::Subscription(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

void Subscription::push(std::string line)
{
    std::function<void()> notify;
    {
        std::lock_guard lock(mutex_);
        if (closed_)
            return;
        if (queue_.size() >= capacity_) {
            queue_.pop_front();
            ++dropped_;
        }
        queue_.push_back(std::move(line));
        notify = notify_;
    }
    cv_.notify_one();
    if (notify)
        notify();
}

std::optional<std::string> Subscription::pop(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty())
        return std::nullopt;
    std::string s = std::move(queue_.front());
    queue_.pop_front();
    return s;
}

std::vector<std::string> Subscription::drain()
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

void Subscription::close()
{
    std::function<void()> notify;
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
        notify = notify_;
    }
    cv_.notify_all();
    if (notify)
        notify();
}

bool Subscription::closed() const
{
    std::lock_guard lock(mutex_);
    return closed_;
}

std::size_t Subscription::dropped() const
{
    std::lock_guard lock(mutex_);
    return dropped_;
}

void Subscription::set_notifier(std::function<void()> notify)
{
    std::lock_guard lock(mutex_);
    notify_ = std::move(notify);
}

io::json session_header(const RobotAssets& assets, const LoopConfig& config, const io::json& extra)
{
    io::json grids = io::json::array();
    for (const auto& g : assets.grids)
        grids.push_back(io::grid_to_json(g));
    const GameConfig& g = config.game;
    io::json out{{"type", "header"},
                 {"version", 1},
                 {"condition", condition_name(g.condition)},
                 {"tick_hz", config.tick_hz},
                 {"chain", io::chain_to_json(assets.chain)},
                 {"expressions", io::expressions_to_json(assets.expressions)},
                 {"grids", grids},
                 {"composition", io::composition_to_json(g.composition, g.keyboard)},
                 {"layout", io::layout_to_json(config.layout)},
                 {"erik", io::settings_to_json(config.erik)},
                 {"nod", {{"amplitude_deg", config.nod.amplitude_deg},
                          {"frequency_hz", config.nod.frequency_hz},
                          {"duration_s", config.nod.duration_s}}},
                 {"game", {{"hot_radius", g.hot_radius},
                           {"hot_cold_mode", g.hot_cold_mode == HotColdMode::Absolute ? "absolute" : "relative"},
                           {"start_key", g.start_key},
                           {"intro_pages", g.intro_pages},
                           {"level_intro_pages", g.level_intro_pages},
                           {"page_seconds", g.page_seconds}}}};
    if (extra.is_object())
        for (auto it = extra.begin(); it != extra.end(); ++it)
            out[it.key()] = it.value();
    return out;
}

SessionCore::SessionCore(std::string id, std::shared_ptr<const RobotAssets> assets, LoopConfig config,
                         std::unique_ptr<std::ostream> log, io::json header_extra)
    : id_(std::move(id)), loop_(assets, config), log_(std::move(log))
{
    if (header_extra.is_null())
        header_extra = io::json::object();
    header_extra["session"] = id_;
    this->log(session_header(*assets, loop_.config(), header_extra));
}

SessionCore::~SessionCore()
{
    close();
}

void SessionCore::log(const io::json& record)
{
    if (log_) {
        (*log_) << record.dump() << '\n';
        log_->flush();
    }
}

void SessionCore::post_input(LoopInput input)
{
    std::lock_guard lock(input_mutex_);
    inputs_.push_back(std::move(input));
}

Frame SessionCore::step()
{
    std::vector<LoopInput> inputs;
    {
        std::lock_guard lock(input_mutex_);
        inputs.swap(inputs_);
    }
    const std::size_t tick = loop_.ticks();
    for (const auto& in : inputs)
        log(io::json{{"type", "input"}, {"tick", tick}, {"input", protocol::input_to_json(in)}});

    std::vector<GameEvent> events;
    Frame frame = loop_.step(inputs, &events);

    std::vector<std::string> lines;
    for (const auto& e : events) {
        const io::json rec = protocol::event_to_json(e, tick, keyboard());
        log(rec);
        lines.push_back(rec.dump());
    }
    io::json fj = protocol::frame_to_json(frame, keyboard());
    lines.push_back(fj.dump());

    {
        std::lock_guard lock(state_mutex_);
        last_frame_ = std::move(fj);
        metrics_ = metrics(loop_.game().state());
    }
    for (const auto& l : lines)
        publish(l);
    return frame;
}

void SessionCore::publish(const std::string& line)
{
    std::vector<std::shared_ptr<Subscription>> live;
    {
        std::lock_guard lock(state_mutex_);
        std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
        for (const auto& w : subscribers_)
            if (auto s = w.lock())
                live.push_back(std::move(s));
    }
    for (const auto& s : live)
        s->push(line);
}

io::json SessionCore::snapshot() const
{
    std::lock_guard lock(state_mutex_);
    return io::json{{"type", "snapshot"},
                    {"session", id_},
                    {"closed", closed_},
                    {"frame", last_frame_.is_null() ? io::json(nullptr) : last_frame_},
                    {"metrics", protocol::metrics_to_json(metrics_)}};
}

std::shared_ptr<Subscription> SessionCore::subscribe(std::size_t capacity)
{
    auto sub = std::make_shared<Subscription>(capacity);
    sub->push(snapshot().dump());
    std::lock_guard lock(state_mutex_);
    if (closed_)
        sub->close();
    else
        subscribers_.push_back(sub);
    return sub;
}

Metrics SessionCore::current_metrics() const
{
    std::lock_guard lock(state_mutex_);
    return metrics_;
}

void SessionCore::close()
{
    std::vector<std::shared_ptr<Subscription>> subs;
    {
        std::lock_guard lock(state_mutex_);
        if (closed_)
            return;
        closed_ = true;
        for (const auto& w : subscribers_)
            if (auto s = w.lock())
                subs.push_back(std::move(s));
        subscribers_.clear();
    }
    log(io::json{{"type", "end"},
                 {"ticks", loop_.ticks()},
                 {"phase", phase_kind_name(loop_.game().state().phase.kind)},
                 {"metrics", protocol::metrics_to_json(metrics(loop_.game().state()))}});
    for (const auto& s : subs)
        s->close();
}

bool SessionCore::closed() const
{
    std::lock_guard lock(state_mutex_);
    return closed_;
}

namespace {

struct ReplaySetup {
    std::shared_ptr<const RobotAssets> assets;
    LoopConfig config;
};

ReplaySetup setup_from_header(const io::json& h)
{
    KinematicChain chain = io::chain_from_json(h.at("chain"));
    auto expressions = io::expressions_from_json(h.at("expressions"), chain);
    std::vector<PostureGrid> grids;
    for (const auto& g : h.at("grids"))
        grids.push_back(io::grid_from_json(g));
    LoopConfig config;
    const auto cond = parse_condition(h.at("condition").get<std::string>());
    if (!cond)
        throw LoadError("header names an unknown condition");
    config.game.condition = *cond;
    config.tick_hz = h.at("tick_hz").get<double>();
    config.game.composition = io::composition_from_json(h.at("composition"), config.game.keyboard);
    config.layout = io::layout_from_json(h.at("layout"));
    config.erik = io::settings_from_json(h.at("erik"));
    const auto& nod = h.at("nod");
    config.nod = NodSettings{nod.at("amplitude_deg").get<double>(), nod.at("frequency_hz").get<double>(),
                             nod.at("duration_s").get<double>()};
    const auto& g = h.at("game");
    config.game.hot_radius = g.at("hot_radius").get<int>();
    config.game.hot_cold_mode =
        g.at("hot_cold_mode").get<std::string>() == "relative" ? HotColdMode::Relative : HotColdMode::Absolute;
    config.game.start_key = g.at("start_key").get<std::size_t>();
    config.game.intro_pages = g.at("intro_pages").get<std::size_t>();
    config.game.level_intro_pages = g.at("level_intro_pages").get<std::size_t>();
    config.game.page_seconds = g.at("page_seconds").get<double>();
    auto assets = std::make_shared<RobotAssets>(RobotAssets{std::move(chain), std::move(expressions), std::move(grids)});
    return ReplaySetup{std::move(assets), std::move(config)};
}

} // namespace

ReplayResult replay_log(std::istream& in)
{
    std::string line;
    std::size_t number = 0;
    std::optional<ReplaySetup> setup;
    std::map<std::size_t, std::vector<LoopInput>> inputs;
    std::optional<std::size_t> end_ticks;
    std::optional<Metrics> logged;
    std::size_t last_input_tick = 0;
    bool any_input = false;

    auto where = [&] { return "log line " + std::to_string(number) + ": "; };
    while (std::getline(in, line)) {
        ++number;
        if (line.empty())
            continue;
        if (end_ticks)
            throw LoadError(where() + "record after the end record");
        io::json rec;
        try {
            rec = io::json::parse(line);
        } catch (const io::json::parse_error& e) {
            throw LoadError(where() + "corrupt or truncated record: " + e.what());
        }
        try {
            const std::string type = rec.at("type").get<std::string>();
            if (number == 1 || !setup) {
                if (type != "header")
                    throw LoadError(where() + "expected the header record");
                if (rec.at("version").get<int>() != 1)
                    throw LoadError(where() + "unsupported log version");
                setup = setup_from_header(rec);
            } else if (type == "input") {
                const std::size_t tick = rec.at("tick").get<std::size_t>();
                if (any_input && tick < last_input_tick)
                    throw LoadError(where() + "input ticks go backwards");
                inputs[tick].push_back(protocol::input_from_json(rec.at("input"), setup->config.game.keyboard));
                last_input_tick = tick;
                any_input = true;
            } else if (type == "event") {
                // Events are derived data; the replay regenerates them.
            } else if (type == "end") {
                end_ticks = rec.at("ticks").get<std::size_t>();
                logged = protocol::metrics_from_json(rec.at("metrics"));
            } else {
                throw LoadError(where() + "unknown record type '" + type + "'");
            }
        } catch (const io::json::exception& e) {
            throw LoadError(where() + "malformed record: " + e.what());
        } catch (const ContractViolation& e) {
            throw LoadError(where() + e.what());
        } catch (const LoadError& e) {
            const std::string msg = e.what();
            if (msg.rfind("log line", 0) == 0)
                throw;
            throw LoadError(where() + msg);
        }
    }
    if (!setup)
        throw LoadError("log is empty");

    const std::size_t ticks = end_ticks ? *end_ticks : (any_input ? last_input_tick + 1 : 0);
    if (any_input && last_input_tick >= ticks)
        throw LoadError("log end record precedes its last input");
    RobotLoop loop(setup->assets, setup->config);
    static const std::vector<LoopInput> none;
    for (std::size_t k = 0; k < ticks; ++k) {
        auto it = inputs.find(k);
        loop.step(it == inputs.end() ? none : it->second);
    }
    ReplayResult r;
    r.final_state = loop.game().state();
    r.metrics = metrics(r.final_state);
    r.logged_metrics = logged;
    r.ticks = ticks;
    return r;
}

ReplayResult replay_log_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw LoadError(path.string() + ": cannot open file");
    try {
        return replay_log(in);
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

SessionManager::SessionManager(io::AppConfig base) : base_(std::move(base))
{
    base_.validate();
}

SessionManager::~SessionManager()
{
    close_all();
}

std::string SessionManager::create_session(const io::json& overrides)
{
    io::json doc = io::config_to_json(base_);
    if (overrides.is_object())
        doc.merge_patch(overrides);
    else if (!overrides.is_null())
        throw LoadError("session config must be a JSON object");
    const io::AppConfig config = io::config_from_json(doc);
    io::LoadedSetup setup = io::load_setup(config);

    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = "s" + std::to_string(next_id_++);
    }
    std::unique_ptr<std::ostream> log;
    if (!config.log_dir.empty()) {
        std::filesystem::create_directories(config.log_dir);
        const auto path = config.log_dir / (id + ".jsonl");
        auto file = std::make_unique<std::ofstream>(path);
        if (!*file)
            throw LoadError(path.string() + ": cannot open session log");
        log = std::move(file);
    }
    auto core = std::make_shared<SessionCore>(id, setup.assets, setup.loop, std::move(log),
                                              io::json{{"seed", config.seed}});
    auto stop = std::make_shared<std::atomic<bool>>(false);
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / config.tick_hz));
    std::thread driver([core, stop, period] {
        auto next = std::chrono::steady_clock::now();
        while (!stop->load()) {
            core->step();
            next += period;
            const auto now = std::chrono::steady_clock::now();
            // After a long stall resume from now instead of bursting to catch up.
            if (now > next + 5 * period)
                next = now;
            std::this_thread::sleep_until(next);
        }
    });
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, Running{core, std::move(driver), stop});
    return id;
}

std::shared_ptr<SessionCore> SessionManager::find(const std::string& id) const
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw NotFound("no session '" + id + "'");
    return it->second.core;
}

void SessionManager::close_session(const std::string& id)
{
    Running r;
    {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw NotFound("no session '" + id + "'");
        r = std::move(it->second);
        sessions_.erase(it);
    }
    r.stop->store(true);
    if (r.driver.joinable())
        r.driver.join();
    r.core->close();
}

void SessionManager::close_all()
{
    for (const auto& id : ids()) {
        try {
            close_session(id);
        } catch (const NotFound&) {
        }
    }
}

std::vector<std::string> SessionManager::ids() const
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, r] : sessions_)
        out.push_back(id);
    return out;
}

} // namespace avantsatie
