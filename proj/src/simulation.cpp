#include "avantsatie/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <thread>

#include "avantsatie/csv.hpp"
#include "avantsatie/errors.hpp"

namespace avantsatie {

namespace {

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

using NoteId = std::tuple<std::size_t, std::size_t, std::size_t>;

NoteId note_of(const Prompt& p) { return {p.level, p.part, p.ordinal}; }

// Shared behaviour outside guessing: read the highlighted key off the screen.
std::optional<std::size_t> follow_screen(const Prompt& p)
{
    if (p.id == "start" || p.id == "replay" || p.id == "full_replay")
        return p.highlight;
    return std::nullopt;
}

std::size_t pick(const std::vector<std::size_t>& from, Rng& rng)
{
    std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
    return from[d(rng)];
}

bool within(std::size_t a, std::size_t b, int radius)
{
    return std::abs(static_cast<long>(a) - static_cast<long>(b)) <= radius;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

std::string policy_name(const PolicySpec& spec)
{
    if (std::holds_alternative<RandomTrialError>(spec))
        return "Random";
    if (std::holds_alternative<HintFollowing>(spec))
        return "HintFollowing";
    return "Scripted";
}

RandomPlayer::RandomPlayer(std::vector<std::size_t> candidates) : candidates_(std::move(candidates))
{
    if (candidates_.empty())
        throw ContractViolation("random player needs candidate keys");
}

std::optional<std::size_t> RandomPlayer::decide(const Observation& obs, Rng& rng)
{
    const Prompt& p = *obs.prompt;
    if (p.id != "guess")
        return follow_screen(p);
    if (note_ != note_of(p)) {
        note_ = note_of(p);
        tried_.clear();
    }
    std::vector<std::size_t> open;
    for (std::size_t k : candidates_)
        if (!tried_.count(k))
            open.push_back(k);
    if (open.empty()) {
        tried_.clear();
        open = candidates_;
    }
    const std::size_t key = pick(open, rng);
    tried_.insert(key);
    return key;
}

HintFollower::HintFollower(std::vector<std::size_t> candidates, HintFollowing params)
    : all_(std::move(candidates)), params_(params)
{
    if (all_.empty())
        throw ContractViolation("hint follower needs candidate keys");
    if (!(params_.attention_noise >= 0.0 && params_.attention_noise <= 1.0))
        throw ContractViolation("attention noise must be a probability");
    if (params_.hot_radius_belief < 0)
        throw ContractViolation("hot radius belief must be >= 0");
}

std::optional<std::size_t> HintFollower::decide(const Observation& obs, Rng& rng)
{
    const Prompt& p = *obs.prompt;
    if (p.id != "guess")
        return follow_screen(p);

    if (note_ != note_of(p)) {
        note_ = note_of(p);
        live_ = all_;
        last_guess_.reset();
    } else if (last_guess_) {
        const std::size_t last = *last_guess_;
        live_.erase(std::remove(live_.begin(), live_.end(), last), live_.end());
        std::bernoulli_distribution missed(params_.attention_noise);
        const std::string seen = missed(rng) ? std::string() : obs.expression();
        if (seen == "Warm" || seen == "Cold") {
            hints_seen_ = true;
            const bool hot = seen == "Warm";
            std::vector<std::size_t> kept;
            for (std::size_t k : live_)
                if (within(k, last, params_.hot_radius_belief) == hot)
                    kept.push_back(k);
            // A contradicting response (misread posture) leaves the set alone.
            if (!kept.empty())
                live_ = std::move(kept);
        }
    }
    if (live_.empty())
        live_ = all_;

    std::size_t key;
    if (!hints_seen_) {
        key = pick(live_, rng);
    } else {
        std::size_t best_score = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> best;
        for (std::size_t c : live_) {
            std::size_t hot = 0, cold = 0;
            for (std::size_t k : live_) {
                if (k == c)
                    continue;
                (within(k, c, params_.hot_radius_belief) ? hot : cold) += 1;
            }
            const std::size_t score = std::max(hot, cold);
            if (score < best_score) {
                best_score = score;
                best.clear();
            }
            if (score == best_score)
                best.push_back(c);
        }
        key = pick(best, rng);
    }
    last_guess_ = key;
    return key;
}

ScriptedPlayer::ScriptedPlayer(std::vector<std::size_t> keys) : keys_(std::move(keys)) {}

std::optional<std::size_t> ScriptedPlayer::decide(const Observation& obs, Rng&)
{
    if (obs.prompt->id == "instructions" || obs.prompt->id == "done" || next_ >= keys_.size())
        return std::nullopt;
    return keys_[next_++];
}

std::unique_ptr<PlayerPolicy> make_policy(const PolicySpec& spec, const Keyboard& keyboard)
{
    if (std::holds_alternative<RandomTrialError>(spec))
        return std::make_unique<RandomPlayer>(keyboard.all_keys());
    if (const auto* h = std::get_if<HintFollowing>(&spec))
        return std::make_unique<HintFollower>(keyboard.all_keys(), *h);
    return std::make_unique<ScriptedPlayer>(std::get<Scripted>(spec).keys);
}

std::vector<std::size_t> perfect_script(const GameConfig& config)
{
    std::vector<std::size_t> keys{config.start_key};
    for (const Level& level : config.composition.levels) {
        for (const Part& part : level.parts) {
            keys.insert(keys.end(), part.notes.begin(), part.notes.end()); // guessing
            keys.insert(keys.end(), part.notes.begin(), part.notes.end()); // replay
        }
        for (const Part& part : level.parts)
            keys.insert(keys.end(), part.notes.begin(), part.notes.end()); // full replay
    }
    return keys;
}

namespace {

double cadence_for(const PolicySpec& spec, const Cadence& c)
{
    if (std::holds_alternative<RandomTrialError>(spec))
        return c.random_s;
    if (std::holds_alternative<HintFollowing>(spec))
        return c.hint_following_s;
    return c.scripted_s;
}

} // namespace

EpisodeResult run_episode(std::shared_ptr<const RobotAssets> assets, LoopConfig config, const PolicySpec& spec,
                          std::uint64_t seed, const EpisodeSettings& settings)
{
    const double cadence = cadence_for(spec, settings.cadence);
    if (!(cadence > 0.0))
        throw ContractViolation("policy cadence must be positive");

    Rng rng(seed);
    const ScriptedArcFace face;
    const double face_offset = std::uniform_real_distribution<double>(0.0, 20.0)(rng);
    auto policy = make_policy(spec, config.game.keyboard);

    EpisodeResult out;
    out.condition = config.game.condition;
    out.policy = policy_name(spec);
    out.seed = seed;

    RobotLoop loop(assets, std::move(config));
    const ErikSettings& erik = loop.config().erik;
    const double dt = loop.dt();
    double next_decision = cadence;
    std::optional<std::size_t> pending;
    double t = 0.0;

    while (!loop.game().done()) {
        if (loop.ticks() >= settings.max_ticks)
            throw RunawayEpisode("episode " + std::to_string(seed) + " exceeded " +
                                 std::to_string(settings.max_ticks) + " ticks");
        std::vector<LoopInput> inputs;
        if (auto head = face.face_at(t + dt + face_offset))
            inputs.push_back(FacePosition{*head});
        if (pending)
            inputs.push_back(KeyPress{*pending});
        pending.reset();

        const Frame frame = loop.step(inputs);
        t = frame.t;
        if (!within_limits(loop.assets().chain, frame.posture, 1e-9))
            ++out.limit_violations;
        if (settings.record_frames)
            out.frames.push_back(RecordedTick{frame.t, frame.posture, frame.expression, frame.nod_active,
                                              frame.phase.kind});

        if (frame.t + 1e-9 < next_decision)
            continue;
        std::optional<std::string> classified;
        Observation obs;
        obs.t = frame.t;
        obs.prompt = &frame.prompt;
        obs.expression = [&]() {
            if (!classified)
                classified = classify_expression(loop.assets(), frame.posture, erik);
            return *classified;
        };
        pending = policy->decide(obs, rng);
        if (pending)
            next_decision = frame.t + cadence;
    }

    out.ticks = loop.ticks();
    out.metrics = metrics(loop.game().state());
    std::map<NoteId, std::size_t> wrong;
    std::vector<NoteId> order;
    for (const auto& g : loop.game().state().guesses) {
        const NoteId id{g.level, g.part, g.note};
        if (!wrong.count(id)) {
            wrong[id] = 0;
            order.push_back(id);
        }
        if (!g.correct)
            ++wrong[id];
    }
    for (const auto& id : order)
        out.wrong_per_note.push_back(wrong[id]);
    return out;
}

PolicySpec auto_policy(Condition condition)
{
    if (condition == Condition::Control)
        return RandomTrialError{};
    return HintFollowing{};
}

ExperimentResult run_experiment(std::shared_ptr<const RobotAssets> assets, const LoopConfig& base,
                                const std::vector<Cell>& cells, std::size_t episodes_per_cell, std::uint64_t seed,
                                const EpisodeSettings& settings)
{
    if (episodes_per_cell < 1)
        throw ContractViolation("experiment needs at least one episode per cell");
    if (cells.empty())
        throw ContractViolation("experiment needs at least one cell");

    const std::size_t total = cells.size() * episodes_per_cell;
    ExperimentResult result;
    result.episodes.resize(total);
    std::vector<std::exception_ptr> errors(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t c = job / episodes_per_cell, e = job % episodes_per_cell;
            try {
                LoopConfig config = base;
                config.game.condition = cells[c].condition;
                result.episodes[job] = run_episode(assets, std::move(config), cells[c].policy,
                                                   derive_seed(seed, c, e), settings);
            } catch (...) {
                errors[job] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, total);
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();
    for (auto& err : errors)
        if (err)
            std::rethrow_exception(err);

    std::vector<std::vector<double>> wrong(cells.size()), time(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> hot, cold;
        for (std::size_t e = 0; e < episodes_per_cell; ++e) {
            const Metrics& m = result.episodes[c * episodes_per_cell + e].metrics;
            time[c].push_back(m.time);
            hot.push_back(static_cast<double>(m.wrong_hot));
            cold.push_back(static_cast<double>(m.wrong_cold));
            wrong[c].push_back(static_cast<double>(m.wrong_total));
        }
        result.cells.push_back(CellSummary{cells[c], describe(time[c]), describe(hot), describe(cold),
                                           describe(wrong[c])});
    }
    for (std::size_t a = 0; a < cells.size(); ++a)
        for (std::size_t b = a + 1; b < cells.size(); ++b)
            result.comparisons.push_back(
                Comparison{a, b, mann_whitney(wrong[a], wrong[b]), mann_whitney(time[a], time[b])});
    return result;
}

namespace {

std::string cell_label(const Cell& c)
{
    return std::string(condition_name(c.condition)) + "/" + policy_name(c.policy);
}

} // namespace

void write_results_csv(std::ostream& out, const std::vector<EpisodeResult>& episodes)
{
    out << "condition,policy,seed,time_s,wrong_hot,wrong_cold,wrong_total\n";
    for (const auto& e : episodes)
        out << csv_row({std::string(condition_name(e.condition)), e.policy, std::to_string(e.seed),
                        format_fixed(e.metrics.time, 4), std::to_string(e.metrics.wrong_hot),
                        std::to_string(e.metrics.wrong_cold), std::to_string(e.metrics.wrong_total)})
            << '\n';
}

void write_summary_csv(std::ostream& out, const ExperimentResult& r)
{
    out << "kind,cell,other,n,time_mean,time_sd,wrong_hot_mean,wrong_hot_sd,wrong_cold_mean,wrong_cold_sd,"
           "wrong_total_mean,wrong_total_sd,wrong_total_u,wrong_total_p,time_u,time_p\n";
    for (const auto& c : r.cells)
        out << csv_row({"cell", cell_label(c.cell), "", std::to_string(c.time.n), format_fixed(c.time.mean, 4),
                        format_fixed(c.time.sd, 4), format_fixed(c.wrong_hot.mean, 4),
                        format_fixed(c.wrong_hot.sd, 4), format_fixed(c.wrong_cold.mean, 4),
                        format_fixed(c.wrong_cold.sd, 4), format_fixed(c.wrong_total.mean, 4),
                        format_fixed(c.wrong_total.sd, 4), "", "", "", ""})
            << '\n';
    for (const auto& cmp : r.comparisons)
        out << csv_row({"rank_sum", cell_label(r.cells[cmp.a].cell), cell_label(r.cells[cmp.b].cell), "", "", "",
                        "", "", "", "", "", "", format_number(cmp.wrong_total.u), format_fixed(cmp.wrong_total.p, 6),
                        format_number(cmp.time.u), format_fixed(cmp.time.p, 6)})
            << '\n';
}

void write_summary_text(std::ostream& out, const ExperimentResult& r)
{
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w)
            s.append(w - s.size(), ' ');
        return s;
    };
    auto ms = [](const Dispersion& d) { return format_fixed(d.mean, 2) + " +- " + format_fixed(d.sd, 2); };
    out << pad("cell", 26) << pad("n", 5) << pad("time_s", 20) << pad("wrong_hot", 16) << pad("wrong_cold", 16)
        << "wrong_total\n";
    for (const auto& c : r.cells)
        out << pad(cell_label(c.cell), 26) << pad(std::to_string(c.time.n), 5) << pad(ms(c.time), 20)
            << pad(ms(c.wrong_hot), 16) << pad(ms(c.wrong_cold), 16) << ms(c.wrong_total) << '\n';
    out << '\n' << pad("comparison", 48) << pad("wrong_total p", 16) << "time p\n";
    for (const auto& cmp : r.comparisons)
        out << pad(cell_label(r.cells[cmp.a].cell) + " vs " + cell_label(r.cells[cmp.b].cell), 48)
            << pad(format_fixed(cmp.wrong_total.p, 4), 16) << format_fixed(cmp.time.p, 4) << '\n';
}

} // namespace avantsatie
