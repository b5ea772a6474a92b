#include "avantsatie/game.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "avantsatie/errors.hpp"

namespace avantsatie {

std::string_view condition_name(Condition c)
{
    switch (c) {
    case Condition::Erik: return "C-ERIK";
    case Condition::Ebps: return "C-EBPS";
    case Condition::Control: return "C-Control";
    }
    return "?";
}

std::optional<Condition> parse_condition(std::string_view name)
{
    for (Condition c : {Condition::Erik, Condition::Ebps, Condition::Control}) {
        const std::string_view canonical = condition_name(c);
        if (canonical.size() != name.size())
            continue;
        bool same = true;
        for (std::size_t i = 0; i < name.size() && same; ++i)
            same = std::tolower(static_cast<unsigned char>(canonical[i])) ==
                   std::tolower(static_cast<unsigned char>(name[i]));
        if (same)
            return c;
    }
    return std::nullopt;
}

std::string_view assessment_name(Assessment a)
{
    switch (a) {
    case Assessment::Hot: return "Hot";
    case Assessment::Cold: return "Cold";
    case Assessment::NA: return "NA";
    }
    return "?";
}

std::optional<Assessment> parse_assessment(std::string_view name)
{
    for (Assessment a : {Assessment::Hot, Assessment::Cold, Assessment::NA})
        if (assessment_name(a) == name)
            return a;
    return std::nullopt;
}

namespace {

constexpr std::array<const char*, 12> kPitchNames{"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
constexpr std::array<bool, 12> kWhite{true, false, true, false, true, true, false, true, false, true, false, true};

int pitch_class(int midi) { return ((midi % 12) + 12) % 12; }

} // namespace

std::string Keyboard::key_name(std::size_t index) const
{
    if (!contains(index))
        throw ContractViolation("key index " + std::to_string(index) + " outside the keyboard");
    const int midi = lowest_midi + static_cast<int>(index);
    return std::string(kPitchNames[pitch_class(midi)]) + std::to_string(midi / 12 - 1);
}

std::optional<std::size_t> Keyboard::parse_key(std::string_view name) const
{
    for (std::size_t i = 0; i < key_count; ++i)
        if (key_name(i) == name)
            return i;
    return std::nullopt;
}

bool Keyboard::is_white(std::size_t index) const
{
    return kWhite[pitch_class(lowest_midi + static_cast<int>(index))];
}

std::vector<std::size_t> Keyboard::all_keys() const
{
    std::vector<std::size_t> keys(key_count);
    for (std::size_t i = 0; i < key_count; ++i)
        keys[i] = i;
    return keys;
}

Composition Composition::default_composition(const Keyboard& keyboard)
{
    auto k = [&](std::string_view n) {
        const auto idx = keyboard.parse_key(n);
        if (!idx)
            throw ContractViolation("default composition needs key " + std::string(n));
        return *idx;
    };
    Composition c;
    c.levels.push_back(Level{"Level 1",
                             {Part{{k("E4")}},
                              Part{{k("E4"), k("F4")}},
                              Part{{k("G4"), k("F4"), k("E4")}},
                              Part{{k("D4"), k("C4"), k("D4"), k("E4")}}}});
    c.levels.push_back(Level{"Level 2",
                             {Part{{k("A4"), k("A#4"), k("C5")}},
                              Part{{k("G4"), k("F#4"), k("E4"), k("D4")}},
                              Part{{k("C4"), k("D#4"), k("F4"), k("G#4"), k("A#4")}},
                              Part{{k("C5"), k("B4"), k("A#4"), k("A4"), k("G#4"), k("G4")}},
                              Part{{k("C#4"), k("F#4")}}}});
    return c;
}

void Composition::validate(const Keyboard& keyboard) const
{
    if (levels.empty())
        throw ContractViolation("composition has no levels");
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const Level& level = levels[l];
        if (level.parts.empty())
            throw ContractViolation("composition level " + std::to_string(l + 1) + " has no parts");
        for (std::size_t p = 0; p < level.parts.size(); ++p) {
            const auto& notes = level.parts[p].notes;
            const std::string where = "level " + std::to_string(l + 1) + " part " + std::to_string(p + 1);
            if (notes.empty() || notes.size() > 6)
                throw ContractViolation("composition " + where + " must hold 1 to 6 notes");
            for (std::size_t n : notes) {
                if (!keyboard.contains(n))
                    throw ContractViolation("composition " + where + " uses a key outside the keyboard");
                if (l == 0 && !keyboard.is_white(n))
                    throw ContractViolation("composition " + where + " uses a black key in the first level");
            }
        }
    }
}

std::size_t Composition::note_count() const
{
    std::size_t n = 0;
    for (const auto& l : levels)
        for (const auto& p : l.parts)
            n += p.notes.size();
    return n;
}

std::string phase_label(const Phase& phase)
{
    std::string s(phase_kind_name(phase.kind));
    switch (phase.kind) {
    case PhaseKind::Instructions:
        return s + "(level " + std::to_string(phase.level) + ", page " + std::to_string(phase.index) + ")";
    case PhaseKind::Guessing:
    case PhaseKind::Replay:
        return s + "(level " + std::to_string(phase.level) + ", part " + std::to_string(phase.part) + ", " +
               std::to_string(phase.index) + ")";
    case PhaseKind::FullReplay:
        return s + "(level " + std::to_string(phase.level) + ", " + std::to_string(phase.index) + ")";
    default:
        return s;
    }
}

void GameConfig::validate() const
{
    if (keyboard.key_count == 0)
        throw ContractViolation("keyboard has no keys");
    composition.validate(keyboard);
    if (hot_radius < 0)
        throw ContractViolation("hot radius must be >= 0");
    if (!keyboard.contains(start_key))
        throw ContractViolation("start key outside the keyboard");
    if (intro_pages == 0 || level_intro_pages == 0)
        throw ContractViolation("instruction phases need at least one page");
    if (!(page_seconds > 0.0))
        throw ContractViolation("instruction page time must be positive");
}

std::string_view event_type_name(EventType t)
{
    switch (t) {
    case EventType::Affirmative: return "Affirmative";
    case EventType::ExpressionChange: return "ExpressionChange";
    case EventType::Prompt: return "Prompt";
    case EventType::PhaseChange: return "PhaseChange";
    case EventType::Guess: return "Guess";
    case EventType::Warning: return "Warning";
    }
    return "?";
}

std::optional<EventType> parse_event_type(std::string_view name)
{
    for (EventType t : {EventType::Affirmative, EventType::ExpressionChange, EventType::Prompt, EventType::PhaseChange,
                        EventType::Guess, EventType::Warning})
        if (event_type_name(t) == name)
            return t;
    return std::nullopt;
}

GameState initial_state(const GameConfig& config)
{
    GameState s;
    s.prompt.highlight = config.start_key;
    return s;
}

Assessment assess_guess(std::size_t guess, std::size_t target, int hot_radius)
{
    if (guess == target)
        throw ContractViolation("assess_guess called with the correct key");
    const long distance = std::labs(static_cast<long>(guess) - static_cast<long>(target));
    return distance <= hot_radius ? Assessment::Hot : Assessment::Cold;
}

Assessment assess_relative(std::size_t guess, std::size_t target, std::optional<std::size_t> previous_wrong)
{
    if (guess == target)
        throw ContractViolation("assess_relative called with the correct key");
    if (!previous_wrong)
        return Assessment::Cold;
    const long now = std::labs(static_cast<long>(guess) - static_cast<long>(target));
    const long before = std::labs(static_cast<long>(*previous_wrong) - static_cast<long>(target));
    return now < before ? Assessment::Hot : Assessment::Cold;
}

std::string expression_for(Condition condition, Assessment assessment)
{
    if (condition == Condition::Control)
        return "Neutral";
    switch (assessment) {
    case Assessment::Hot: return "Warm";
    case Assessment::Cold: return "Cold";
    default: return "Neutral";
    }
}

namespace {

const Part& part_of(const GameConfig& config, const Phase& phase)
{
    return config.composition.levels.at(phase.level).parts.at(phase.part);
}

// Note at a FullReplay cursor counted across all parts of the level.
std::size_t level_note(const GameConfig& config, std::size_t level, std::size_t cursor)
{
    for (const Part& p : config.composition.levels.at(level).parts) {
        if (cursor < p.notes.size())
            return p.notes[cursor];
        cursor -= p.notes.size();
    }
    throw ContractViolation("full replay cursor past the end of the level");
}

std::size_t level_length(const GameConfig& config, std::size_t level)
{
    std::size_t n = 0;
    for (const Part& p : config.composition.levels.at(level).parts)
        n += p.notes.size();
    return n;
}

std::size_t pages_for(const GameConfig& config, std::size_t level)
{
    return level == 0 ? config.intro_pages : config.level_intro_pages;
}

class Builder {
public:
    Builder(const GameState& s, const GameConfig& c) : out_{s, {}}, config_(c) {}

    GameState& state() { return out_.state; }

    GameEvent& emit(EventType type)
    {
        GameEvent e;
        e.type = type;
        e.t = out_.state.clock;
        e.phase = out_.state.phase;
        e.expression = out_.state.expression;
        out_.events.push_back(std::move(e));
        return out_.events.back();
    }

    void set_expression(const std::string& name)
    {
        if (out_.state.expression == name)
            return;
        out_.state.expression = name;
        emit(EventType::ExpressionChange);
    }

    void enter(Phase phase)
    {
        out_.state.phase = phase;
        out_.state.page_elapsed = 0.0;
        out_.state.previous_wrong.reset();
        if (phase.kind == PhaseKind::Replay || phase.kind == PhaseKind::FullReplay || phase.kind == PhaseKind::Done)
            set_expression("Neutral");
        emit(EventType::PhaseChange);
        refresh_prompt();
    }

    void refresh_prompt()
    {
        const Phase& p = out_.state.phase;
        Prompt pr;
        pr.level = p.level;
        pr.part = p.part;
        pr.ordinal = p.index;
        switch (p.kind) {
        case PhaseKind::StartScreen:
            pr.id = "start";
            pr.highlight = config_.start_key;
            break;
        case PhaseKind::Instructions: pr.id = "instructions"; break;
        case PhaseKind::Guessing: pr.id = "guess"; break;
        case PhaseKind::Replay:
            pr.id = "replay";
            pr.highlight = part_of(config_, p).notes.at(p.index);
            break;
        case PhaseKind::FullReplay:
            pr.id = "full_replay";
            pr.highlight = level_note(config_, p.level, p.index);
            break;
        case PhaseKind::Done: pr.id = "done"; break;
        }
        out_.state.prompt = pr;
        emit(EventType::Prompt).prompt = std::move(pr);
    }

    Transition finish() { return std::move(out_); }

private:
    Transition out_;
    const GameConfig& config_;
};

void after_replay(Builder& b, const GameConfig& config)
{
    const Phase p = b.state().phase;
    const auto& parts = config.composition.levels.at(p.level).parts;
    if (p.part + 1 < parts.size())
        b.enter(Phase{PhaseKind::Guessing, p.level, p.part + 1, 0});
    else
        b.enter(Phase{PhaseKind::FullReplay, p.level, 0, 0});
}

void after_full_replay(Builder& b, const GameConfig& config)
{
    const Phase p = b.state().phase;
    if (p.level + 1 < config.composition.levels.size())
        b.enter(Phase{PhaseKind::Instructions, p.level + 1, 0, 0});
    else
        b.enter(Phase{PhaseKind::Done, p.level, 0, 0});
}

void guess(Builder& b, const GameConfig& config, std::size_t key)
{
    GameState& s = b.state();
    const Phase p = s.phase;
    const Part& part = part_of(config, p);
    const std::size_t target = part.notes.at(p.index);

    GuessRecord r;
    r.time = s.clock;
    r.key = key;
    r.target = target;
    r.correct = key == target;
    r.level = p.level;
    r.part = p.part;
    r.note = p.index;
    if (!r.correct) {
        r.heuristic = config.hot_cold_mode == HotColdMode::Absolute
                          ? assess_guess(key, target, config.hot_radius)
                          : assess_relative(key, target, s.previous_wrong);
        r.assessment = config.condition == Condition::Control ? Assessment::NA : r.heuristic;
        s.previous_wrong = key;
    }
    s.guesses.push_back(r);

    GameEvent& ev = b.emit(EventType::Guess);
    ev.key = key;
    ev.correct = r.correct;
    ev.assessment = r.assessment;

    if (!r.correct) {
        b.set_expression(expression_for(config.condition, r.assessment));
        return;
    }
    b.emit(EventType::Affirmative).key = key;
    b.set_expression("Neutral");
    if (p.index + 1 < part.notes.size()) {
        s.phase.index = p.index + 1;
        s.previous_wrong.reset();
        b.refresh_prompt();
    } else {
        b.enter(Phase{PhaseKind::Replay, p.level, p.part, 0});
    }
}

} // namespace

Transition handle_key_press(const GameState& state, const GameConfig& config, std::size_t key)
{
    Builder b(state, config);
    if (!config.keyboard.contains(key)) {
        GameEvent& w = b.emit(EventType::Warning);
        w.key = key;
        w.message = "key index " + std::to_string(key) + " outside the keyboard ignored";
        return b.finish();
    }
    const Phase p = state.phase;
    switch (p.kind) {
    case PhaseKind::StartScreen:
        if (key == config.start_key) {
            b.emit(EventType::Affirmative).key = key;
            b.enter(Phase{PhaseKind::Instructions, 0, 0, 0});
        }
        break;
    case PhaseKind::Instructions:
        break;
    case PhaseKind::Guessing:
        guess(b, config, key);
        break;
    case PhaseKind::Replay: {
        const Part& part = part_of(config, p);
        if (key != part.notes.at(p.index))
            break;
        if (p.index + 1 < part.notes.size()) {
            b.state().phase.index = p.index + 1;
            b.refresh_prompt();
        } else {
            after_replay(b, config);
        }
        break;
    }
    case PhaseKind::FullReplay:
        if (key != level_note(config, p.level, p.index))
            break;
        if (p.index + 1 < level_length(config, p.level)) {
            b.state().phase.index = p.index + 1;
            b.refresh_prompt();
        } else {
            after_full_replay(b, config);
        }
        break;
    case PhaseKind::Done:
        break;
    }
    return b.finish();
}

Transition advance_time(const GameState& state, const GameConfig& config, double dt)
{
    if (!(dt >= 0.0) || !std::isfinite(dt))
        throw ContractViolation("game time step must be finite and >= 0");
    Builder b(state, config);
    GameState& s = b.state();
    if (s.phase.kind == PhaseKind::Guessing)
        s.guessing_time += dt;
    s.clock += dt;
    if (s.phase.kind == PhaseKind::Instructions) {
        s.page_elapsed += dt;
        // Small slack absorbs accumulated floating point error in dt sums.
        while (s.phase.kind == PhaseKind::Instructions && s.page_elapsed >= config.page_seconds - 1e-9) {
            const double carry = s.page_elapsed - config.page_seconds;
            if (s.phase.index + 1 < pages_for(config, s.phase.level)) {
                s.phase.index += 1;
                s.page_elapsed = std::max(0.0, carry);
                b.refresh_prompt();
            } else {
                b.enter(Phase{PhaseKind::Guessing, s.phase.level, 0, 0});
            }
        }
    }
    return b.finish();
}

std::optional<std::size_t> expected_key(const GameState& state, const GameConfig& config)
{
    const Phase& p = state.phase;
    switch (p.kind) {
    case PhaseKind::StartScreen: return config.start_key;
    case PhaseKind::Guessing:
    case PhaseKind::Replay: return part_of(config, p).notes.at(p.index);
    case PhaseKind::FullReplay: return level_note(config, p.level, p.index);
    default: return std::nullopt;
    }
}

std::optional<std::size_t> replay_key(const GameState& state, const GameConfig& config)
{
    const Phase& p = state.phase;
    if (p.kind == PhaseKind::Replay)
        return part_of(config, p).notes.at(p.index);
    if (p.kind == PhaseKind::FullReplay)
        return level_note(config, p.level, p.index);
    return std::nullopt;
}

Metrics metrics(const GameState& state)
{
    Metrics m;
    m.time = state.guessing_time;
    for (const auto& g : state.guesses) {
        if (g.correct)
            continue;
        if (g.heuristic == Assessment::Hot)
            ++m.wrong_hot;
        else
            ++m.wrong_cold;
    }
    m.wrong_total = m.wrong_hot + m.wrong_cold;
    return m;
}

Game::Game(GameConfig config) : config_(std::move(config)), state_(initial_state(config_))
{
    config_.validate();
}

std::vector<GameEvent> Game::press(std::size_t key)
{
    Transition t = handle_key_press(state_, config_, key);
    state_ = std::move(t.state);
    return std::move(t.events);
}

std::vector<GameEvent> Game::advance(double dt)
{
    Transition t = advance_time(state_, config_, dt);
    state_ = std::move(t.state);
    return std::move(t.events);
}

} // namespace avantsatie
