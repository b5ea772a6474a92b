#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avantsatie/phase.hpp"

namespace avantsatie {

enum class Condition { Erik, Ebps, Control };
std::string_view condition_name(Condition c); // "C-ERIK", "C-EBPS", "C-Control"
std::optional<Condition> parse_condition(std::string_view name);

enum class Assessment { Hot, Cold, NA };
std::string_view assessment_name(Assessment a);
std::optional<Assessment> parse_assessment(std::string_view name);

// Chromatic keyboard starting at `lowest_midi`; index 0 is the lowest key.
struct Keyboard {
    int lowest_midi = 60; // C4
    std::size_t key_count = 13;

    std::string key_name(std::size_t index) const; // "C4", "C#4", ...
    std::optional<std::size_t> parse_key(std::string_view name) const;
    bool is_white(std::size_t index) const;
    bool contains(std::size_t index) const { return index < key_count; }
    std::vector<std::size_t> all_keys() const;
};

struct Part {
    std::vector<std::size_t> notes; // key indices
};
struct Level {
    std::string name;
    std::vector<Part> parts;
};
struct Composition {
    std::vector<Level> levels;

    // Level 1: four short white-key parts. Level 2: five parts up to six
    // notes, black keys included.
    static Composition default_composition(const Keyboard& keyboard = {});
    // Each part holds 1..6 in-range notes and the first level is white keys only.
    void validate(const Keyboard& keyboard) const;
    std::size_t note_count() const;
};

struct Phase {
    PhaseKind kind = PhaseKind::StartScreen;
    std::size_t level = 0;
    std::size_t part = 0;
    std::size_t index = 0; // instruction page, note index or replay cursor

    bool operator==(const Phase&) const = default;
};
std::string phase_label(const Phase& phase);

enum class HotColdMode { Absolute, Relative };

struct GameConfig {
    Keyboard keyboard;
    Composition composition = Composition::default_composition();
    Condition condition = Condition::Erik;
    int hot_radius = 2; // semitones
    HotColdMode hot_cold_mode = HotColdMode::Absolute;
    std::size_t start_key = 2; // D4
    std::size_t intro_pages = 3;
    std::size_t level_intro_pages = 1;
    double page_seconds = 5.0;

    void validate() const;
};

struct GuessRecord {
    double time = 0.0;
    std::size_t key = 0;
    std::size_t target = 0;
    bool correct = false;
    Assessment assessment = Assessment::NA; // what the robot expressed
    Assessment heuristic = Assessment::NA;  // distance classification, also under C-Control
    std::size_t level = 0, part = 0, note = 0;
};

enum class EventType { Affirmative, ExpressionChange, Prompt, PhaseChange, Guess, Warning };
std::string_view event_type_name(EventType t);
std::optional<EventType> parse_event_type(std::string_view name);

// Machine-readable screen text; clients map `id` through a string table.
struct Prompt {
    std::string id; // "start", "instructions", "guess", "replay", "full_replay", "done"
    std::size_t level = 0;
    std::size_t part = 0;
    std::size_t ordinal = 0;
    std::optional<std::size_t> highlight; // start key, or the key to press while replaying
};

struct GameEvent {
    EventType type = EventType::Warning;
    double t = 0.0;
    Phase phase; // phase after the transition
    std::optional<std::size_t> key;
    Assessment assessment = Assessment::NA;
    bool correct = false;
    std::string expression;
    std::optional<Prompt> prompt;
    std::string message;
};

struct GameState {
    Phase phase;
    std::vector<GuessRecord> guesses;
    double clock = 0.0;
    double guessing_time = 0.0;
    double page_elapsed = 0.0;
    std::string expression = "Neutral";
    std::optional<std::size_t> previous_wrong; // relative mode memory, per note
    Prompt prompt{"start", 0, 0, 0, std::nullopt};
};

GameState initial_state(const GameConfig& config);

struct Transition {
    GameState state;
    std::vector<GameEvent> events;
};

Assessment assess_guess(std::size_t guess, std::size_t target, int hot_radius);
// Relative mode: warmer than the previous wrong guess is Hot; the first wrong guess is Cold.
Assessment assess_relative(std::size_t guess, std::size_t target, std::optional<std::size_t> previous_wrong);

// Neutral for C-Control and for NA, Warm for Hot, Cold for Cold.
std::string expression_for(Condition condition, Assessment assessment);

Transition handle_key_press(const GameState& state, const GameConfig& config, std::size_t key);
Transition advance_time(const GameState& state, const GameConfig& config, double dt);

// Key the player is expected to press, if the phase expects one.
std::optional<std::size_t> expected_key(const GameState& state, const GameConfig& config);
// Key the robot points at (Replay / FullReplay cursor).
std::optional<std::size_t> replay_key(const GameState& state, const GameConfig& config);

struct Metrics {
    double time = 0.0;
    std::size_t wrong_hot = 0;
    std::size_t wrong_cold = 0;
    std::size_t wrong_total = 0;

    bool operator==(const Metrics&) const = default;
};
Metrics metrics(const GameState& state);

// Owns a state and applies transitions, collecting events.
class Game {
public:
    explicit Game(GameConfig config);

    std::vector<GameEvent> press(std::size_t key);
    std::vector<GameEvent> advance(double dt);

    const GameState& state() const { return state_; }
    const GameConfig& config() const { return config_; }
    bool done() const { return state_.phase.kind == PhaseKind::Done; }

private:
    GameConfig config_;
    GameState state_;
};

} // namespace avantsatie
