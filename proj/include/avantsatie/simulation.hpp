#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "avantsatie/robot_loop.hpp"
#include "avantsatie/stats.hpp"

namespace avantsatie {

using Rng = std::mt19937_64;

// Independent stream for (seed, cell, episode).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

struct RandomTrialError {};
struct HintFollowing {
    int hot_radius_belief = 2;
    double attention_noise = 0.0; // probability of missing the robot's response
};
struct Scripted {
    std::vector<std::size_t> keys;
};
using PolicySpec = std::variant<RandomTrialError, HintFollowing, Scripted>;
std::string policy_name(const PolicySpec& spec);

struct Cadence {
    double hint_following_s = 1.5;
    double random_s = 0.6;
    double scripted_s = 0.6;
};

// What a player may look at: the screen prompt and what the robot's posture
// reads as. The expression is computed lazily at most once.
struct Observation {
    double t = 0.0;
    const Prompt* prompt = nullptr;
    std::function<std::string()> expression;
};

class PlayerPolicy {
public:
    virtual ~PlayerPolicy() = default;
    virtual std::optional<std::size_t> decide(const Observation& obs, Rng& rng) = 0;
};

// Uniform without replacement over the candidate keys, per note.
class RandomPlayer final : public PlayerPolicy {
public:
    explicit RandomPlayer(std::vector<std::size_t> candidates);
    std::optional<std::size_t> decide(const Observation& obs, Rng& rng) override;

private:
    std::vector<std::size_t> candidates_;
    std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> note_;
    std::set<std::size_t> tried_;
};

// Narrows the candidate set from Warm/Cold responses and splits the rest as
// evenly as it can. Until a hint has been seen it scans in random order.
class HintFollower final : public PlayerPolicy {
public:
    HintFollower(std::vector<std::size_t> candidates, HintFollowing params);
    std::optional<std::size_t> decide(const Observation& obs, Rng& rng) override;

    const std::vector<std::size_t>& candidates() const { return live_; }
    bool hints_seen() const { return hints_seen_; }

private:
    std::vector<std::size_t> all_;
    HintFollowing params_;
    std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> note_;
    std::vector<std::size_t> live_;
    std::optional<std::size_t> last_guess_;
    bool hints_seen_ = false;
};

// Plays the given sequence, one key per decision.
class ScriptedPlayer final : public PlayerPolicy {
public:
    explicit ScriptedPlayer(std::vector<std::size_t> keys);
    std::optional<std::size_t> decide(const Observation& obs, Rng& rng) override;

private:
    std::vector<std::size_t> keys_;
    std::size_t next_ = 0;
};

// Replay/FullReplay follow the highlighted key and StartScreen presses the
// start key for every policy; `decide` handles the rest.
std::unique_ptr<PlayerPolicy> make_policy(const PolicySpec& spec, const Keyboard& keyboard);

// Every key the game expects, in order: a perfect run.
std::vector<std::size_t> perfect_script(const GameConfig& config);

struct EpisodeSettings {
    Cadence cadence;
    std::size_t max_ticks = 30 * 60 * 60; // one simulated hour at 30 Hz
    bool record_frames = false;
};

class RunawayEpisode : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RecordedTick {
    double t = 0.0;
    Posture posture;
    std::string expression;
    bool nod_active = false;
    PhaseKind phase = PhaseKind::StartScreen;
};

struct EpisodeResult {
    Condition condition = Condition::Erik;
    std::string policy;
    std::uint64_t seed = 0;
    Metrics metrics;
    std::vector<std::size_t> wrong_per_note; // in play order
    std::size_t ticks = 0;
    std::size_t limit_violations = 0;
    std::vector<RecordedTick> frames; // only with record_frames
};

EpisodeResult run_episode(std::shared_ptr<const RobotAssets> assets, LoopConfig config, const PolicySpec& policy,
                          std::uint64_t seed, const EpisodeSettings& settings = {});

struct Cell {
    Condition condition = Condition::Erik;
    PolicySpec policy;
};
// "auto": random players under C-Control, hint followers otherwise.
PolicySpec auto_policy(Condition condition);

struct CellSummary {
    Cell cell;
    Dispersion time, wrong_hot, wrong_cold, wrong_total;
};

struct Comparison {
    std::size_t a = 0, b = 0; // cell indices
    RankSumResult wrong_total;
    RankSumResult time;
};

struct ExperimentResult {
    std::vector<EpisodeResult> episodes; // sorted by (cell, episode)
    std::vector<CellSummary> cells;
    std::vector<Comparison> comparisons; // every pair of cells
};

ExperimentResult run_experiment(std::shared_ptr<const RobotAssets> assets, const LoopConfig& base,
                                const std::vector<Cell>& cells, std::size_t episodes_per_cell, std::uint64_t seed,
                                const EpisodeSettings& settings = {});

// "condition,policy,seed,time_s,wrong_hot,wrong_cold,wrong_total"
void write_results_csv(std::ostream& out, const std::vector<EpisodeResult>& episodes);
// Per-cell mean/sd rows, then pairwise rank-sum rows.
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
void write_summary_text(std::ostream& out, const ExperimentResult& result);

} // namespace avantsatie
