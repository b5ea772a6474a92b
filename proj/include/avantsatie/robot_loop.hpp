#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "avantsatie/chain.hpp"
#include "avantsatie/ebps.hpp"
#include "avantsatie/erik.hpp"
#include "avantsatie/game.hpp"
#include "avantsatie/gaze.hpp"

namespace avantsatie {

// Immutable solver assets shared by every session and episode.
struct RobotAssets {
    KinematicChain chain;
    std::vector<ExpressionPosture> expressions;
    std::vector<PostureGrid> grids; // one per expression, required for C-EBPS

    // Default chain, expressions and ERIK-built grids.
    static std::shared_ptr<const RobotAssets> make_default(const ErikSettings& settings = {});
    const PostureGrid& grid(const std::string& expression) const;
    void validate() const;
};

struct LoopConfig {
    GameConfig game;
    ErikSettings erik;
    NodSettings nod;
    SceneLayout layout = SceneLayout::default_layout();
    double tick_hz = 30.0;

    void validate() const;
};

struct KeyPress {
    std::size_t key = 0;
};
struct FacePosition {
    Vec3 position;
};
struct FaceLost {};
using LoopInput = std::variant<KeyPress, FacePosition, FaceLost>;

struct Frame {
    std::size_t tick = 0;
    double t = 0.0;
    Posture posture;
    std::string expression;
    AttentionTarget attention;
    GazeAngles target;
    Phase phase;
    Prompt prompt;
    bool nod_active = false;
    std::optional<GameEvent> last_event;
};

// One robot in one game: applies inputs, advances the game clock, aims the
// chain at the attended point with the current expression and overlays the
// nod. Single owner; not thread-safe.
class RobotLoop {
public:
    RobotLoop(std::shared_ptr<const RobotAssets> assets, LoopConfig config);

    // Inputs are applied in order, then time advances by one tick.
    Frame step(const std::vector<LoopInput>& inputs, std::vector<GameEvent>* events = nullptr);

    const Game& game() const { return game_; }
    const LoopConfig& config() const { return config_; }
    const RobotAssets& assets() const { return *assets_; }
    double dt() const { return 1.0 / config_.tick_hz; }
    std::size_t ticks() const { return tick_; }
    const std::optional<Frame>& last_frame() const { return last_frame_; }

private:
    Posture solve(const ExpressionPosture& expression, const Vec3& direction, const GazeAngles& angles);

    std::shared_ptr<const RobotAssets> assets_;
    LoopConfig config_;
    Game game_;
    PostureStream stream_;
    SceneLayout layout_;
    std::size_t tick_ = 0;
    std::optional<double> nod_started_;
    Vec3 last_direction_ = Vec3::UnitX();
    std::optional<Frame> last_frame_;
};

// Nearest authored expression to a posture: every expression is solved
// towards the posture's own gaze and the closest result wins.
std::string classify_expression(const RobotAssets& assets, const Posture& posture, const ErikSettings& settings);

} // namespace avantsatie
