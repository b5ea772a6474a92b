#include "avantsatie/robot_loop.hpp"

#include <limits>

#include "avantsatie/errors.hpp"

namespace avantsatie {

std::shared_ptr<const RobotAssets> RobotAssets::make_default(const ErikSettings& settings)
{
    KinematicChain chain = KinematicChain::default_desk_chain();
    auto expressions = default_expression_set(chain);
    std::vector<PostureGrid> grids;
    for (const auto& e : expressions)
        grids.push_back(build_grid_from_erik(chain, e, settings));
    auto assets = std::make_shared<RobotAssets>(RobotAssets{std::move(chain), std::move(expressions), std::move(grids)});
    assets->validate();
    return assets;
}

const PostureGrid& RobotAssets::grid(const std::string& expression) const
{
    for (const auto& g : grids)
        if (g.expression() == expression)
            return g;
    throw NotFound("no posture grid for expression '" + expression + "'");
}

void RobotAssets::validate() const
{
    for (const char* name : {"Neutral", "Warm", "Cold"})
        find_expression(expressions, name).validate(chain);
    for (const auto& g : grids) {
        find_expression(expressions, g.expression());
        if (g.limits().size() != chain.joint_count())
            throw ContractViolation("posture grid '" + g.expression() + "' does not match the chain");
    }
}

void LoopConfig::validate() const
{
    game.validate();
    erik.validate();
    nod.validate();
    layout.validate();
    if (!(tick_hz >= 10.0 && tick_hz <= 120.0))
        throw ContractViolation("tick rate must lie in [10, 120] Hz");
    if (layout.piano_keys.size() < game.keyboard.key_count)
        throw ContractViolation("scene layout has fewer piano keys than the keyboard");
}

RobotLoop::RobotLoop(std::shared_ptr<const RobotAssets> assets, LoopConfig config)
    : assets_(std::move(assets)), config_(std::move(config)), game_(config_.game),
      stream_(assets_->chain, config_.erik, 1.0 / config_.tick_hz), layout_(config_.layout)
{
    if (!assets_)
        throw ContractViolation("robot loop needs assets");
    config_.validate();
    if (config_.game.condition == Condition::Ebps)
        for (const char* name : {"Neutral", "Warm", "Cold"})
            assets_->grid(name);
}

Posture RobotLoop::solve(const ExpressionPosture& expression, const Vec3& direction, const GazeAngles& angles)
{
    if (config_.game.condition == Condition::Ebps)
        return stream_.filter(ebps_synthesize(assets_->grid(expression.name), angles.yaw_deg, angles.pitch_deg));
    return stream_.tick(expression, Direction{direction}).posture;
}

Frame RobotLoop::step(const std::vector<LoopInput>& inputs, std::vector<GameEvent>* events)
{
    std::vector<GameEvent> collected;
    auto take = [&](std::vector<GameEvent>&& evs) {
        for (auto& e : evs)
            collected.push_back(std::move(e));
    };
    for (const LoopInput& in : inputs) {
        if (const auto* k = std::get_if<KeyPress>(&in))
            take(game_.press(k->key));
        else if (const auto* f = std::get_if<FacePosition>(&in))
            layout_.player_head = f->position;
        else
            layout_.player_head.reset();
    }
    take(game_.advance(dt()));

    const GameState& s = game_.state();
    for (const auto& e : collected)
        if (e.type == EventType::Affirmative)
            nod_started_ = e.t;

    const AttentionTarget attention =
        select_attention(s.phase.kind, layout_.player_head.has_value(), replay_key(s, game_.config()));
    try {
        last_direction_ = resolve_direction_vector(layout_, attention);
    } catch (const DegenerateTarget&) {
        // Keep looking where we were.
    }
    const YawPitch yp = yaw_pitch_of(last_direction_);
    const GazeAngles angles{rad_to_deg(yp.yaw), rad_to_deg(yp.pitch)};

    const ExpressionPosture& expression = find_expression(assets_->expressions, s.expression);
    Posture posture = solve(expression, last_direction_, angles);

    bool nod = false;
    if (nod_started_) {
        const double since = s.clock - *nod_started_;
        if (since < config_.nod.duration_s) {
            nod = true;
            posture = apply_overlay(assets_->chain, posture,
                                    affirmative_overlay(assets_->chain, std::max(0.0, since), config_.nod));
        } else {
            nod_started_.reset();
        }
    }

    Frame f;
    f.tick = tick_++;
    f.t = s.clock;
    f.posture = std::move(posture);
    f.expression = s.expression;
    f.attention = attention;
    f.target = angles;
    f.phase = s.phase;
    f.prompt = s.prompt;
    f.nod_active = nod;
    if (!collected.empty())
        f.last_event = collected.back();
    else if (last_frame_)
        f.last_event = last_frame_->last_event;
    if (events)
        *events = std::move(collected);
    last_frame_ = f;
    return f;
}

std::string classify_expression(const RobotAssets& assets, const Posture& posture, const ErikSettings& settings)
{
    const Vec3 gaze = effector_gaze_direction(assets.chain, posture);
    double best = std::numeric_limits<double>::infinity();
    std::string name;
    for (const auto& e : assets.expressions) {
        const SolveResult r = erik_solve(assets.chain, e, Direction{gaze}, settings);
        const double d = posture_distance(posture, r.posture);
        if (d < best) {
            best = d;
            name = e.name;
        }
    }
    return name;
}

} // namespace avantsatie
