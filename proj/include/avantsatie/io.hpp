#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "avantsatie/chain.hpp"
#include "avantsatie/ebps.hpp"
#include "avantsatie/erik.hpp"
#include "avantsatie/game.hpp"
#include "avantsatie/gaze.hpp"
#include "avantsatie/robot_loop.hpp"

// JSON documents on disk. Angles are degrees, positions meters. Every loader
// throws LoadError naming the file and the failing field.
namespace avantsatie::io {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

json chain_to_json(const KinematicChain& chain);
KinematicChain chain_from_json(const json& doc);

// [{"name", "angles_deg": [...]}]; native directions follow from FK.
json expressions_to_json(const std::vector<ExpressionPosture>& set);
std::vector<ExpressionPosture> expressions_from_json(const json& doc, const KinematicChain& chain);

json grid_to_json(const PostureGrid& grid);
PostureGrid grid_from_json(const json& doc);

// {"keyboard": {"lowest": "C4", "keys": 13}, "levels": [{"name", "parts": [["E4", ...], ...]}]}
json composition_to_json(const Composition& composition, const Keyboard& keyboard);
Composition composition_from_json(const json& doc, Keyboard& keyboard);

json layout_to_json(const SceneLayout& layout);
SceneLayout layout_from_json(const json& doc);

// Everything a session or simulation needs. File references are resolved
// relative to the config file; absent references fall back to built-ins.
struct AppConfig {
    Condition condition = Condition::Erik;
    std::optional<std::filesystem::path> chain_file;
    std::optional<std::filesystem::path> expressions_file;
    std::vector<std::filesystem::path> grid_files;
    std::optional<std::filesystem::path> composition_file;
    std::optional<std::filesystem::path> layout_file;
    double tick_hz = 30.0;
    std::uint64_t seed = 7;
    int hot_radius = 2;
    HotColdMode hot_cold_mode = HotColdMode::Absolute;
    double page_seconds = 5.0;
    ErikSettings erik;
    NodSettings nod;
    std::filesystem::path log_dir = "logs";
    std::string bind = "127.0.0.1";
    unsigned short port = 8080;

    void validate() const;
};

json config_to_json(const AppConfig& config);
AppConfig config_from_json(const json& doc, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

struct LoadedSetup {
    std::shared_ptr<const RobotAssets> assets;
    LoopConfig loop;
};
// Loads every referenced file; grids are built with ERIK when none are listed.
LoadedSetup load_setup(const AppConfig& config);

json settings_to_json(const ErikSettings& s);
ErikSettings settings_from_json(const json& doc);

} // namespace avantsatie::io
