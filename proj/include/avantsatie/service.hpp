#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "avantsatie/io.hpp"
#include "avantsatie/robot_loop.hpp"

namespace avantsatie {

// Wire records. Every record is one JSON object with a "type" field.
namespace protocol {
using io::json;

json frame_to_json(const Frame& frame, const Keyboard& keyboard);
json event_to_json(const GameEvent& event, std::size_t tick, const Keyboard& keyboard);
json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const json& doc);
json input_to_json(const LoopInput& input);
// Accepts {"kind": "key", "key": "D4" | index}, {"kind": "face", "position": [x, y, z]}
// and {"kind": "face_lost"}; throws ContractViolation otherwise.
LoopInput input_from_json(const json& doc, const Keyboard& keyboard);
} // namespace protocol

// Bounded per-subscriber queue of serialized records. The producer never
// blocks: when full the oldest record is dropped.
class Subscription {
public:
    explicit Subscription(std::size_t capacity);

    void push(std::string line);
    // Blocks up to `timeout`; nullopt on timeout or when closed and drained.
    std::optional<std::string> pop(std::chrono::milliseconds timeout);
    std::vector<std::string> drain();
    void close();
    bool closed() const;
    std::size_t dropped() const;
    // Called after each push from the producer's thread.
    void set_notifier(std::function<void()> notify);

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    std::size_t capacity_;
    std::size_t dropped_ = 0;
    bool closed_ = false;
    std::function<void()> notify_;
};

// One game session: the robot loop, its input queue, subscribers and log.
// Inputs may be posted from any thread; step() must be called by one owner.
class SessionCore {
public:
    SessionCore(std::string id, std::shared_ptr<const RobotAssets> assets, LoopConfig config,
                std::unique_ptr<std::ostream> log = nullptr, io::json header_extra = {});
    ~SessionCore();

    const std::string& id() const { return id_; }
    void post_input(LoopInput input);
    Frame step();

    // Late subscribers first receive a snapshot of the current state.
    std::shared_ptr<Subscription> subscribe(std::size_t capacity = 256);
    io::json snapshot() const;
    // Writes the end record and closes every subscriber. Idempotent.
    void close();
    bool closed() const;

    const Keyboard& keyboard() const { return loop_.config().game.keyboard; }
    Metrics current_metrics() const;

private:
    void publish(const std::string& line);
    void log(const io::json& record);

    std::string id_;
    RobotLoop loop_;
    std::unique_ptr<std::ostream> log_;

    std::mutex input_mutex_;
    std::vector<LoopInput> inputs_;

    mutable std::mutex state_mutex_;
    std::vector<std::weak_ptr<Subscription>> subscribers_;
    io::json last_frame_;
    Metrics metrics_;
    bool closed_ = false;
};

// Header for a session log: everything replay needs, self-contained.
io::json session_header(const RobotAssets& assets, const LoopConfig& config, const io::json& extra = {});

struct ReplayResult {
    GameState final_state;
    Metrics metrics;
    std::optional<Metrics> logged_metrics;
    std::size_t ticks = 0;
};

// Re-executes a JSONL session log. Throws LoadError naming the line of any
// corrupt or truncated record.
ReplayResult replay_log(std::istream& in);
ReplayResult replay_log_file(const std::filesystem::path& path);

// Owns running sessions, each driven by its own tick thread.
class SessionManager {
public:
    explicit SessionManager(io::AppConfig base);
    ~SessionManager();

    // Config fields in `overrides` replace the base config's. Throws LoadError.
    std::string create_session(const io::json& overrides = io::json::object());
    std::shared_ptr<SessionCore> find(const std::string& id) const; // throws NotFound
    void close_session(const std::string& id);
    void close_all();
    std::vector<std::string> ids() const;

private:
    struct Running {
        std::shared_ptr<SessionCore> core;
        std::thread driver;
        std::shared_ptr<std::atomic<bool>> stop;
    };

    io::AppConfig base_;
    mutable std::mutex mutex_;
    std::map<std::string, Running> sessions_;
    std::uint64_t next_id_ = 1;
};

} // namespace avantsatie
