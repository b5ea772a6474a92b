#include "doctest.h"

#include <chrono>
#include <filesystem>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "avantsatie/server.hpp"

using namespace avantsatie;
using io::json;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct Reply {
    unsigned status = 0;
    json body;
};

Reply request(unsigned short port, http::verb verb, const std::string& target, const std::string& body = "")
{
    asio::io_context ioc;
    tcp::resolver resolver(ioc);
    beast::tcp_stream stream(ioc);
    stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "127.0.0.1");
    req.set(http::field::content_type, "application/json");
    req.body() = body;
    req.prepare_payload();
    http::write(stream, req);
    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(stream, buffer, res);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    Reply r;
    r.status = res.result_int();
    r.body = res.body().empty() ? json() : json::parse(res.body());
    return r;
}

struct Fixture {
    Fixture()
    {
        io::AppConfig config;
        config.log_dir = std::filesystem::temp_directory_path() / "avantsatie_test_server";
        std::filesystem::remove_all(config.log_dir);
        sessions = std::make_unique<SessionManager>(config);
        server = std::make_unique<HttpServer>(*sessions, "127.0.0.1", 0);
        server->start();
    }
    ~Fixture()
    {
        server->stop();
        sessions->close_all();
    }
    std::unique_ptr<SessionManager> sessions;
    std::unique_ptr<HttpServer> server;
};

} // namespace

TEST_CASE("HTTP session lifecycle")
{
    Fixture f;
    const unsigned short port = f.server->port();
    REQUIRE(port != 0);

    Reply r = request(port, http::verb::post, "/sessions", R"({"condition": "C-EBPS"})");
    REQUIRE(r.status == 201);
    const std::string id = r.body["id"];

    r = request(port, http::verb::get, "/sessions");
    CHECK(r.status == 200);
    CHECK(r.body["sessions"] == json::array({id}));

    r = request(port, http::verb::post, "/sessions/" + id + "/input", R"({"kind": "key", "key": "D4"})");
    CHECK(r.status == 202);
    std::this_thread::sleep_for(std::chrono::milliseconds(200));

    r = request(port, http::verb::get, "/sessions/" + id + "/state");
    CHECK(r.status == 200);
    CHECK(r.body["type"] == "snapshot");
    CHECK(r.body["frame"]["phase"]["kind"] == "Instructions");
    CHECK(r.body["frame"]["prompt"]["id"] == "instructions");

    CHECK(request(port, http::verb::post, "/sessions/" + id + "/input", R"({"kind": "wave"})").status == 400);
    CHECK(request(port, http::verb::post, "/sessions/" + id + "/input", "{not json").status == 400);
    CHECK(request(port, http::verb::get, "/sessions/s999/state").status == 404);
    CHECK(request(port, http::verb::get, "/elsewhere").status == 404);
    CHECK(request(port, http::verb::put, "/sessions").status == 405);
    CHECK(request(port, http::verb::post, "/sessions", R"({"condition": "C-Nope"})").status == 400);

    r = request(port, http::verb::delete_, "/sessions/" + id);
    CHECK(r.status == 200);
    CHECK(r.body["closed"] == id);
    CHECK(request(port, http::verb::delete_, "/sessions/" + id).status == 404);
}

TEST_CASE("WebSocket stream carries a snapshot, frames and events, and accepts inputs")
{
    Fixture f;
    const unsigned short port = f.server->port();
    const std::string id = request(port, http::verb::post, "/sessions").body["id"];

    asio::io_context ioc;
    tcp::resolver resolver(ioc);
    websocket::stream<tcp::socket> ws(ioc);
    asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/sessions/" + id + "/stream");

    auto next = [&] {
        beast::flat_buffer buffer;
        ws.read(buffer);
        return json::parse(beast::buffers_to_string(buffer.data()));
    };
    const json first = next();
    CHECK(first["type"] == "snapshot");
    CHECK(first["session"] == id);

    ws.text(true);
    ws.write(asio::buffer(std::string(R"({"kind": "key", "key": 2})")));
    ws.write(asio::buffer(std::string(R"({"kind": "face", "position": [1.6, 0.3, 1.5]})")));

    bool saw_affirmative = false, saw_frame = false;
    std::optional<std::size_t> first_tick, last_tick;
    for (int i = 0; i < 400 && !(saw_affirmative && saw_frame && last_tick && *last_tick > *first_tick + 20); ++i) {
        const json r = next();
        if (r["type"] == "event" && r["event"] == "Affirmative")
            saw_affirmative = true;
        if (r["type"] == "frame") {
            if (!first_tick)
                first_tick = r["tick"].get<std::size_t>();
            else
                CHECK(r["tick"].get<std::size_t>() > *last_tick);
            last_tick = r["tick"].get<std::size_t>();
            saw_frame = saw_frame || r["attention"] == "Screen" || r["attention"] == "PlayerFace";
        }
    }
    CHECK(saw_affirmative);
    CHECK(saw_frame);

    ws.write(asio::buffer(std::string("{broken")));
    bool saw_error = false;
    for (int i = 0; i < 200 && !saw_error; ++i) {
        const json r = next();
        saw_error = r["type"] == "error";
    }
    CHECK(saw_error);

    // Closing the session ends the stream from the server side.
    f.sessions->close_session(id);
    beast::error_code ec;
    for (int i = 0; i < 1000 && !ec; ++i) {
        beast::flat_buffer buffer;
        ws.read(buffer, ec);
    }
    CHECK(ec);

    websocket::stream<tcp::socket> missing(ioc);
    asio::connect(missing.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    CHECK_THROWS(missing.handshake("127.0.0.1", "/sessions/s404/stream"));
}
