#include "avantsatie/server.hpp"

#include <deque>
#include <iostream>
#include <thread>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "avantsatie/errors.hpp"

namespace avantsatie {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response json_response(const Request& req, http::status status, const io::json& body)
{
    Response res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = body.dump() + "\n";
    res.prepare_payload();
    return res;
}

Response error_response(const Request& req, http::status status, const std::string& message)
{
    return json_response(req, status, io::json{{"error", message}});
}

std::vector<std::string> split_path(std::string_view target)
{
    if (auto q = target.find('?'); q != std::string_view::npos)
        target = target.substr(0, q);
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < target.size()) {
        while (i < target.size() && target[i] == '/')
            ++i;
        std::size_t j = i;
        while (j < target.size() && target[j] != '/')
            ++j;
        if (j > i)
            parts.emplace_back(target.substr(i, j - i));
        i = j;
    }
    return parts;
}

Response route(SessionManager& sessions, const Request& req)
{
    const auto path = split_path(std::string_view(req.target().data(), req.target().size()));
    if (path.empty() || path[0] != "sessions")
        return error_response(req, http::status::not_found, "no such endpoint");
    try {
        if (path.size() == 1) {
            if (req.method() == http::verb::post) {
                io::json overrides = io::json::object();
                if (!req.body().empty())
                    overrides = io::json::parse(req.body());
                const std::string id = sessions.create_session(overrides);
                return json_response(req, http::status::created, io::json{{"id", id}});
            }
            if (req.method() == http::verb::get)
                return json_response(req, http::status::ok, io::json{{"sessions", sessions.ids()}});
            return error_response(req, http::status::method_not_allowed, "use GET or POST");
        }
        const std::string& id = path[1];
        if (path.size() == 2) {
            if (req.method() != http::verb::delete_)
                return error_response(req, http::status::method_not_allowed, "use DELETE");
            sessions.close_session(id);
            return json_response(req, http::status::ok, io::json{{"closed", id}});
        }
        if (path.size() == 3 && path[2] == "input" && req.method() == http::verb::post) {
            auto core = sessions.find(id);
            core->post_input(protocol::input_from_json(io::json::parse(req.body()), core->keyboard()));
            return json_response(req, http::status::accepted, io::json{{"queued", true}});
        }
        if (path.size() == 3 && path[2] == "state" && req.method() == http::verb::get)
            return json_response(req, http::status::ok, sessions.find(id)->snapshot());
        return error_response(req, http::status::not_found, "no such endpoint");
    } catch (const NotFound& e) {
        return error_response(req, http::status::not_found, e.what());
    } catch (const io::json::exception& e) {
        return error_response(req, http::status::bad_request, std::string("bad JSON: ") + e.what());
    } catch (const ContractViolation& e) {
        return error_response(req, http::status::bad_request, e.what());
    } catch (const LoadError& e) {
        return error_response(req, http::status::bad_request, e.what());
    }
}

class StreamSession : public std::enable_shared_from_this<StreamSession> {
public:
    StreamSession(tcp::socket&& socket, std::shared_ptr<SessionCore> core)
        : ws_(std::move(socket)), core_(std::move(core))
    {
    }

    void start(Request req)
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&StreamSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec)
    {
        if (ec)
            return;
        sub_ = core_->subscribe();
        std::weak_ptr<StreamSession> weak = shared_from_this();
        sub_->set_notifier([weak] {
            if (auto self = weak.lock())
                net::post(self->ws_.get_executor(), [self] { self->pump(); });
        });
        pump();
        read();
    }

    void pump()
    {
        for (auto& line : sub_->drain())
            outgoing_.push_back(std::move(line));
        // Bound what a slow client can pile up here; the subscription already dropped oldest.
        while (outgoing_.size() > 512)
            outgoing_.pop_front();
        if (!writing_ && !outgoing_.empty()) {
            writing_ = true;
            ws_.text(true);
            ws_.async_write(net::buffer(outgoing_.front()),
                            beast::bind_front_handler(&StreamSession::on_write, shared_from_this()));
        } else if (!writing_ && outgoing_.empty() && sub_->closed() && !closing_) {
            closing_ = true;
            ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
        }
    }

    void on_write(beast::error_code ec, std::size_t)
    {
        writing_ = false;
        if (ec) {
            sub_->close();
            return;
        }
        outgoing_.pop_front();
        pump();
    }

    void read()
    {
        ws_.async_read(buffer_, beast::bind_front_handler(&StreamSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t)
    {
        if (ec) {
            if (sub_)
                sub_->close();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        try {
            core_->post_input(protocol::input_from_json(io::json::parse(text), core_->keyboard()));
        } catch (const std::exception& e) {
            outgoing_.push_back(io::json{{"type", "error"}, {"error", e.what()}}.dump());
            pump();
        }
        read();
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<SessionCore> core_;
    std::shared_ptr<Subscription> sub_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outgoing_;
    bool writing_ = false;
    bool closing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, SessionManager& sessions) : stream_(std::move(socket)), sessions_(sessions) {}

    void start()
    {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::read, shared_from_this()));
    }

private:
    void read()
    {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t)
    {
        if (ec == http::error::end_of_stream) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        if (ec)
            return;
        if (websocket::is_upgrade(req_)) {
            const auto path = split_path(std::string_view(req_.target().data(), req_.target().size()));
            if (path.size() == 3 && path[0] == "sessions" && path[2] == "stream") {
                try {
                    auto core = sessions_.find(path[1]);
                    stream_.expires_never();
                    std::make_shared<StreamSession>(stream_.release_socket(), std::move(core))->start(std::move(req_));
                    return;
                } catch (const NotFound& e) {
                    res_ = std::make_shared<Response>(error_response(req_, http::status::not_found, e.what()));
                }
            } else {
                res_ = std::make_shared<Response>(error_response(req_, http::status::not_found, "no such stream"));
            }
        } else {
            res_ = std::make_shared<Response>(route(sessions_, req_));
        }
        http::async_write(stream_, *res_, beast::bind_front_handler(&HttpSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t)
    {
        if (ec)
            return;
        if (!res_->keep_alive()) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        res_.reset();
        read();
    }

    beast::tcp_stream stream_;
    SessionManager& sessions_;
    beast::flat_buffer buffer_;
    Request req_;
    std::shared_ptr<Response> res_;
};

} // namespace

struct HttpServer::Impl {
    Impl(SessionManager& s, const std::string& bind, unsigned short port) : sessions(s), acceptor(ioc)
    {
        const tcp::endpoint ep{net::ip::make_address(bind), port};
        acceptor.open(ep.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(ep);
        acceptor.listen(net::socket_base::max_listen_connections);
    }

    void accept()
    {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec)
                return;
            std::make_shared<HttpSession>(std::move(socket), sessions)->start();
            accept();
        });
    }

    SessionManager& sessions;
    net::io_context ioc{1};
    tcp::acceptor acceptor;
    std::thread thread;
};

HttpServer::HttpServer(SessionManager& sessions, const std::string& bind, unsigned short port)
{
    try {
        impl_ = std::make_unique<Impl>(sessions, bind, port);
    } catch (const boost::system::system_error& e) {
        throw LoadError("cannot listen on " + bind + ":" + std::to_string(port) + ": " + e.what());
    }
}

HttpServer::~HttpServer()
{
    stop();
}

unsigned short HttpServer::port() const
{
    return impl_->acceptor.local_endpoint().port();
}

void HttpServer::start()
{
    impl_->accept();
    impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void HttpServer::run()
{
    impl_->accept();
    impl_->ioc.run();
}

void HttpServer::stop()
{
    if (!impl_)
        return;
    impl_->ioc.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

} // namespace avantsatie
