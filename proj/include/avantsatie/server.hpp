#pragma once

#include <memory>
#include <string>

#include "avantsatie/service.hpp"

namespace avantsatie {

// HTTP + WebSocket front end for a SessionManager.
//
//   POST   /sessions                 body: optional config overrides -> {"id"}
//   GET    /sessions                 -> {"sessions": [...]}
//   POST   /sessions/{id}/input      body: input record -> {"queued": true}
//   GET    /sessions/{id}/state      -> snapshot record
//   DELETE /sessions/{id}            -> {"closed": id}
//   GET    /sessions/{id}/stream     WebSocket upgrade; one JSON record per
//                                    text message, inputs accepted upstream
class HttpServer {
public:
    HttpServer(SessionManager& sessions, const std::string& bind, unsigned short port);
    ~HttpServer();

    unsigned short port() const;
    // Serves on a background thread until stop().
    void start();
    // Serves on the calling thread until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace avantsatie
