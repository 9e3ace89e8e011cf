#pragma once

#include <functional>
#include <memory>
#include <string>

#include "cardesign/service.hpp"

namespace httplib {
class Server;
}

namespace cardesign {

/// JSON API under /api/v1 plus a server-sent-event frame stream.
///
///   POST /api/v1/sessions                      create_session (body: config)
///   GET  /api/v1/sessions                      list sessions
///   GET  /api/v1/sessions/{id}                 get_state
///   POST /api/v1/sessions/{id}/actions         post_action (body: action)
///   GET  /api/v1/sessions/{id}/stream          stream_frames (SSE; ?paced=0, ?once=1)
///   GET  /api/v1/sessions/{id}/designs/{ref}   export_design (?format=text for the raw file)
///   POST /api/v1/sessions/{id}/designs         import_design (body: design file text)
///   POST /api/v1/sessions/{id}/end             end_session
///   GET  /api/v1/health
class HttpServer {
public:
    explicit HttpServer(SessionService& service);
    ~HttpServer();

    /// Binds and serves until stop(). Returns false if binding failed.
    bool listen(const std::string& host, int port);
    /// Binds to an ephemeral port; returns it or -1.
    int bind_any(const std::string& host);
    bool listen_after_bind();
    void stop();
    bool running() const;

private:
    SessionService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::function<void()> stopStreams_;
};

} // namespace cardesign
