#include "cardesign/http.hpp"

#include <stop_token>

#include <httplib.h>

namespace cardesign {

using nlohmann::json;

namespace {

void send(httplib::Response& res, const ApiReply& reply)
{
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
}

// Parses a JSON body; an empty body reads as an empty object.
std::optional<json> body_json(const httplib::Request& req, httplib::Response& res)
{
    if (req.body.empty())
        return json::object();
    try {
        return json::parse(req.body);
    }
    catch (const json::exception& e) {
        send(res, {400, api_error("bad_request", std::string("malformed JSON body: ") + e.what())});
        return std::nullopt;
    }
}

} // namespace

HttpServer::HttpServer(SessionService& service) : service_(service), server_(std::make_unique<httplib::Server>())
{
    auto& s = *server_;
    // One stop source shared by all streams so stop() can end them.
    auto shutdown = std::make_shared<std::stop_source>();

    s.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
        send(res, {200, {{"schemaVersion", kApiSchemaVersion}, {"status", "ok"}}});
    });
    s.Get("/api/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
        send(res, service_.list_sessions());
    });
    s.Post("/api/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        if (auto body = body_json(req, res))
            send(res, service_.create_session(*body));
    });
    s.Get(R"(/api/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, service_.get_state(req.matches[1]));
    });
    s.Post(R"(/api/v1/sessions/([^/]+)/actions)", [this](const httplib::Request& req, httplib::Response& res) {
        if (auto body = body_json(req, res))
            send(res, service_.post_action(req.matches[1], *body));
    });
    s.Post(R"(/api/v1/sessions/([^/]+)/end)", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, service_.end_session(req.matches[1]));
    });
    s.Get(R"(/api/v1/sessions/([^/]+)/designs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto reply = service_.export_design(req.matches[1], req.matches[2]);
        if (reply.status == 200 && req.get_param_value("format") == "text") {
            res.status = 200;
            res.set_content(reply.body["text"].get<std::string>(), "text/plain");
            return;
        }
        send(res, reply);
    });
    s.Post(R"(/api/v1/sessions/([^/]+)/designs)", [this](const httplib::Request& req, httplib::Response& res) {
        std::string text = req.body;
        // Accept either the raw design file or {"text": ...}.
        if (!text.empty() && text.front() == '{') {
            auto body = body_json(req, res);
            if (!body)
                return;
            if (auto skew = check_schema(*body)) {
                send(res, *skew);
                return;
            }
            text = body->value("text", "");
        }
        send(res, service_.import_design(req.matches[1], text));
    });
    s.Get(R"(/api/v1/sessions/([^/]+)/stream)", [this, shutdown](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto probe = service_.get_state(id);
        if (probe.status != 200) {
            send(res, probe);
            return;
        }
        const bool paced = req.get_param_value("paced") != "0";
        const bool once = req.get_param_value("once") == "1";
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, id, paced, once, shutdown](std::size_t, httplib::DataSink& sink) {
                service_.stream_frames(
                    id,
                    [&](const json& event) {
                        if (!sink.is_writable())
                            return false;
                        const std::string chunk =
                            "event: " + event.value("type", "message") + "\ndata: " + event.dump() + "\n\n";
                        return sink.write(chunk.data(), chunk.size());
                    },
                    shutdown->get_token(), paced, once);
                sink.done();
                return true;
            });
    });
    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        }
        catch (const std::exception& e) {
            what = e.what();
        }
        catch (...) {
        }
        send(res, {500, api_error("internal_error", what)});
    });
    stopStreams_ = [shutdown] { shutdown->request_stop(); };
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop()
{
    if (stopStreams_)
        stopStreams_();
    server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

} // namespace cardesign
