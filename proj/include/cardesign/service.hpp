#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>

#include <json.hpp>

#include "cardesign/session.hpp"

namespace cardesign {

inline constexpr int kApiSchemaVersion = 1;

/// Transport-agnostic reply: HTTP-like status plus a JSON body.
struct ApiReply {
    int status = 200;
    nlohmann::json body;
};

nlohmann::json api_error(std::string_view code, std::string_view message);

/// Pure projection of a session into the external state payload. In lab mode it
/// carries only anonymized view keys and no origin detail that separates the
/// insight views. `progress` is the playback fraction of the current generation.
nlohmann::json session_state(const Session& session, const std::string& sessionId, double progress);

/// One 10 Hz playback frame of the current generation at sample `index`.
nlohmann::json generation_frame(const Session& session, std::size_t index);
std::size_t frame_count(const Session& session);

struct ServiceOptions {
    /// Where session logs live; empty disables persistence.
    std::filesystem::path dataDir;
    /// Simulated seconds per wall second for playback, progress and auto-advance.
    double speed = 1.0;
    /// Auto-advance once playback of a generation completes.
    bool autoAdvance = true;
    /// Monotone seconds; defaults to a steady clock.
    std::function<double()> clock;
};

/// Default data directory: $CARDESIGN_DATA_DIR, else ./cardesign-data.
std::filesystem::path default_data_dir();

/// Hosts many sessions. Each session is owned by its own actor thread; requests
/// are routed to it by message passing. Sessions share no mutable state.
class SessionService {
public:
    explicit SessionService(ServiceOptions options = {});
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// Re-creates every session found in the data directory by replaying its log.
    /// Returns the number of sessions restored.
    std::size_t restore();

    ApiReply create_session(const nlohmann::json& config);
    ApiReply get_state(const std::string& id);
    ApiReply post_action(const std::string& id, const nlohmann::json& action);
    ApiReply export_design(const std::string& id, const std::string& designRef);
    ApiReply import_design(const std::string& id, const std::string& designText);
    ApiReply end_session(const std::string& id);
    ApiReply list_sessions();

    /// Streams playback frames and generation-complete events until the sink
    /// returns false, the stop token fires, or the session ends. With `paced`
    /// frames are spaced 0.1 s / speed apart; otherwise emitted back to back.
    /// Returns 404-style error replies through `sink` only via the return value.
    ApiReply stream_frames(const std::string& id, const std::function<bool(const nlohmann::json&)>& sink,
                           std::stop_token stop = {}, bool paced = true, bool once = false);

    /// Direct access for tests: runs `fn` on the session's actor thread.
    bool with_session(const std::string& id, const std::function<void(const Session&)>& fn);

    const ServiceOptions& options() const { return options_; }

    struct Actor;  // per-session owner thread; defined in service.cpp

private:
    std::shared_ptr<Actor> find(const std::string& id);
    std::string next_id();
    double now() const;

    ServiceOptions options_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Actor>> sessions_;
    std::uint64_t counter_ = 0;
};

/// Checks an optional schemaVersion field; returns an error reply on skew.
std::optional<ApiReply> check_schema(const nlohmann::json& body);

} // namespace cardesign
