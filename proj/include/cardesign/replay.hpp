#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cardesign/evolve.hpp"
#include "cardesign/metrics.hpp"
#include "cardesign/session.hpp"
#include "cardesign/session_log.hpp"

namespace cardesign {

/// True for events the session derives itself; replay regenerates and checks them.
bool is_derived_event(const nlohmann::json& event);

/// Maps a recorded input event back to the action that produced it.
Action action_from_event(const Session& session, const nlohmann::json& event, std::size_t index);

struct ReplayOptions {
    /// Accept a log without a closing SessionEnded (crash recovery). Strict replay
    /// reports such logs as truncated.
    bool allowIncomplete = false;
};

struct ReplayResult {
    SessionMetrics metrics;
    std::optional<BestDesign> best;
    std::vector<std::optional<double>> bestPerGeneration;
    std::size_t events = 0;
    bool complete = false;
};

/// Re-executes the seeded run and every recorded action, checking each regenerated
/// line against the log. Throws ReplayMismatch at the first divergence or at the
/// truncation point, VersionError on a foreign log version.
ReplayResult replay(const SessionLog& log, const ReplayOptions& options = {});

/// Rebuilds a live session from a log (used to reload sessions after a restart).
/// The sink receives only lines produced after the rebuild.
Session restore_session(const SessionLog& log, Session::LineSink sink = {});

} // namespace cardesign
