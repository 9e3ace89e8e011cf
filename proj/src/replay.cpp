#include "cardesign/replay.hpp"

#include "cardesign/error.hpp"

namespace cardesign {

using nlohmann::json;

bool is_derived_event(const json& event)
{
    const auto& type = event.at("type").get_ref<const std::string&>();
    if (type == "ViewOpened")
        return event.contains("via");
    return type == "ViewClosed" || type == "GenerationEvaluated" || type == "InjectionOverflow";
}

Action action_from_event(const Session& session, const json& ev, std::size_t index)
{
    try {
        const auto& type = ev.at("type").get_ref<const std::string&>();
        auto view = [&]() {
            const auto key = ev.at("view").get<std::string>();
            const auto v = session.resolve_view(key);
            if (!v)
                throw ParseError("unknown view '" + key + "' at event " + std::to_string(index), index);
            return *v;
        };
        auto design = [&]() { return DesignRef::parse(ev.at("design").get<std::string>()); };
        if (type == "ViewOpened")
            return OpenView{view()};
        if (type == "SelectionMade") {
            const auto kind = ev.at("kind").get<std::string>();
            return Select{view(), design(), kind == "test" ? SelectKind::Test : SelectKind::Use};
        }
        if (type == "EditorLoaded")
            return Edit{view(), design()};
        if (type == "DesignEdited") {
            const auto& deltas = ev.at("deltas");
            if (deltas.size() != 1)
                throw ParseError("DesignEdited must carry exactly one delta", index);
            return SetGene{deltas[0].at("gene").get<int>(), deltas[0].at("value").get<double>()};
        }
        if (type == "DesignInjected")
            return InjectEditor{};
        if (type == "EditorImported")
            return ImportDesign{from_genes(ev.at("genes").get<std::vector<double>>(), session.config().design)};
        if (type == "SimulationAdvanced")
            return Advance{};
        if (type == "AutoAdvanceSet")
            return SetAutoAdvance{ev.at("enabled").get<bool>()};
        if (type == "ActionRejected")
            return session.action_from_json(ev.at("action"));
        if (type == "SessionEnded")
            return EndSession{};
        throw ParseError("unknown event type '" + type + "' at index " + std::to_string(index), index);
    }
    catch (const ParseError& e) {
        if (e.index() != ParseError::npos)
            throw;
        throw ParseError(std::string(e.what()) + " (event " + std::to_string(index) + ")", index);
    }
    catch (const json::exception& e) {
        throw ParseError("malformed event " + std::to_string(index) + ": " + e.what(), index);
    }
    catch (const ValidationError& e) {
        throw ParseError("invalid event " + std::to_string(index) + ": " + e.what(), index);
    }
}

namespace {

SessionConfig config_of(const SessionLog& log)
{
    if (!log.header.contains("config"))
        throw ParseError("log header lacks the session config");
    return session_config_from_json(log.header["config"]);
}

// Re-applies every input event, checking regenerated lines as they appear.
// Returns whether the log closed with SessionEnded.
bool drive(Session& session, const SessionLog& log, bool allowIncomplete)
{
    if (session.log().header_line() != log.header_line())
        throw ReplayMismatch("log header differs from the regenerated header", ParseError::npos);

    std::size_t checked = 0;
    auto check_upto = [&](std::size_t n) {
        const auto& regenerated = session.log().events;
        for (; checked < regenerated.size() && checked < n; ++checked)
            if (SessionLog::event_line(regenerated[checked]) != SessionLog::event_line(log.events[checked]))
                throw ReplayMismatch("replay diverges from the log at event " + std::to_string(checked), checked);
    };

    for (std::size_t i = 0; i < log.events.size(); ++i) {
        check_upto(log.events.size());
        if (i < checked)
            continue;  // already regenerated and verified
        if (i != session.log().events.size())
            throw ReplayMismatch("replay diverges from the log at event " + std::to_string(i), i);
        // Derived events may precede the input event that caused them (ViewClosed).
        std::size_t j = i;
        while (j < log.events.size() && is_derived_event(log.events[j]))
            ++j;
        if (j == log.events.size())
            throw ReplayMismatch("log contains a derived event the replay did not produce at " + std::to_string(i), i);
        const json& ev = log.events[j];
        session.apply(action_from_event(session, ev, j), ev.at("t").get<double>());
        if (session.log().events.size() == i)
            throw ReplayMismatch("recorded action at event " + std::to_string(j) + " produced no event", j);
    }
    check_upto(log.events.size());

    const std::size_t produced = session.log().events.size();
    if (produced > log.events.size()) {
        if (!allowIncomplete)
            throw ReplayMismatch("log is truncated at event " + std::to_string(log.events.size()), log.events.size());
        return false;
    }
    if (!session.ended()) {
        if (!allowIncomplete)
            throw ReplayMismatch("log is truncated at event " + std::to_string(log.events.size()) +
                                     " (no SessionEnded)",
                                 log.events.size());
        return false;
    }
    return true;
}

} // namespace

ReplayResult replay(const SessionLog& log, const ReplayOptions& options)
{
    if (log.header.value("version", 0) != kLogVersion)
        throw VersionError("session log version " + log.header.value("version", json()).dump() +
                           " is incompatible with this build");
    Session session(config_of(log));
    ReplayResult result;
    result.complete = drive(session, log, options.allowIncomplete);
    // Metrics come from the regenerated log; drive() proved it equals the recorded one.
    result.metrics = compute_metrics(session.log());
    result.best = session.best();
    for (const auto& ev : session.log().events)
        if (ev.at("type") == "GenerationEvaluated")
            result.bestPerGeneration.push_back(ev.at("best").is_null() ? std::nullopt
                                                                      : std::optional<double>(ev.at("best").get<double>()));
    result.events = session.log().events.size();
    return result;
}

Session restore_session(const SessionLog& log, Session::LineSink sink)
{
    if (log.header.value("version", 0) != kLogVersion)
        throw VersionError("session log version " + log.header.value("version", json()).dump() +
                           " is incompatible with this build");
    Session session(config_of(log));
    drive(session, log, true);
    session.set_sink(std::move(sink));
    return session;
}

} // namespace cardesign
