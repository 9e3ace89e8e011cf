#include "cardesign/session_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cardesign/error.hpp"

namespace cardesign {

std::string SessionLog::header_line() const { return header.dump(); }

std::string SessionLog::event_line(const nlohmann::json& event) { return event.dump(); }

void SessionLog::write(std::ostream& out) const
{
    out << header_line() << '\n';
    for (const auto& e : events)
        out << event_line(e) << '\n';
}

std::string SessionLog::str() const
{
    std::ostringstream out;
    write(out);
    return out.str();
}

SessionLog SessionLog::read(std::istream& in)
{
    SessionLog log;
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty session log");
    try {
        log.header = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed log header: ") + e.what());
    }
    if (!log.header.is_object() || log.header.value("format", "") != kLogFormat)
        throw ParseError("not a session log");
    if (!log.header.contains("version") || !log.header["version"].is_number_integer() ||
        log.header["version"].get<int>() != kLogVersion)
        throw VersionError("session log version " + log.header.value("version", nlohmann::json()).dump() +
                           " is incompatible with this build (expects " + std::to_string(kLogVersion) + ")");

    double lastT = 0.0;
    while (std::getline(in, line)) {
        const std::size_t index = log.events.size();
        if (line.empty())
            throw ParseError("empty event line", index);
        nlohmann::json ev;
        try {
            ev = nlohmann::json::parse(line);
        }
        catch (const nlohmann::json::exception&) {
            throw ParseError("malformed event at index " + std::to_string(index), index);
        }
        if (!ev.is_object() || !ev.contains("t") || !ev["t"].is_number() || !ev.contains("type") ||
            !ev["type"].is_string())
            throw ParseError("event at index " + std::to_string(index) + " lacks t/type", index);
        const double t = ev["t"].get<double>();
        if (t < lastT)
            throw ParseError("event at index " + std::to_string(index) + " goes back in time", index);
        lastT = t;
        log.events.push_back(std::move(ev));
    }
    return log;
}

SessionLog SessionLog::read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open session log " + path);
    return read(in);
}

} // namespace cardesign
