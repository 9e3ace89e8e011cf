#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace cardesign {

inline constexpr std::string_view kLogFormat = "cardesign-session-log";
inline constexpr int kLogVersion = 1;

/// Line-delimited JSON: one header line, then one event per line, append-only.
struct SessionLog {
    nlohmann::json header;
    std::vector<nlohmann::json> events;

    std::string header_line() const;
    static std::string event_line(const nlohmann::json& event);

    void write(std::ostream& out) const;
    std::string str() const;

    /// Throws ParseError (with the 0-based event index) on malformed lines or
    /// non-monotone timestamps, VersionError on a foreign format version.
    static SessionLog read(std::istream& in);
    static SessionLog read_file(const std::string& path);
};

} // namespace cardesign
