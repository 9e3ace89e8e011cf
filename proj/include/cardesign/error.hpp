#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cardesign {

/// Input that violates a documented precondition or type invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed text input. `index` is the offending line/event (0-based), or npos when unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t index = npos)
        : std::runtime_error(what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t index_;
};

/// A log or payload written by a different format version.
class VersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Replay diverged from the recorded log at event `index`.
class ReplayMismatch : public std::runtime_error {
public:
    ReplayMismatch(const std::string& what, std::size_t index) : std::runtime_error(what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace cardesign
