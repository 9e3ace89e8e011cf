#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cardesign/vec2.hpp"

namespace cardesign {

enum class CourseId { HillClimb, Bumps, HillBumps, SkiJump };

std::string_view to_string(CourseId id);
/// Throws ValidationError on an unknown name.
CourseId parse_course_id(std::string_view name);

/// Ground is everything below the terrain polyline. Beyond either end the
/// height is held at the end value.
struct Course {
    CourseId id = CourseId::HillClimb;
    std::vector<Vec2> terrain;
    double spawnX = 0.0;
    double dropHeight = 3.0;

    void validate() const;

    /// Terrain height at x (linear between points, clamped at the ends).
    double height_at(double x) const;

    /// Half-open index range [first, last) of segments (i, i+1) whose x-extent
    /// overlaps [x0, x1]. Segment i joins terrain[i] and terrain[i+1].
    std::pair<std::size_t, std::size_t> segments_in(double x0, double x1) const;

    double min_x() const { return terrain.front().x; }
    double max_x() const { return terrain.back().x; }
};

Course build_course(CourseId id);

/// Text course file: id, spawnX, dropHeight, point list.
void write_course(std::ostream& out, const Course& course);
Course read_course(std::istream& in);

/// Built-in name ("HillClimb", ...) or a path to a course file.
Course load_course(std::string_view nameOrPath);

} // namespace cardesign
