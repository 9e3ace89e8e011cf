#include "cardesign/course.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cardesign/error.hpp"
#include "cardesign/text.hpp"

namespace cardesign {

namespace {

constexpr std::string_view kCourseMagic = "cardesign-course";
constexpr int kCourseVersion = 1;

// Shared layout: long flat run-off on both sides so no car leaves the polyline.
constexpr double kFarLeft = -2000.0;
constexpr double kSpawnFlatEnd = 20.0;
constexpr double kFeatureEnd = 1500.0;
constexpr double kFarRight = 5000.0;

constexpr std::array<double, 5> kToothHeights{0.15, 0.30, 0.45, 0.25, 0.40};
constexpr double kToothHalfWidth = 1.0;

double hill_height(double x)
{
    // 10 m ramps, grade rising 0.01 per ramp up to 0.6.
    constexpr double segment = 10.0;
    double h = 0.0;
    double x0 = kSpawnFlatEnd;
    for (int k = 1; x0 < x; ++k) {
        const double grade = std::min(0.01 * k, 0.6);
        const double x1 = std::min(x0 + segment, x);
        h += grade * (x1 - x0);
        x0 += segment;
    }
    return h;
}

std::vector<Vec2> hill_points()
{
    std::vector<Vec2> pts{{kFarLeft, 0.0}, {kSpawnFlatEnd, 0.0}};
    for (double x = kSpawnFlatEnd + 10.0; x <= kFeatureEnd; x += 10.0)
        pts.push_back({x, hill_height(x)});
    pts.push_back({kFarRight, pts.back().y});
    return pts;
}

std::vector<Vec2> bump_points(bool onHill)
{
    std::vector<Vec2> pts{{kFarLeft, 0.0}, {kSpawnFlatEnd, 0.0}};
    std::size_t tooth = 0;
    for (double x = kSpawnFlatEnd; x + 2.0 * kToothHalfWidth <= kFeatureEnd; x += 2.0 * kToothHalfWidth) {
        const double peakX = x + kToothHalfWidth;
        const double endX = x + 2.0 * kToothHalfWidth;
        const double base0 = onHill ? hill_height(peakX) : 0.0;
        const double base1 = onHill ? hill_height(endX) : 0.0;
        pts.push_back({peakX, base0 + kToothHeights[tooth++ % kToothHeights.size()]});
        pts.push_back({endX, base1});
    }
    pts.push_back({kFarRight, pts.back().y});
    return pts;
}

std::vector<Vec2> ski_jump_points()
{
    return {{kFarLeft, 0.0},  {kSpawnFlatEnd, 0.0}, {60.0, 6.0},   {60.05, -10.0},
            {90.0, -10.0},    {90.05, 0.0},         {kFarRight, 0.0}};
}

} // namespace

std::string_view to_string(CourseId id)
{
    switch (id) {
    case CourseId::HillClimb: return "HillClimb";
    case CourseId::Bumps: return "Bumps";
    case CourseId::HillBumps: return "HillBumps";
    case CourseId::SkiJump: return "SkiJump";
    }
    return "?";
}

CourseId parse_course_id(std::string_view name)
{
    for (auto id : {CourseId::HillClimb, CourseId::Bumps, CourseId::HillBumps, CourseId::SkiJump})
        if (to_string(id) == name)
            return id;
    throw ValidationError("unknown course '" + std::string(name) + "'");
}

void Course::validate() const
{
    if (terrain.size() < 2)
        throw ValidationError("course terrain needs at least two points");
    for (std::size_t i = 1; i < terrain.size(); ++i)
        if (!(terrain[i].x > terrain[i - 1].x))
            throw ValidationError("course terrain x must be strictly increasing (point " + std::to_string(i) + ")");
    for (const auto& p : terrain)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw ValidationError("course terrain must be finite");
    if (!(spawnX >= terrain.front().x && spawnX <= terrain.back().x))
        throw ValidationError("spawnX outside terrain range");
    if (!(dropHeight >= 0.0) || !std::isfinite(dropHeight))
        throw ValidationError("dropHeight must be finite and non-negative");
}

double Course::height_at(double x) const
{
    if (x <= terrain.front().x)
        return terrain.front().y;
    if (x >= terrain.back().x)
        return terrain.back().y;
    const auto it = std::upper_bound(terrain.begin(), terrain.end(), x,
                                     [](double v, const Vec2& p) { return v < p.x; });
    const Vec2 b = *it;
    const Vec2 a = *(it - 1);
    const double t = (x - a.x) / (b.x - a.x);
    return a.y + t * (b.y - a.y);
}

std::pair<std::size_t, std::size_t> Course::segments_in(double x0, double x1) const
{
    const std::size_t n = terrain.size();
    const auto byX = [](const Vec2& p, double v) { return p.x < v; };
    const auto firstAbove = static_cast<std::size_t>(
        std::upper_bound(terrain.begin(), terrain.end(), x0, [](double v, const Vec2& p) { return v < p.x; }) -
        terrain.begin());
    const auto firstAtLeast =
        static_cast<std::size_t>(std::lower_bound(terrain.begin(), terrain.end(), x1, byX) - terrain.begin());
    const std::size_t first = firstAbove == 0 ? 0 : firstAbove - 1;
    const std::size_t last = std::min(std::max(firstAtLeast, std::size_t{1}), n - 1);
    return {std::min(first, last), last};
}

Course build_course(CourseId id)
{
    Course c;
    c.id = id;
    c.spawnX = 0.0;
    c.dropHeight = 3.0;
    switch (id) {
    case CourseId::HillClimb: c.terrain = hill_points(); break;
    case CourseId::Bumps: c.terrain = bump_points(false); break;
    case CourseId::HillBumps: c.terrain = bump_points(true); break;
    case CourseId::SkiJump: c.terrain = ski_jump_points(); break;
    }
    c.validate();
    return c;
}

void write_course(std::ostream& out, const Course& course)
{
    course.validate();
    out << kCourseMagic << ' ' << kCourseVersion << '\n';
    out << "id " << to_string(course.id) << '\n';
    out << "spawnX " << to_text(course.spawnX) << '\n';
    out << "dropHeight " << to_text(course.dropHeight) << '\n';
    out << "points " << course.terrain.size() << '\n';
    for (const auto& p : course.terrain)
        out << to_text(p.x) << ' ' << to_text(p.y) << '\n';
}

Course read_course(std::istream& in)
{
    std::string line;
    std::size_t lineNo = 0;
    auto next = [&]() {
        while (std::getline(in, line)) {
            ++lineNo;
            if (!line.empty() && line[0] != '#')
                return std::istringstream(line);
        }
        throw ParseError("course file truncated", lineNo);
    };
    auto keyed = [&](std::string_view key) {
        auto ls = next();
        std::string k, v;
        ls >> k >> v;
        if (k != key || v.empty())
            throw ParseError("expected '" + std::string(key) + " <value>'", lineNo);
        return v;
    };

    Course c;
    {
        auto ls = next();
        std::string magic, version;
        ls >> magic >> version;
        if (magic != kCourseMagic)
            throw ParseError("not a course file", lineNo);
        if (parse_int(version) != kCourseVersion)
            throw VersionError("unsupported course file version");
    }
    c.id = parse_course_id(keyed("id"));
    c.spawnX = parse_double(keyed("spawnX"));
    c.dropHeight = parse_double(keyed("dropHeight"));
    const auto count = parse_int(keyed("points"));
    if (count < 2)
        throw ParseError("course needs at least two points", lineNo);
    for (long long i = 0; i < count; ++i) {
        auto ls = next();
        std::string xs, ys;
        ls >> xs >> ys;
        c.terrain.push_back({parse_double(xs), parse_double(ys)});
    }
    c.validate();
    return c;
}

Course load_course(std::string_view nameOrPath)
{
    try {
        return build_course(parse_course_id(nameOrPath));
    }
    catch (const ValidationError&) {
    }
    std::ifstream in{std::string(nameOrPath)};
    if (!in)
        throw ValidationError("unknown course or unreadable course file: " + std::string(nameOrPath));
    return read_course(in);
}

} // namespace cardesign
