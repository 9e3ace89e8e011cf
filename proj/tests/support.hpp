#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "cardesign/course.hpp"
#include "cardesign/genome.hpp"

namespace cardesign::testing {

/// Level ground from x = -2000 to 5000.
inline Course flat_course()
{
    Course c;
    c.id = CourseId::SkiJump;
    c.terrain = {{-2000.0, 0.0}, {5000.0, 0.0}};
    return c;
}

/// Octagon of radius 1 with two wheels under it, all motors at `speed`.
inline CarGenome test_car(double speed, DesignConfig& config)
{
    config = DesignConfig{};
    config.nv = 8;
    config.nw = 2;
    CarGenome g;
    g.bodyMass = 50.0;
    g.vertexRadii.assign(8, 1.0);
    WheelGene w;
    w.radius = 0.4;
    w.mass = 5.0;
    w.motorTargetSpeed = speed;
    w.suspensionFrequency = 4.0;
    w.vertexGene = 2.5;
    g.wheels.push_back(w);
    w.vertexGene = 4.5;
    g.wheels.push_back(w);
    return g;
}

inline bool bit_equal(double a, double b)
{
    return std::memcmp(&a, &b, sizeof a) == 0;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("cardesign-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace cardesign::testing
