#pragma once

#include "cardesign/genome.hpp"

namespace cardesign {

enum class DescriptorKind { Speed, Wheel, Geometry };

struct Descriptors {
    double meanWheelSpeed = 0.0;   // rad/s
    double meanWheelRadius = 0.0;  // m
    double geometrySpread = 0.0;   // m

    double get(DescriptorKind kind) const;
    friend bool operator==(const Descriptors&, const Descriptors&) = default;
};

/// Mean motor target speed over the wheels.
double descriptor_speed(const CarGenome& genome);
/// Mean wheel radius.
double descriptor_wheel(const CarGenome& genome);
/// Mean distance from each body vertex to the combined (body + wheels) center of mass.
double descriptor_geometry(const CarBlueprint& blueprint);

Descriptors describe(const CarGenome& genome, const CarBlueprint& blueprint);

} // namespace cardesign
