#include "cardesign/descriptors.hpp"

namespace cardesign {

double Descriptors::get(DescriptorKind kind) const
{
    switch (kind) {
    case DescriptorKind::Speed: return meanWheelSpeed;
    case DescriptorKind::Wheel: return meanWheelRadius;
    case DescriptorKind::Geometry: return geometrySpread;
    }
    return 0.0;
}

double descriptor_speed(const CarGenome& genome)
{
    double sum = 0.0;
    for (const auto& w : genome.wheels)
        sum += w.motorTargetSpeed;
    return sum / static_cast<double>(genome.wheels.size());
}

double descriptor_wheel(const CarGenome& genome)
{
    double sum = 0.0;
    for (const auto& w : genome.wheels)
        sum += w.radius;
    return sum / static_cast<double>(genome.wheels.size());
}

double descriptor_geometry(const CarBlueprint& blueprint)
{
    double sum = 0.0;
    for (const auto& v : blueprint.polygon)
        sum += length(v - blueprint.centerOfMass);
    return sum / static_cast<double>(blueprint.polygon.size());
}

Descriptors describe(const CarGenome& genome, const CarBlueprint& blueprint)
{
    return {descriptor_speed(genome), descriptor_wheel(genome), descriptor_geometry(blueprint)};
}

} // namespace cardesign
