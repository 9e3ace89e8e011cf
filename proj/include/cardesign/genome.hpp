#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cardesign/course.hpp"
#include "cardesign/random.hpp"
#include "cardesign/vec2.hpp"

namespace cardesign {

inline constexpr int kMinVertices = 3;
inline constexpr int kMaxVertices = 24;
inline constexpr int kMinWheels = 1;
inline constexpr int kMaxWheels = 12;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double v) const { return v >= lo && v <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct GeneBounds {
    Interval bodyMass{10.0, 200.0};           // kg
    Interval vertexRadius{0.1, 2.0};          // m
    Interval wheelRadius{0.05, 1.0};          // m
    Interval wheelMass{1.0, 50.0};            // kg
    Interval motorTargetSpeed{-30.0, 30.0};   // rad/s
    Interval suspensionFrequency{0.5, 10.0};  // Hz

    friend bool operator==(const GeneBounds&, const GeneBounds&) = default;
};

struct DesignConfig {
    int nv = 7;
    int nw = 4;
    GeneBounds bounds;
    CourseId courseId = CourseId::HillClimb;

    void validate() const;
    friend bool operator==(const DesignConfig&, const DesignConfig&) = default;
};

struct WheelGene {
    /// Continuous gene in [1, nv + 1); the mount vertex is its floor.
    double vertexGene = 1.0;
    double radius = 0.3;
    double mass = 5.0;
    double motorTargetSpeed = 0.0;
    double suspensionFrequency = 4.0;

    /// 1-based mount vertex.
    int vertex_index() const { return static_cast<int>(vertexGene); }

    friend bool operator==(const WheelGene&, const WheelGene&) = default;
};

struct CarGenome {
    double bodyMass = 50.0;
    std::vector<double> vertexRadii;
    std::vector<WheelGene> wheels;

    int nv() const { return static_cast<int>(vertexRadii.size()); }
    int nw() const { return static_cast<int>(wheels.size()); }

    friend bool operator==(const CarGenome&, const CarGenome&) = default;
};

struct WheelMount {
    Vec2 position;   // body frame, same as polygon
    WheelGene gene;
};

/// Geometry in the design frame: the polar origin sits at (0, 0).
struct CarBlueprint {
    std::vector<Vec2> polygon;
    Vec2 centerOfMass;      // body plus point-mass wheels at their mounts
    std::vector<WheelMount> wheelMounts;

    double bodyMass = 0.0;
    Vec2 bodyCentroid;      // uniform-density body alone
    double bodyInertia = 0.0;  // about bodyCentroid, kg m^2
};

/// D = 1 + nv + 5 nw. Throws ValidationError outside the legal ranges.
int genome_dimension(int nv, int nw);

/// Polar angle of 1-based vertex i, in degrees: 360 (1 - i) / nv.
double vertex_angle(int i, int nv);

/// Flattened per-gene bounds in the canonical gene order.
std::vector<Interval> gene_intervals(const DesignConfig& config);

/// [bodyMass, r_1..r_nv, per wheel (vertexGene, radius, mass, motorTargetSpeed, suspensionFrequency)]
std::vector<double> to_genes(const CarGenome& genome);
CarGenome from_genes(std::span<const double> genes, const DesignConfig& config);

void validate(const CarGenome& genome, const DesignConfig& config);
bool is_valid(const CarGenome& genome, const DesignConfig& config);

CarBlueprint decode(const CarGenome& genome, const DesignConfig& config);

CarGenome random_genome(Rng& rng, const DesignConfig& config);

struct MutationParams {
    /// Per-gene probability; 1/D when unset.
    std::optional<double> rate;
    /// Gaussian sigma as a fraction of each gene's interval width.
    double scale = 0.1;
};

CarGenome mutate(const CarGenome& genome, Rng& rng, const DesignConfig& config,
                 const MutationParams& params = {});
CarGenome crossover(const CarGenome& a, const CarGenome& b, Rng& rng, const DesignConfig& config);

/// Design file: self-describing text with the config and the flat gene list.
void write_design(std::ostream& out, const CarGenome& genome, const DesignConfig& config);

struct DesignFile {
    DesignConfig config;
    CarGenome genome;
};
DesignFile read_design(std::istream& in);

} // namespace cardesign
