#pragma once

#include <optional>
#include <vector>

#include "cardesign/course.hpp"
#include "cardesign/descriptors.hpp"
#include "cardesign/genome.hpp"
#include "cardesign/vec2.hpp"

namespace cardesign {

struct SimConfig {
    double dt = 1.0 / 120.0;      // s
    double duration = 30.0;       // s, simulated
    double gravity = 9.81;        // m/s^2
    double dampingRatio = 0.7;    // suspension
    double motorGain = 40.0;      // N m s / rad
    double maxMotorTorque = 400.0;  // N m
    double friction = 0.8;
    double contactSlop = 0.005;   // m
    int velocityIterations = 10;
    int positionIterations = 8;
    double worldBound = 1.0e5;    // m
    double sampleRate = 10.0;     // Hz, trajectory samples

    void validate() const;
    int step_count() const;
    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct BodyState {
    Vec2 position;
    double angle = 0.0;
    Vec2 velocity;
    double angularVelocity = 0.0;  // counter-clockwise positive
};

struct WheelState {
    BodyState body;
    /// Distance between the wheel centre and its mount point on the chassis.
    double suspensionExtension = 0.0;
};

struct WorldState {
    BodyState chassis;              // chassis position is the body centroid
    std::vector<WheelState> wheels;
    double time = 0.0;
    long long stepIndex = 0;
    std::optional<Vec2> firstContact;     // terrain point touched first
    std::optional<double> firstContactX;  // chassis x at that moment
    std::optional<double> firstContactTime;
    double penetration = 0.0;   // deepest terrain penetration after the last step
    bool diverged = false;
};

/// Mass properties and joint parameters derived once from a blueprint.
struct CarModel {
    struct Wheel {
        Vec2 anchor;         // chassis frame, relative to the body centroid
        double radius = 0.0;
        double mass = 0.0;
        double inertia = 0.0;
        double stiffness = 0.0;   // N/m
        double damping = 0.0;     // N s/m
        double motorTargetSpeed = 0.0;  // rad/s, positive drives towards +x
    };

    std::vector<Vec2> hull;     // chassis frame, relative to the body centroid
    Vec2 bodyCentroid;          // in the design frame
    double mass = 0.0;
    double inertia = 0.0;
    std::vector<Wheel> wheels;
};

CarModel make_model(const CarBlueprint& blueprint, const SimConfig& config);

/// Car at rest with its lowest point dropHeight above the terrain at spawnX.
WorldState spawn(const CarModel& model, const Course& course);

struct TrajectorySample {
    double t = 0.0;
    double bodyX = 0.0;
    double bodyY = 0.0;
    double angle = 0.0;
    std::vector<double> wheelAngles;
    std::vector<Vec2> wheelPositions;
};

class Simulation {
public:
    Simulation(CarModel model, const Course& course, const SimConfig& config);
    Simulation(CarModel model, const Course& course, const SimConfig& config, WorldState initial);

    const WorldState& state() const { return world_; }
    const CarModel& model() const { return model_; }

    /// Advances exactly one fixed timestep. No-op once diverged.
    void step();

    /// Terrain contacts at the current pose: (separation, point) pairs, separation < 0 when penetrating.
    struct ContactInfo {
        double separation;
        Vec2 point;
    };
    std::vector<ContactInfo> probe_contacts(double margin) const;

private:
    // Normals point from the terrain into the car: the direction the car body
    // has to move to separate.
    struct Contact {
        int body = 0;  // 0 chassis, 1 + j wheel j
        Vec2 normal;
        Vec2 arm;      // contact point relative to the body position
        double separation = 0.0;
        double normalMass = 0.0;
        double tangentMass = 0.0;
        double normalImpulse = 0.0;
        double tangentImpulse = 0.0;
        Vec2 point;
    };
    void detect(double margin, std::vector<Contact>& out) const;
    void solve_velocities(double h);
    void project_positions();
    void check_divergence();

    CarModel model_;
    const Course* course_;
    SimConfig config_;
    WorldState world_;
    std::vector<Contact> contacts_;
};

/// One fixed step on a copy of `world`. Throws ValidationError unless dt == config.dt.
WorldState step(const CarModel& model, const Course& course, const SimConfig& config, const WorldState& world,
                double dt);

struct SimulationResult {
    std::optional<double> fitness;  // empty when diverged
    double firstContactX = 0.0;
    double finalX = 0.0;
    std::optional<double> firstContactTime;
    std::vector<TrajectorySample> trajectory;
    Descriptors descriptors;
    bool diverged = false;
    double maxPenetration = 0.0;

    /// Fitness for selection: -inf when diverged.
    double selection_fitness() const;
};

TrajectorySample sample_of(const WorldState& world);

SimulationResult simulate(const CarBlueprint& blueprint, const Course& course, const SimConfig& config,
                          const Descriptors& descriptors = {});

/// Decodes, simulates and attaches descriptors.
SimulationResult evaluate_design(const CarGenome& genome, const DesignConfig& design, const Course& course,
                                 const SimConfig& config);

} // namespace cardesign
