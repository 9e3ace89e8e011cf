#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cardesign/course.hpp"
#include "cardesign/error.hpp"
#include "cardesign/evaluate.hpp"
#include "cardesign/physics.hpp"
#include "support.hpp"

using namespace cardesign;
using cardesign::testing::bit_equal;
using cardesign::testing::flat_course;
using cardesign::testing::test_car;

namespace {

CarModel model_of(const CarGenome& g, const DesignConfig& c, const SimConfig& sim)
{
    return make_model(decode(g, c), sim);
}

// Moves a spawned world by (dx, dy) without touching velocities.
WorldState lifted(WorldState w, double dy)
{
    w.chassis.position.y += dy;
    for (auto& wheel : w.wheels)
        wheel.body.position.y += dy;
    return w;
}

} // namespace

TEST_CASE("free fall matches -g n dt")
{
    DesignConfig dc;
    const auto g = test_car(0.0, dc);
    SimConfig sim;
    const auto course = flat_course();
    const auto model = model_of(g, dc, sim);
    Simulation s(model, course, sim, lifted(spawn(model, course), 1000.0));
    const int n = 240;
    for (int i = 0; i < n; ++i)
        s.step();
    const double expected = -sim.gravity * n * sim.dt;
    CHECK(std::abs(s.state().chassis.velocity.y - expected) < 1e-9);
    for (const auto& w : s.state().wheels)
        CHECK(std::abs(w.body.velocity.y - expected) < 1e-9);
    CHECK(s.state().chassis.velocity.x == 0.0);
    CHECK_FALSE(s.state().firstContact.has_value());
}

TEST_CASE("zero gravity and no contact leaves the state unchanged")
{
    DesignConfig dc;
    const auto g = test_car(0.0, dc);
    SimConfig sim;
    sim.gravity = 0.0;
    const auto course = flat_course();
    const auto model = model_of(g, dc, sim);
    const WorldState start = lifted(spawn(model, course), 50.0);
    Simulation s(model, course, sim, start);
    for (int i = 0; i < 600; ++i)
        s.step();
    const auto& w = s.state();
    CHECK(w.chassis.position == start.chassis.position);
    CHECK(w.chassis.velocity == start.chassis.velocity);
    CHECK(w.chassis.angle == start.chassis.angle);
    CHECK(w.chassis.angularVelocity == start.chassis.angularVelocity);
    for (std::size_t j = 0; j < w.wheels.size(); ++j) {
        CHECK(w.wheels[j].body.position == start.wheels[j].body.position);
        CHECK(w.wheels[j].body.velocity == start.wheels[j].body.velocity);
    }
}

TEST_CASE("step requires the configured timestep")
{
    DesignConfig dc;
    const auto g = test_car(0.0, dc);
    SimConfig sim;
    const auto course = flat_course();
    const auto model = model_of(g, dc, sim);
    const auto w0 = spawn(model, course);
    CHECK_THROWS_AS(step(model, course, sim, w0, sim.dt * 2.0), ValidationError);
    const auto w1 = step(model, course, sim, w0, sim.dt);
    CHECK(w1.stepIndex == 1);
}

TEST_CASE("single driven wheel moves the car forward")
{
    // A small light chassis hung inside one large wheel, so only the wheel
    // touches the ground.
    DesignConfig dc;
    dc.nv = 3;
    dc.nw = 1;
    CarGenome g;
    g.bodyMass = 10.0;
    g.vertexRadii.assign(3, 0.2);
    WheelGene w;
    w.radius = 1.0;
    w.mass = 5.0;
    w.motorTargetSpeed = 10.0;
    w.suspensionFrequency = 4.0;
    w.vertexGene = 1.5;
    g.wheels.push_back(w);
    SimConfig sim;
    sim.duration = 5.0;
    const auto r = simulate(decode(g, dc), flat_course(), sim);
    REQUIRE(r.fitness.has_value());
    CHECK(r.finalX - r.trajectory.front().bodyX > 0.0);
    CHECK(*r.fitness > 0.0);
}

TEST_CASE("car at rest with zero motor stays at rest")
{
    DesignConfig dc;
    const auto g = test_car(0.0, dc);
    SimConfig sim;
    const auto course = flat_course();
    Simulation s(model_of(g, dc, sim), course, sim);
    double maxSpeedAfterSettle = 0.0;
    const int settle = static_cast<int>(std::lround(2.0 / sim.dt));
    for (int i = 0; i < sim.step_count(); ++i) {
        s.step();
        if (i >= settle)
            maxSpeedAfterSettle = std::max(maxSpeedAfterSettle, std::abs(s.state().chassis.velocity.x));
    }
    CHECK(maxSpeedAfterSettle < 0.01);
}

TEST_CASE("zero-motor fitness is near zero and reverse drive scores negative")
{
    DesignConfig dc;
    const auto course = flat_course();
    SimConfig sim;
    const auto idle = evaluate_design(test_car(0.0, dc), dc, course, sim);
    REQUIRE(idle.fitness.has_value());
    CHECK(std::abs(*idle.fitness) < 0.05);
    const auto back = evaluate_design(test_car(-15.0, dc), dc, course, sim);
    REQUIRE(back.fitness.has_value());
    CHECK(*back.fitness < 0.0);
    const auto fwd = evaluate_design(test_car(15.0, dc), dc, course, sim);
    REQUIRE(fwd.fitness.has_value());
    CHECK(*fwd.fitness > 0.0);
}

TEST_CASE("fitness is final x minus first-contact x")
{
    DesignConfig dc;
    Rng rng(17);
    SimConfig sim;
    sim.duration = 10.0;
    const auto course = build_course(CourseId::HillClimb);
    for (int i = 0; i < 5; ++i) {
        const auto r = evaluate_design(random_genome(rng, dc), dc, course, sim);
        if (!r.fitness)
            continue;
        CHECK(bit_equal(*r.fitness, r.finalX - r.firstContactX));
        CHECK(bit_equal(r.finalX, r.trajectory.back().bodyX));
        CHECK(r.firstContactTime.has_value());
    }
}

TEST_CASE("penetration stays within twice the slop for random cars")
{
    const auto course = build_course(CourseId::HillBumps);
    SimConfig sim;
    sim.duration = 10.0;
    Rng rng(2024);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
        DesignConfig dc;
        dc.nv = 3 + static_cast<int>(rng.below(10));
        dc.nw = 1 + static_cast<int>(rng.below(6));
        const auto g = random_genome(rng, dc);
        const auto r = evaluate_design(g, dc, course, sim);
        if (r.diverged)
            continue;
        ++checked;
        CHECK(r.maxPenetration <= 2.0 * sim.contactSlop);
    }
    CHECK(checked >= 95);
}

TEST_CASE("simulation is deterministic")
{
    DesignConfig dc;
    Rng a(5);
    const auto g = random_genome(a, dc);
    const auto course = build_course(CourseId::Bumps);
    SimConfig sim;
    sim.duration = 8.0;
    const auto r1 = evaluate_design(g, dc, course, sim);
    const auto r2 = evaluate_design(g, dc, course, sim);
    REQUIRE(r1.trajectory.size() == r2.trajectory.size());
    for (std::size_t i = 0; i < r1.trajectory.size(); ++i) {
        CHECK(bit_equal(r1.trajectory[i].bodyX, r2.trajectory[i].bodyX));
        CHECK(bit_equal(r1.trajectory[i].bodyY, r2.trajectory[i].bodyY));
        CHECK(bit_equal(r1.trajectory[i].angle, r2.trajectory[i].angle));
    }
    CHECK(r1.fitness == r2.fitness);
}

TEST_CASE("trajectory is sampled at 10 Hz")
{
    DesignConfig dc;
    const auto g = test_car(5.0, dc);
    SimConfig sim;
    const auto r = simulate(decode(g, dc), flat_course(), sim);
    CHECK(r.trajectory.size() == 301);
    CHECK(r.trajectory.front().t == 0.0);
    CHECK(r.trajectory.back().t == doctest::Approx(30.0));
}

TEST_CASE("courses have strictly increasing x")
{
    for (auto id : {CourseId::HillClimb, CourseId::Bumps, CourseId::HillBumps, CourseId::SkiJump}) {
        const auto c = build_course(id);
        CHECK_NOTHROW(c.validate());
        for (std::size_t i = 1; i < c.terrain.size(); ++i)
            CHECK(c.terrain[i].x > c.terrain[i - 1].x);
        CHECK(c.spawnX >= c.min_x());
    }
}

TEST_CASE("bumps alternate slope sign")
{
    const auto c = build_course(CourseId::Bumps);
    int prevSign = 0;
    int teeth = 0;
    for (std::size_t i = 1; i < c.terrain.size(); ++i) {
        const double slope = c.terrain[i].y - c.terrain[i - 1].y;
        if (slope == 0.0)
            continue;
        const int sign = slope > 0.0 ? 1 : -1;
        if (prevSign != 0)
            CHECK(sign == -prevSign);
        prevSign = sign;
        ++teeth;
    }
    CHECK(teeth > 100);
}

TEST_CASE("hill climb never descends after the spawn")
{
    const auto c = build_course(CourseId::HillClimb);
    for (std::size_t i = 1; i < c.terrain.size(); ++i)
        if (c.terrain[i - 1].x >= c.spawnX)
            CHECK(c.terrain[i].y >= c.terrain[i - 1].y);
    CHECK(c.terrain.back().y > 10.0);
}

TEST_CASE("height_at interpolates and clamps")
{
    Course c;
    c.terrain = {{0.0, 0.0}, {10.0, 5.0}, {20.0, 5.0}};
    CHECK(c.height_at(5.0) == 2.5);
    CHECK(c.height_at(-100.0) == 0.0);
    CHECK(c.height_at(100.0) == 5.0);
}

TEST_CASE("course file round trip")
{
    const auto c = build_course(CourseId::SkiJump);
    std::stringstream ss;
    write_course(ss, c);
    const auto back = read_course(ss);
    CHECK(back.id == c.id);
    CHECK(back.terrain == c.terrain);
    CHECK(back.spawnX == c.spawnX);
    CHECK(back.dropHeight == c.dropHeight);
}

TEST_CASE("invalid course and sim config are rejected")
{
    Course c;
    c.terrain = {{0.0, 0.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    SimConfig s;
    s.dt = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    CHECK_THROWS_AS(parse_course_id("Moon"), ValidationError);
}

TEST_CASE("parallel evaluation equals the serial reference")
{
    DesignConfig dc;
    Rng rng(31);
    std::vector<CarGenome> gs;
    for (int i = 0; i < 12; ++i)
        gs.push_back(random_genome(rng, dc));
    SimConfig sim;
    sim.duration = 5.0;
    const auto course = build_course(CourseId::HillClimb);
    const auto a = evaluate_serial(gs, dc, course, sim);
    const auto b = evaluate_parallel(gs, dc, course, sim);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].fitness == b[i].fitness);
        CHECK(a[i].diverged == b[i].diverged);
        CHECK(bit_equal(a[i].finalX, b[i].finalX));
        CHECK(a[i].descriptors == b[i].descriptors);
    }
}
