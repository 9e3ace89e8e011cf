#include "cardesign/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cardesign/error.hpp"

namespace cardesign {

namespace {

Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b)
{
    const Vec2 ab = b - a;
    const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
    return a + t * ab;
}

Vec2 segment_up_normal(Vec2 a, Vec2 b)
{
    const Vec2 d = b - a;
    const double len = length(d);
    return {-d.y / len, d.x / len};
}

bool inside_polygon(Vec2 p, const std::vector<Vec2>& poly)
{
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i], b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xCross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xCross)
                inside = !inside;
        }
    }
    return inside;
}

bool finite_state(const BodyState& s, double bound)
{
    const double v[] = {s.position.x, s.position.y, s.angle, s.velocity.x, s.velocity.y, s.angularVelocity};
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return std::abs(s.position.x) <= bound && std::abs(s.position.y) <= bound;
}

} // namespace

void SimConfig::validate() const
{
    if (!(dt > 0.0) || !(duration > 0.0))
        throw ValidationError("simConfig: dt and duration must be positive");
    if (!(gravity >= 0.0) || !(dampingRatio >= 0.0) || !(motorGain > 0.0) || !(maxMotorTorque >= 0.0))
        throw ValidationError("simConfig: gravity, damping, motor parameters out of range");
    if (!(friction >= 0.0) || !(contactSlop > 0.0))
        throw ValidationError("simConfig: friction and contact slop out of range");
    if (velocityIterations < 1 || positionIterations < 0)
        throw ValidationError("simConfig: solver iterations out of range");
    if (!(worldBound > 0.0) || !(sampleRate > 0.0))
        throw ValidationError("simConfig: world bound and sample rate must be positive");
}

int SimConfig::step_count() const { return static_cast<int>(std::llround(duration / dt)); }

CarModel make_model(const CarBlueprint& blueprint, const SimConfig& config)
{
    CarModel m;
    m.bodyCentroid = blueprint.bodyCentroid;
    m.mass = blueprint.bodyMass;
    m.inertia = blueprint.bodyInertia;
    for (const auto& v : blueprint.polygon)
        m.hull.push_back(v - blueprint.bodyCentroid);
    for (const auto& mount : blueprint.wheelMounts) {
        const auto& g = mount.gene;
        const double omega = 2.0 * std::numbers::pi * g.suspensionFrequency;
        CarModel::Wheel w;
        w.anchor = mount.position - blueprint.bodyCentroid;
        w.radius = g.radius;
        w.mass = g.mass;
        w.inertia = 0.5 * g.mass * g.radius * g.radius;
        w.stiffness = g.mass * omega * omega;
        w.damping = 2.0 * config.dampingRatio * g.mass * omega;
        w.motorTargetSpeed = g.motorTargetSpeed;
        m.wheels.push_back(w);
    }
    return m;
}

WorldState spawn(const CarModel& model, const Course& course)
{
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& v : model.hull)
        lowest = std::min(lowest, v.y + model.bodyCentroid.y);
    for (const auto& w : model.wheels)
        lowest = std::min(lowest, w.anchor.y + model.bodyCentroid.y - w.radius);

    const Vec2 origin{course.spawnX, course.height_at(course.spawnX) + course.dropHeight - lowest};
    WorldState world;
    world.chassis.position = origin + model.bodyCentroid;
    for (const auto& w : model.wheels) {
        WheelState ws;
        ws.body.position = world.chassis.position + w.anchor;
        world.wheels.push_back(ws);
    }
    return world;
}

Simulation::Simulation(CarModel model, const Course& course, const SimConfig& config)
    : Simulation(model, course, config, spawn(model, course))
{
}

Simulation::Simulation(CarModel model, const Course& course, const SimConfig& config, WorldState initial)
    : model_(std::move(model)), course_(&course), config_(config), world_(std::move(initial))
{
    config_.validate();
    course.validate();
    if (world_.wheels.size() != model_.wheels.size())
        throw ValidationError("world state wheel count does not match the car model");
}

void Simulation::detect(double margin, std::vector<Contact>& out) const
{
    out.clear();
    const Course& course = *course_;
    const auto& terrain = course.terrain;
    const BodyState& chassis = world_.chassis;

    // Chassis hull in world coordinates.
    std::vector<Vec2> hull;
    hull.reserve(model_.hull.size());
    double minX = std::numeric_limits<double>::infinity(), maxX = -minX;
    double minY = minX, maxY = -minX;
    const double c = std::cos(chassis.angle), s = std::sin(chassis.angle);
    for (const auto& v : model_.hull) {
        const Vec2 w{chassis.position.x + c * v.x - s * v.y, chassis.position.y + s * v.x + c * v.y};
        hull.push_back(w);
        minX = std::min(minX, w.x);
        maxX = std::max(maxX, w.x);
        minY = std::min(minY, w.y);
        maxY = std::max(maxY, w.y);
    }

    auto [first, last] = course.segments_in(minX - margin, maxX + margin);

    auto push = [&](int body, Vec2 point, Vec2 normal, double separation, Vec2 bodyPos) {
        Contact k;
        k.body = body;
        k.point = point;
        k.normal = normal;
        k.separation = separation;
        k.arm = point - bodyPos;
        out.push_back(k);
    };

    // Hull vertices against terrain segments.
    for (const Vec2 p : hull) {
        double best = std::numeric_limits<double>::infinity();
        Vec2 bestPoint;
        std::size_t bestSeg = first;
        for (std::size_t i = first; i < last; ++i) {
            const Vec2 q = closest_on_segment(p, terrain[i], terrain[i + 1]);
            const double d = length(p - q);
            if (d < best) {
                best = d;
                bestPoint = q;
                bestSeg = i;
            }
        }
        if (first == last)
            continue;
        const bool below = p.y < course.height_at(p.x);
        if (!below && best >= margin)
            continue;
        Vec2 n = segment_up_normal(terrain[bestSeg], terrain[bestSeg + 1]);
        if (best > 1e-12)
            n = below ? (1.0 / best) * (bestPoint - p) : (1.0 / best) * (p - bestPoint);
        push(0, p, n, below ? -best : best, chassis.position);
    }

    // Terrain vertices against the hull edges (teeth poking into the body).
    if (first < last) {
        for (std::size_t j = first; j <= last; ++j) {
            const Vec2 v = terrain[j];
            if (v.x < minX - margin || v.x > maxX + margin || v.y < minY - margin || v.y > maxY + margin)
                continue;
            double best = std::numeric_limits<double>::infinity();
            Vec2 edgePoint;
            for (std::size_t i = 0; i < hull.size(); ++i) {
                const Vec2 e = closest_on_segment(v, hull[i], hull[(i + 1) % hull.size()]);
                const double d = length(v - e);
                if (d < best) {
                    best = d;
                    edgePoint = e;
                }
            }
            if (best <= 1e-12)
                continue;
            if (inside_polygon(v, hull))
                push(0, edgePoint, (1.0 / best) * (v - edgePoint), -best, chassis.position);
            else if (best < margin)
                push(0, edgePoint, (1.0 / best) * (edgePoint - v), best, chassis.position);
        }
    }

    // Wheels: circle against segments.
    for (std::size_t w = 0; w < world_.wheels.size(); ++w) {
        const Vec2 center = world_.wheels[w].body.position;
        const double r = model_.wheels[w].radius;
        const auto [wf, wl] = course.segments_in(center.x - r - margin, center.x + r + margin);
        if (wf == wl)
            continue;
        const int body = static_cast<int>(w) + 1;
        const bool below = center.y < course.height_at(center.x);
        if (below) {
            double best = std::numeric_limits<double>::infinity();
            Vec2 bestPoint;
            std::size_t bestSeg = wf;
            for (std::size_t i = wf; i < wl; ++i) {
                const Vec2 q = closest_on_segment(center, terrain[i], terrain[i + 1]);
                const double d = length(center - q);
                if (d < best) {
                    best = d;
                    bestPoint = q;
                    bestSeg = i;
                }
            }
            const Vec2 n = best > 1e-12 ? (1.0 / best) * (bestPoint - center)
                                        : segment_up_normal(terrain[bestSeg], terrain[bestSeg + 1]);
            push(body, center - r * n, n, -(best + r), center);
            continue;
        }
        bool havePrev = false;
        Vec2 prevPoint;
        for (std::size_t i = wf; i < wl; ++i) {
            const Vec2 q = closest_on_segment(center, terrain[i], terrain[i + 1]);
            if (havePrev && q == prevPoint)
                continue;  // shared vertex already reported by the previous segment
            const double d = length(center - q);
            if (d - r >= margin)
                continue;
            const Vec2 n = d > 1e-12 ? (1.0 / d) * (center - q) : segment_up_normal(terrain[i], terrain[i + 1]);
            push(body, center - r * n, n, d - r, center);
            havePrev = true;
            prevPoint = q;
        }
    }
}

std::vector<Simulation::ContactInfo> Simulation::probe_contacts(double margin) const
{
    std::vector<Contact> tmp;
    detect(margin, tmp);
    std::vector<ContactInfo> out;
    for (const auto& k : tmp)
        out.push_back({k.separation, k.point});
    return out;
}

void Simulation::solve_velocities(double h)
{
    BodyState& chassis = world_.chassis;
    const double invMassA = 1.0 / model_.mass;
    const double invInertiaA = 1.0 / model_.inertia;

    auto body = [&](int i) -> BodyState& { return i == 0 ? chassis : world_.wheels[static_cast<std::size_t>(i - 1)].body; };
    auto invMass = [&](int i) { return i == 0 ? invMassA : 1.0 / model_.wheels[static_cast<std::size_t>(i - 1)].mass; };
    auto invInertia = [&](int i) {
        return i == 0 ? invInertiaA : 1.0 / model_.wheels[static_cast<std::size_t>(i - 1)].inertia;
    };

    // Suspension: soft point constraint with the configured stiffness and damping.
    struct Joint {
        Vec2 arm;
        Vec2 bias;
        double gamma;
        double k11, k12, k22;  // inverse of the soft effective-mass matrix
        Vec2 impulse;
    };
    struct Motor {
        double target;  // relative counter-clockwise rate
        double gamma;
        double mass;
        double maxImpulse;
        double impulse = 0.0;
    };
    const std::size_t nw = model_.wheels.size();
    Joint joints[kMaxWheels];
    Motor motors[kMaxWheels];
    for (std::size_t j = 0; j < nw; ++j) {
        const auto& w = model_.wheels[j];
        const Vec2 arm = rotate(w.anchor, chassis.angle);
        const Vec2 C = world_.wheels[j].body.position - (chassis.position + arm);
        const double gamma = 1.0 / (h * (w.damping + h * w.stiffness));
        const double invMassB = 1.0 / w.mass;
        const double a11 = invMassA + invMassB + invInertiaA * arm.y * arm.y + gamma;
        const double a12 = -invInertiaA * arm.x * arm.y;
        const double a22 = invMassA + invMassB + invInertiaA * arm.x * arm.x + gamma;
        const double det = a11 * a22 - a12 * a12;
        joints[j] = {arm, (h * w.stiffness * gamma) * C, gamma, a22 / det, -a12 / det, a11 / det, {}};

        const double motorGamma = 1.0 / (h * config_.motorGain);
        motors[j] = {-w.motorTargetSpeed, motorGamma, 1.0 / (invInertiaA + 1.0 / w.inertia + motorGamma),
                     config_.maxMotorTorque * h};
    }

    for (auto& k : contacts_) {
        const double im = invMass(k.body), ii = invInertia(k.body);
        const Vec2 t{k.normal.y, -k.normal.x};
        const double rn = cross(k.arm, k.normal), rt = cross(k.arm, t);
        k.normalMass = 1.0 / (im + ii * rn * rn);
        k.tangentMass = 1.0 / (im + ii * rt * rt);
        k.normalImpulse = 0.0;
        k.tangentImpulse = 0.0;
    }

    for (int it = 0; it < config_.velocityIterations; ++it) {
        for (std::size_t j = 0; j < nw; ++j) {
            auto& jt = joints[j];
            BodyState& wheel = world_.wheels[j].body;
            const double invMassB = 1.0 / model_.wheels[j].mass;
            const Vec2 cdot = wheel.velocity - (chassis.velocity + cross(chassis.angularVelocity, jt.arm));
            const Vec2 rhs = -(cdot + jt.bias + jt.gamma * jt.impulse);
            const Vec2 lambda{jt.k11 * rhs.x + jt.k12 * rhs.y, jt.k12 * rhs.x + jt.k22 * rhs.y};
            jt.impulse += lambda;
            wheel.velocity += invMassB * lambda;
            chassis.velocity -= invMassA * lambda;
            chassis.angularVelocity -= invInertiaA * cross(jt.arm, lambda);
        }
        for (std::size_t j = 0; j < nw; ++j) {
            auto& m = motors[j];
            BodyState& wheel = world_.wheels[j].body;
            const double rel = wheel.angularVelocity - chassis.angularVelocity;
            double lambda = -m.mass * (rel - m.target + m.gamma * m.impulse);
            const double old = m.impulse;
            m.impulse = std::clamp(old + lambda, -m.maxImpulse, m.maxImpulse);
            lambda = m.impulse - old;
            wheel.angularVelocity += lambda / model_.wheels[j].inertia;
            chassis.angularVelocity -= invInertiaA * lambda;
        }
        for (auto& k : contacts_) {
            BodyState& b = body(k.body);
            const double im = invMass(k.body), ii = invInertia(k.body);
            const Vec2 t{k.normal.y, -k.normal.x};

            Vec2 vrel = b.velocity + cross(b.angularVelocity, k.arm);
            {
                const double vt = dot(vrel, t);
                const double maxF = config_.friction * k.normalImpulse;
                const double old = k.tangentImpulse;
                k.tangentImpulse = std::clamp(old - k.tangentMass * vt, -maxF, maxF);
                const Vec2 P = (k.tangentImpulse - old) * t;
                b.velocity += im * P;
                b.angularVelocity += ii * cross(k.arm, P);
            }
            vrel = b.velocity + cross(b.angularVelocity, k.arm);
            {
                const double vn = dot(vrel, k.normal);
                const double bias = k.separation > 0.0 ? k.separation / h : 0.0;
                const double old = k.normalImpulse;
                k.normalImpulse = std::max(old - k.normalMass * (vn + bias), 0.0);
                const Vec2 P = (k.normalImpulse - old) * k.normal;
                b.velocity += im * P;
                b.angularVelocity += ii * cross(k.arm, P);
            }
        }
    }
}

void Simulation::project_positions()
{
    const double slop = config_.contactSlop;
    constexpr double maxCorrection = 0.2;
    struct Delta {
        Vec2 position;
        double angle = 0.0;
    };
    std::vector<Delta> deltas(1 + world_.wheels.size());

    for (int pass = 0;; ++pass) {
        detect(slop, contacts_);
        double deepest = 0.0;
        for (const auto& k : contacts_)
            deepest = std::max(deepest, -k.separation);
        world_.penetration = deepest;
        if (!world_.firstContact && !contacts_.empty()) {
            world_.firstContact = contacts_.front().point;
            world_.firstContactX = world_.chassis.position.x;
            world_.firstContactTime = world_.time;
        }
        if (deepest <= slop || pass >= config_.positionIterations)
            return;

        std::fill(deltas.begin(), deltas.end(), Delta{});
        for (const auto& k : contacts_) {
            auto& d = deltas[static_cast<std::size_t>(k.body)];
            const double current = k.separation + dot(d.position + cross(d.angle, k.arm), k.normal);
            if (current >= -slop)
                continue;
            const bool chassis = k.body == 0;
            const auto& wm = chassis ? CarModel::Wheel{} : model_.wheels[static_cast<std::size_t>(k.body - 1)];
            const double im = chassis ? 1.0 / model_.mass : 1.0 / wm.mass;
            const double ii = chassis ? 1.0 / model_.inertia : 1.0 / wm.inertia;
            const double rn = cross(k.arm, k.normal);
            const double correction = std::min(-0.5 * slop - current, maxCorrection);
            const double impulse = correction / (im + ii * rn * rn);
            const Vec2 P = impulse * k.normal;
            BodyState& b = chassis ? world_.chassis : world_.wheels[static_cast<std::size_t>(k.body - 1)].body;
            b.position += im * P;
            b.angle += ii * cross(k.arm, P);
            d.position += im * P;
            d.angle += ii * cross(k.arm, P);
        }
    }
}

void Simulation::check_divergence()
{
    const double bound = config_.worldBound;
    bool ok = finite_state(world_.chassis, bound);
    for (const auto& w : world_.wheels)
        ok = ok && finite_state(w.body, bound);
    if (!ok)
        world_.diverged = true;
}

void Simulation::step()
{
    if (world_.diverged)
        return;
    const double h = config_.dt;
    const double g = config_.gravity;

    world_.chassis.velocity.y -= g * h;
    for (auto& w : world_.wheels)
        w.body.velocity.y -= g * h;

    double reach = 0.0;
    reach = std::max(reach, length(world_.chassis.velocity));
    double hullRadius = 0.0;
    for (const auto& v : model_.hull)
        hullRadius = std::max(hullRadius, length(v));
    reach = std::max(reach, length(world_.chassis.velocity) + std::abs(world_.chassis.angularVelocity) * hullRadius);
    for (std::size_t j = 0; j < world_.wheels.size(); ++j) {
        const auto& b = world_.wheels[j].body;
        reach = std::max(reach, length(b.velocity));
    }
    const double margin = config_.contactSlop + reach * h;
    if (std::isfinite(margin))
        detect(margin, contacts_);
    else
        contacts_.clear();

    solve_velocities(h);

    auto integrate = [h](BodyState& b) {
        b.position += h * b.velocity;
        b.angle += h * b.angularVelocity;
    };
    integrate(world_.chassis);
    for (auto& w : world_.wheels)
        integrate(w.body);

    world_.time = static_cast<double>(++world_.stepIndex) * h;

    check_divergence();
    if (world_.diverged)
        return;

    project_positions();

    for (std::size_t j = 0; j < world_.wheels.size(); ++j) {
        const Vec2 mount = world_.chassis.position + rotate(model_.wheels[j].anchor, world_.chassis.angle);
        world_.wheels[j].suspensionExtension = length(world_.wheels[j].body.position - mount);
    }
    check_divergence();
}

WorldState step(const CarModel& model, const Course& course, const SimConfig& config, const WorldState& world,
                double dt)
{
    if (dt != config.dt)
        throw ValidationError("step: dt must equal the configured fixed timestep");
    Simulation sim(model, course, config, world);
    sim.step();
    return sim.state();
}

double SimulationResult::selection_fitness() const
{
    return fitness ? *fitness : -std::numeric_limits<double>::infinity();
}

TrajectorySample sample_of(const WorldState& world)
{
    TrajectorySample s;
    s.t = world.time;
    s.bodyX = world.chassis.position.x;
    s.bodyY = world.chassis.position.y;
    s.angle = world.chassis.angle;
    for (const auto& w : world.wheels) {
        s.wheelAngles.push_back(w.body.angle);
        s.wheelPositions.push_back(w.body.position);
    }
    return s;
}

SimulationResult simulate(const CarBlueprint& blueprint, const Course& course, const SimConfig& config,
                          const Descriptors& descriptors)
{
    course.validate();
    config.validate();
    Simulation sim(make_model(blueprint, config), course, config);

    SimulationResult result;
    result.descriptors = descriptors;
    const int steps = config.step_count();
    const int sampleEvery = std::max(1, static_cast<int>(std::lround(1.0 / (config.sampleRate * config.dt))));
    result.trajectory.push_back(sample_of(sim.state()));
    for (int i = 1; i <= steps; ++i) {
        sim.step();
        const auto& st = sim.state();
        if (st.diverged)
            break;
        result.maxPenetration = std::max(result.maxPenetration, st.penetration);
        if (i % sampleEvery == 0 || i == steps)
            result.trajectory.push_back(sample_of(st));
    }

    const auto& st = sim.state();
    result.diverged = st.diverged;
    result.finalX = st.chassis.position.x;
    result.firstContactX = st.firstContactX.value_or(result.finalX);
    result.firstContactTime = st.firstContactTime;
    if (!result.diverged)
        result.fitness = result.finalX - result.firstContactX;
    return result;
}

SimulationResult evaluate_design(const CarGenome& genome, const DesignConfig& design, const Course& course,
                                 const SimConfig& config)
{
    const auto bp = decode(genome, design);
    return simulate(bp, course, config, describe(genome, bp));
}

} // namespace cardesign
