#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "cardesign/error.hpp"
#include "cardesign/genome.hpp"
#include "support.hpp"

using namespace cardesign;

TEST_CASE("genome dimension over the whole legal grid")
{
    int checked = 0;
    for (int nv = kMinVertices; nv <= kMaxVertices; ++nv)
        for (int nw = kMinWheels; nw <= kMaxWheels; ++nw) {
            DesignConfig c;
            c.nv = nv;
            c.nw = nw;
            Rng rng(static_cast<std::uint64_t>(nv * 100 + nw));
            // Oracle: count the serialized genes of a real genome.
            const auto genes = to_genes(random_genome(rng, c));
            CHECK(genome_dimension(nv, nw) == static_cast<int>(genes.size()));
            CHECK(gene_intervals(c).size() == genes.size());
            ++checked;
        }
    CHECK(checked == 22 * 12);
    CHECK(genome_dimension(3, 1) == 9);
    CHECK(genome_dimension(24, 12) == 85);
    CHECK(genome_dimension(7, 4) == 28);
}

TEST_CASE("genome dimension rejects out-of-range sizes")
{
    CHECK_THROWS_AS(genome_dimension(2, 1), ValidationError);
    CHECK_THROWS_AS(genome_dimension(25, 1), ValidationError);
    CHECK_THROWS_AS(genome_dimension(3, 0), ValidationError);
    CHECK_THROWS_AS(genome_dimension(3, 13), ValidationError);
}

TEST_CASE("vertex angles")
{
    CHECK(vertex_angle(1, 8) == 0.0);
    CHECK(vertex_angle(2, 4) == -90.0);
    CHECK(vertex_angle(4, 6) == -180.0);
    CHECK_THROWS_AS(vertex_angle(0, 4), ValidationError);
    CHECK_THROWS_AS(vertex_angle(5, 4), ValidationError);
}

TEST_CASE("decode square places vertices on the axes")
{
    DesignConfig c;
    c.nv = 4;
    c.nw = 4;
    CarGenome g;
    g.bodyMass = 40.0;
    g.vertexRadii.assign(4, 1.5);
    for (int i = 0; i < 4; ++i) {
        WheelGene w;
        w.vertexGene = i + 1.5;
        w.mass = 7.0;
        g.wheels.push_back(w);
    }
    const auto bp = decode(g, c);
    REQUIRE(bp.polygon.size() == 4);
    const Vec2 expected[] = {{1.5, 0.0}, {0.0, -1.5}, {-1.5, 0.0}, {0.0, 1.5}};
    for (int i = 0; i < 4; ++i) {
        CHECK(bp.polygon[i].x == doctest::Approx(expected[i].x).epsilon(1e-12));
        CHECK(std::abs(bp.polygon[i].y - expected[i].y) < 1e-12);
    }
    CHECK(std::abs(bp.centerOfMass.x) < 1e-12);
    CHECK(std::abs(bp.centerOfMass.y) < 1e-12);
}

TEST_CASE("decode properties on random genomes")
{
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        DesignConfig c;
        c.nv = 3 + static_cast<int>(rng.below(22));
        c.nw = 1 + static_cast<int>(rng.below(12));
        const auto g = random_genome(rng, c);
        const auto bp = decode(g, c);

        // Polar round trip.
        for (int i = 0; i < c.nv; ++i) {
            const Vec2 p = bp.polygon[static_cast<std::size_t>(i)];
            const double r = std::hypot(p.x, p.y);
            CHECK(r == doctest::Approx(g.vertexRadii[static_cast<std::size_t>(i)]).epsilon(1e-9));
            double expectAngle = vertex_angle(i + 1, c.nv) * std::numbers::pi / 180.0;
            double diff = std::remainder(std::atan2(p.y, p.x) - expectAngle, 2.0 * std::numbers::pi);
            CHECK(std::abs(diff) < 1e-9);
        }

        // Mounts sit on their vertex.
        for (std::size_t w = 0; w < bp.wheelMounts.size(); ++w) {
            const int vi = g.wheels[w].vertex_index();
            CHECK(bp.wheelMounts[w].position == bp.polygon[static_cast<std::size_t>(vi - 1)]);
        }

        // Centre of mass oracle: shoelace centroid plus point-mass wheels.
        double a2 = 0.0, cx = 0.0, cy = 0.0;
        const std::size_t n = bp.polygon.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p = bp.polygon[i], q = bp.polygon[(i + 1) % n];
            const double cr = p.x * q.y - q.x * p.y;
            a2 += cr;
            cx += (p.x + q.x) * cr;
            cy += (p.y + q.y) * cr;
        }
        const double bx = cx / (3.0 * a2), by = cy / (3.0 * a2);
        double m = g.bodyMass, mx = g.bodyMass * bx, my = g.bodyMass * by;
        for (std::size_t w = 0; w < g.wheels.size(); ++w) {
            m += g.wheels[w].mass;
            mx += g.wheels[w].mass * bp.wheelMounts[w].position.x;
            my += g.wheels[w].mass * bp.wheelMounts[w].position.y;
        }
        CHECK(std::abs(bp.centerOfMass.x - mx / m) < 1e-9);
        CHECK(std::abs(bp.centerOfMass.y - my / m) < 1e-9);
        CHECK(std::abs(bp.bodyCentroid.x - bx) < 1e-9);
    }
}

TEST_CASE("vertex gene is floored and must stay below nv + 1")
{
    DesignConfig c;
    CarGenome g;
    Rng rng(3);
    g = random_genome(rng, c);
    g.wheels[0].vertexGene = 3.999;
    CHECK(g.wheels[0].vertex_index() == 3);
    CHECK(is_valid(g, c));
    g.wheels[0].vertexGene = c.nv + 1.0;
    CHECK_FALSE(is_valid(g, c));
    CHECK_THROWS_AS(validate(g, c), ValidationError);
    g.wheels[0].vertexGene = 0.99;
    CHECK_FALSE(is_valid(g, c));
}

TEST_CASE("random genomes are deterministic and in bounds")
{
    DesignConfig c;
    Rng a(99), b(99);
    CHECK(random_genome(a, c) == random_genome(b, c));

    Rng rng(5);
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < 1000; ++i) {
        const auto g = random_genome(rng, c);
        CHECK(is_valid(g, c));
        for (const auto& w : g.wheels) {
            lo = std::min(lo, w.motorTargetSpeed);
            hi = std::max(hi, w.motorTargetSpeed);
        }
    }
    CHECK(lo >= c.bounds.motorTargetSpeed.lo);
    CHECK(hi <= c.bounds.motorTargetSpeed.hi);
    CHECK(lo < 0.0);
    CHECK(hi > 0.0);
}

TEST_CASE("mutation with zero scale is the identity")
{
    DesignConfig c;
    Rng rng(8);
    const auto g = random_genome(rng, c);
    MutationParams p;
    p.scale = 0.0;
    p.rate = 1.0;
    CHECK(mutate(g, rng, c, p) == g);
}

TEST_CASE("crossover of identical parents returns the parent")
{
    DesignConfig c;
    Rng rng(9);
    const auto g = random_genome(rng, c);
    CHECK(crossover(g, g, rng, c) == g);
}

TEST_CASE("crossover picks every gene from one parent")
{
    DesignConfig c;
    Rng rng(10);
    const auto a = random_genome(rng, c), b = random_genome(rng, c);
    const auto ga = to_genes(a), gb = to_genes(b);
    int fromA = 0, total = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto child = to_genes(crossover(a, b, rng, c));
        for (std::size_t i = 0; i < child.size(); ++i) {
            CHECK((child[i] == ga[i] || child[i] == gb[i]));
            fromA += child[i] == ga[i];
            ++total;
        }
    }
    // Uniform crossover: about half from each parent (6 sigma band).
    const double sd = std::sqrt(total * 0.25);
    CHECK(std::abs(fromA - total / 2.0) < 6.0 * sd);
}

TEST_CASE("crossover rejects parents of another shape")
{
    DesignConfig c, other;
    other.nv = 5;
    Rng rng(12);
    const auto a = random_genome(rng, c);
    const auto b = random_genome(rng, other);
    CHECK_THROWS_AS(crossover(a, b, rng, c), ValidationError);
}

TEST_CASE("mutation rate matches 1/D within three binomial sigma")
{
    DesignConfig c;
    const int D = genome_dimension(c.nv, c.nw);
    Rng rng(21);
    const auto g = random_genome(rng, c);
    const auto base = to_genes(g);
    long changed = 0, total = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = mutate(g, rng, c);
        CHECK(is_valid(m, c));
        const auto genes = to_genes(m);
        for (std::size_t i = 0; i < genes.size(); ++i)
            changed += genes[i] != base[i];
        total += static_cast<long>(genes.size());
    }
    const double p = 1.0 / D;
    const double expected = p * static_cast<double>(total);
    const double sigma = std::sqrt(static_cast<double>(total) * p * (1.0 - p));
    CHECK(std::abs(static_cast<double>(changed) - expected) <= 3.0 * sigma);
}

TEST_CASE("variation is deterministic under a seed")
{
    DesignConfig c;
    Rng s(1);
    const auto a = random_genome(s, c), b = random_genome(s, c);
    Rng r1(77), r2(77);
    CHECK(mutate(crossover(a, b, r1, c), r1, c) == mutate(crossover(a, b, r2, c), r2, c));
}

TEST_CASE("gene vector round trip and length check")
{
    DesignConfig c;
    Rng rng(4);
    const auto g = random_genome(rng, c);
    CHECK(from_genes(to_genes(g), c) == g);
    auto genes = to_genes(g);
    genes.pop_back();
    CHECK_THROWS_AS(from_genes(genes, c), ValidationError);
}

TEST_CASE("design file round trip is exact")
{
    DesignConfig c;
    c.nv = 11;
    c.nw = 3;
    c.courseId = CourseId::Bumps;
    c.bounds.motorTargetSpeed = {-12.5, 17.25};
    Rng rng(6);
    const auto g = random_genome(rng, c);
    std::stringstream text;
    write_design(text, g, c);
    const auto file = read_design(text);
    CHECK(file.config == c);
    CHECK(file.genome == g);
}

TEST_CASE("malformed design files are rejected")
{
    std::istringstream empty("");
    CHECK_THROWS_AS(read_design(empty), ParseError);
    std::istringstream wrongMagic("not-a-design 1\n");
    CHECK_THROWS(read_design(wrongMagic));
    std::istringstream future("cardesign-design 99\n");
    CHECK_THROWS_AS(read_design(future), VersionError);
}
