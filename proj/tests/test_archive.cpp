#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "cardesign/archive.hpp"
#include "cardesign/descriptors.hpp"
#include "cardesign/error.hpp"
#include "support.hpp"

using namespace cardesign;

TEST_CASE("bin index endpoints and midpoint")
{
    CHECK(bin_index(0.0, 0.0, 1.0) == 0);
    CHECK(bin_index(1.0, 0.0, 1.0) == 11);
    CHECK(bin_index(0.5, 0.0, 1.0) == 6);
    CHECK(bin_index(-20.0, -20.0, 20.0) == 0);
    CHECK(bin_index(20.0, -20.0, 20.0) == 11);
    CHECK(bin_index(0.0, -20.0, 20.0) == 6);
    CHECK(bin_index(-1e9, 0.0, 1.0) == 0);
    CHECK(bin_index(1e9, 0.0, 1.0) == 11);
    CHECK_THROWS_AS(bin_index(0.0, 1.0, 1.0), ValidationError);
}

TEST_CASE("bin index agrees with an interval-membership oracle")
{
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.uniform(-3.0, 7.0);
        int expect = 0;
        for (int b = 0; b < kArchiveBins; ++b)
            if (v >= -3.0 + 10.0 * b / kArchiveBins)
                expect = b;
        CHECK(bin_index(v, -3.0, 7.0) == expect);
    }
}

TEST_CASE("archive insert rules")
{
    EliteArchive a(DescriptorKind::Speed, {0.0, 12.0});
    CHECK(a.insert({1, 0}, 10.0, 0.5) == InsertOutcome::InsertedEmpty);
    CHECK(a.insert({1, 1}, 10.0, 0.7) == InsertOutcome::Rejected);  // tie
    CHECK(a.insert({1, 2}, 8.0, 0.1) == InsertOutcome::Rejected);
    CHECK(a.cells()[0]->ref == DesignRef{1, 0});
    CHECK(a.insert({1, 3}, 10.5, 0.9) == InsertOutcome::Replaced);
    CHECK(a.cells()[0]->ref == DesignRef{1, 3});
    CHECK(a.coverage() == 1);
    CHECK(a.contains({1, 3}));
    CHECK_FALSE(a.contains({1, 0}));
    CHECK_THROWS_AS(a.insert({1, 4}, NAN, 1.0), ValidationError);
}

TEST_CASE("random inserts match a brute-force per-bin max")
{
    for (auto kind : {DescriptorKind::Speed, DescriptorKind::Wheel, DescriptorKind::Geometry}) {
        DesignConfig dc;
        const Interval range = descriptor_range(kind, dc);
        EliteArchive archive(kind, range);
        Rng rng(static_cast<std::uint64_t>(kind) + 40);
        std::vector<std::pair<double, double>> seen;  // (fitness, descriptor)
        std::size_t prevCoverage = 0;
        for (int i = 0; i < 1000; ++i) {
            const double d = rng.uniform(range.lo - 0.1, range.hi + 0.1);
            // Coarse fitness so ties actually happen.
            const double f = std::round(rng.uniform(-50.0, 500.0) / 5.0) * 5.0;
            const auto before = archive.cells();
            archive.insert({static_cast<std::uint32_t>(i + 1), 0}, f, d);
            seen.emplace_back(f, d);

            for (int b = 0; b < kArchiveBins; ++b) {
                const auto& was = before[static_cast<std::size_t>(b)];
                const auto& now = archive.cells()[static_cast<std::size_t>(b)];
                if (was) {
                    REQUIRE(now.has_value());
                    CHECK(now->fitness >= was->fitness);
                }
            }
            CHECK(archive.coverage() >= prevCoverage);
            prevCoverage = archive.coverage();
        }
        // Oracle: first-seen maximum per bin.
        for (int b = 0; b < kArchiveBins; ++b) {
            std::optional<std::size_t> best;
            for (std::size_t i = 0; i < seen.size(); ++i) {
                if (bin_index(seen[i].second, range.lo, range.hi) != b)
                    continue;
                if (!best || seen[i].first > seen[*best].first)
                    best = i;
            }
            const auto& cell = archive.cells()[static_cast<std::size_t>(b)];
            CHECK(cell.has_value() == best.has_value());
            if (cell && best) {
                CHECK(cell->fitness == seen[*best].first);
                CHECK(cell->ref.generation == *best + 1);
            }
        }
    }
}

TEST_CASE("control sample")
{
    HistoryStore h;
    for (std::uint32_t i = 0; i < 5; ++i)
        h.append({{1, i}, {}, 0.0, {}, {}});
    Rng r1(9);
    auto all = control_sample(h, 12, r1);
    CHECK(all.size() == 5);
    std::set<DesignRef> uniq(all.begin(), all.end());
    CHECK(uniq.size() == 5);

    for (std::uint32_t i = 0; i < 40; ++i)
        h.append({{2, i}, {}, 0.0, {}, {}});
    for (int trial = 0; trial < 50; ++trial) {
        Rng r(static_cast<std::uint64_t>(trial));
        const auto s = control_sample(h, 12, r);
        CHECK(s.size() == 12);
        CHECK(std::set<DesignRef>(s.begin(), s.end()).size() == 12);
        for (const auto& ref : s)
            CHECK(h.find(ref) != nullptr);
    }
    Rng a(77), b(77);
    CHECK(control_sample(h, 12, a) == control_sample(h, 12, b));
}

TEST_CASE("control sample is roughly uniform")
{
    HistoryStore h;
    for (std::uint32_t i = 0; i < 24; ++i)
        h.append({{1, i}, {}, 0.0, {}, {}});
    std::vector<int> counts(24, 0);
    Rng rng(5);
    const int trials = 4000;
    for (int t = 0; t < trials; ++t)
        for (const auto& ref : control_sample(h, 12, rng))
            ++counts[ref.slot];
    // Each ref is included with probability 1/2.
    const double sd = std::sqrt(trials * 0.25);
    for (int c : counts)
        CHECK(std::abs(c - trials / 2.0) < 5.0 * sd);
}

TEST_CASE("history rejects duplicates")
{
    HistoryStore h;
    h.append({{1, 0}, {}, 0.0, {}, {}});
    CHECK_THROWS_AS(h.append({{1, 0}, {}, 1.0, {}, {}}), ValidationError);
    CHECK(h.find({1, 0}) != nullptr);
    CHECK(h.find({1, 1}) == nullptr);
}

TEST_CASE("descriptor values")
{
    CarGenome g;
    WheelGene w;
    w.motorTargetSpeed = 2.0;
    w.radius = 0.2;
    g.wheels.push_back(w);
    w.motorTargetSpeed = 4.0;
    w.radius = 0.4;
    g.wheels.push_back(w);
    CHECK(descriptor_speed(g) == 3.0);
    CHECK(descriptor_wheel(g) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("geometry descriptor of a regular polygon with centred mass is its radius")
{
    for (int nv : {3, 5, 8, 24}) {
        DesignConfig dc;
        dc.nv = nv;
        dc.nw = 1;
        CarGenome g;
        g.vertexRadii.assign(static_cast<std::size_t>(nv), 1.3);
        WheelGene w;
        w.mass = dc.bounds.wheelMass.lo;
        w.vertexGene = 1.0;
        g.wheels.push_back(w);
        auto bp = decode(g, dc);
        bp.centerOfMass = {0.0, 0.0};
        CHECK(descriptor_geometry(bp) == doctest::Approx(1.3).epsilon(1e-12));
    }
}

TEST_CASE("geometry descriptor matches a mean-distance oracle")
{
    Rng rng(3);
    DesignConfig dc;
    for (int i = 0; i < 50; ++i) {
        const auto g = random_genome(rng, dc);
        const auto bp = decode(g, dc);
        double sum = 0.0;
        for (const auto& v : bp.polygon)
            sum += std::hypot(v.x - bp.centerOfMass.x, v.y - bp.centerOfMass.y);
        CHECK(descriptor_geometry(bp) == doctest::Approx(sum / bp.polygon.size()).epsilon(1e-12));
        const auto d = describe(g, bp);
        CHECK(d.get(DescriptorKind::Speed) == descriptor_speed(g));
        CHECK(d.get(DescriptorKind::Wheel) == descriptor_wheel(g));
        CHECK(d.get(DescriptorKind::Geometry) == descriptor_geometry(bp));
    }
}
