// Serial reference vs OpenMP kernels for generation evaluation and KDE.
#include <benchmark/benchmark.h>

#include <vector>

#include "cardesign/evaluate.hpp"
#include "cardesign/random.hpp"
#include "cardesign/stats.hpp"

using namespace cardesign;

namespace {

struct Generation {
    DesignConfig design;
    Course course;
    SimConfig sim;
    std::vector<CarGenome> genomes;

    Generation() : course(build_course(design.courseId))
    {
        sim.duration = 5.0;
        Rng rng(42);
        for (int i = 0; i < 12; ++i)
            genomes.push_back(random_genome(rng, design));
    }
};

const Generation& generation()
{
    static const Generation g;
    return g;
}

std::vector<double> kde_samples(std::size_t n)
{
    Rng rng(7);
    std::vector<double> s(n);
    for (auto& x : s)
        x = rng.normal();
    return s;
}

std::vector<double> kde_grid(std::size_t n)
{
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = -5.0 + 10.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

void BM_EvaluateSerial(benchmark::State& state)
{
    const auto& g = generation();
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate_serial(g.genomes, g.design, g.course, g.sim));
}

void BM_EvaluateParallel(benchmark::State& state)
{
    const auto& g = generation();
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate_parallel(g.genomes, g.design, g.course, g.sim));
}

void BM_KdeSerial(benchmark::State& state)
{
    const auto samples = kde_samples(static_cast<std::size_t>(state.range(0)));
    const auto grid = kde_grid(512);
    for (auto _ : state)
        benchmark::DoNotOptimize(kde_serial(samples, grid));
}

void BM_KdeParallel(benchmark::State& state)
{
    const auto samples = kde_samples(static_cast<std::size_t>(state.range(0)));
    const auto grid = kde_grid(512);
    for (auto _ : state)
        benchmark::DoNotOptimize(kde_parallel(samples, grid));
}

} // namespace

BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KdeSerial)->Arg(200)->Arg(2000);
BENCHMARK(BM_KdeParallel)->Arg(200)->Arg(2000);

BENCHMARK_MAIN();
