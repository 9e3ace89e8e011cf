#include "cardesign/evaluate.hpp"

#include <cstddef>

namespace cardesign {

std::vector<SimulationResult> evaluate_serial(std::span<const CarGenome> genomes, const DesignConfig& design,
                                              const Course& course, const SimConfig& config)
{
    std::vector<SimulationResult> results;
    results.reserve(genomes.size());
    for (const auto& g : genomes)
        results.push_back(evaluate_design(g, design, course, config));
    return results;
}

std::vector<SimulationResult> evaluate_parallel(std::span<const CarGenome> genomes, const DesignConfig& design,
                                                const Course& course, const SimConfig& config)
{
    // Validate up front: exceptions must not escape the parallel region.
    design.validate();
    course.validate();
    config.validate();
    std::vector<CarBlueprint> blueprints;
    blueprints.reserve(genomes.size());
    for (const auto& g : genomes)
        blueprints.push_back(decode(g, design));

    std::vector<SimulationResult> results(genomes.size());
    const auto n = static_cast<std::ptrdiff_t>(genomes.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        results[k] = simulate(blueprints[k], course, config, describe(genomes[k], blueprints[k]));
    }
    return results;
}

} // namespace cardesign
