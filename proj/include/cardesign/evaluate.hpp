#pragma once

#include <span>
#include <vector>

#include "cardesign/physics.hpp"

namespace cardesign {

// Batch evaluation of one generation. The OpenMP kernel runs one simulation
// per iteration and writes into a pre-sized result vector, so its output is
// identical to the serial reference regardless of thread count or schedule.

std::vector<SimulationResult> evaluate_serial(std::span<const CarGenome> genomes, const DesignConfig& design,
                                              const Course& course, const SimConfig& config);

std::vector<SimulationResult> evaluate_parallel(std::span<const CarGenome> genomes, const DesignConfig& design,
                                                const Course& course, const SimConfig& config);

} // namespace cardesign
