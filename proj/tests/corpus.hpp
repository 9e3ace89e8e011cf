#pragma once

#include <string>
#include <vector>

#include "cardesign/metrics.hpp"
#include "cardesign/random.hpp"

namespace cardesign::testing {

/// Synthetic metrics corpus: `perGroup` sessions without interaction and
/// `perGroup` interacting sessions (half editor-only, half editor+insights).
/// Interacting sessions get `effect` added to their improvement percentage.
inline std::vector<SessionMetrics> synthetic_corpus(std::uint64_t seed, std::size_t perGroup, double effect)
{
    Rng rng(seed);
    std::vector<SessionMetrics> out;
    for (std::size_t i = 0; i < 2 * perGroup; ++i) {
        const bool interacting = i >= perGroup;
        SessionMetrics m;
        m.session = "syn" + std::to_string(i);
        m.mode = "field";
        m.course = "HillClimb";
        m.seed = i;
        m.dimensions = 28;
        m.generations = 10;
        m.initialFitness = rng.uniform(50.0, 300.0);
        m.improvementPct = 60.0 + 25.0 * rng.normal() + (interacting ? effect : 0.0);
        m.bestFitness = *m.initialFitness * (1.0 + *m.improvementPct / 100.0);
        m.sessionLength = 300.0;
        if (interacting) {
            const bool insights = (i - perGroup) % 2 == 1;
            m.interactionGroup = insights ? InteractionGroup::EditorAndInsights : InteractionGroup::EditorOnly;
            m.viewGroup = insights || rng.coin() ? ViewGroup::ViewedSomeInsight : ViewGroup::ViewedNoInsights;
            m.totalSelections = 1 + static_cast<int>(rng.below(20));
            m.insightTime = m.viewGroup == ViewGroup::ViewedSomeInsight ? rng.uniform(0.0, 120.0) : 0.0;
        }
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace cardesign::testing
