#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cardesign/genome.hpp"
#include "cardesign/physics.hpp"
#include "cardesign/random.hpp"

namespace cardesign {

inline constexpr std::size_t kGenerationSize = 12;

/// Stable identifier of a design evaluated in generation `generation` at `slot`.
struct DesignRef {
    std::uint32_t generation = 0;
    std::uint32_t slot = 0;

    std::string str() const;
    static DesignRef parse(std::string_view text);
    friend auto operator<=>(const DesignRef&, const DesignRef&) = default;
};

enum class Origin { Evolved, UserInjected, ElitePick };
std::string_view to_string(Origin origin);
Origin parse_origin(std::string_view text);

struct Candidate {
    DesignRef ref;
    CarGenome genome;
    Origin origin = Origin::Evolved;
};

struct SelectionFlags {
    std::vector<bool> test;
    std::vector<bool> use;

    static SelectionFlags defaults(std::size_t n) { return {std::vector<bool>(n, false), std::vector<bool>(n, true)}; }
};

struct Generation {
    int index = 1;
    std::vector<Candidate> designs;
    SelectionFlags flags;
    std::optional<std::vector<SimulationResult>> results;

    void validate() const;
};

struct EvolutionConfig {
    int tournamentSize = 3;
    MutationParams mutation;

    friend bool operator==(const EvolutionConfig& a, const EvolutionConfig& b)
    {
        return a.tournamentSize == b.tournamentSize && a.mutation.rate == b.mutation.rate &&
               a.mutation.scale == b.mutation.scale;
    }
};

Generation init_generation(const DesignConfig& config, Rng& rng);

/// A design queued for verbatim inclusion in the next generation.
struct Injection {
    CarGenome genome;
    Origin origin = Origin::UserInjected;
};

/// Extra breeding-pool member from outside the current generation (archive pick marked "use").
struct BreedingCandidate {
    CarGenome genome;
    double fitness = 0.0;
};

struct NextGeneration {
    Generation generation;
    std::size_t droppedInjections = 0;  // over-injection beyond 12
};

/// Injections first (the 12 most recent when over-full), remaining slots bred by
/// k-tournament over the use-flagged pool, crossover then mutation.
NextGeneration next_generation(const Generation& current, const SelectionFlags& flags,
                               std::span<const Injection> injected, std::span<const BreedingCandidate> extraPool,
                               Rng& rng, const DesignConfig& design, const EvolutionConfig& evolution);

struct BestDesign {
    DesignRef ref;
    CarGenome genome;
    double fitness = 0.0;
};

/// Highest-fitness non-diverged design across all evaluated generations.
std::optional<BestDesign> best_ever(std::span<const Generation> history);

} // namespace cardesign
