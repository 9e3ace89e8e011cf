#include "cardesign/evolve.hpp"

#include <algorithm>
#include <charconv>

#include "cardesign/error.hpp"

namespace cardesign {

std::string DesignRef::str() const { return "g" + std::to_string(generation) + "." + std::to_string(slot); }

DesignRef DesignRef::parse(std::string_view text)
{
    const auto dot = text.find('.');
    if (text.size() < 4 || text[0] != 'g' || dot == std::string_view::npos)
        throw ParseError("bad design ref '" + std::string(text) + "'");
    DesignRef ref;
    const auto genText = text.substr(1, dot - 1);
    const auto slotText = text.substr(dot + 1);
    const auto r1 = std::from_chars(genText.data(), genText.data() + genText.size(), ref.generation);
    const auto r2 = std::from_chars(slotText.data(), slotText.data() + slotText.size(), ref.slot);
    if (r1.ec != std::errc{} || r1.ptr != genText.data() + genText.size() || r2.ec != std::errc{} ||
        r2.ptr != slotText.data() + slotText.size() || genText.empty() || slotText.empty())
        throw ParseError("bad design ref '" + std::string(text) + "'");
    return ref;
}

std::string_view to_string(Origin origin)
{
    switch (origin) {
    case Origin::Evolved: return "evolved";
    case Origin::UserInjected: return "userInjected";
    case Origin::ElitePick: return "elitePick";
    }
    return "?";
}

Origin parse_origin(std::string_view text)
{
    for (auto o : {Origin::Evolved, Origin::UserInjected, Origin::ElitePick})
        if (to_string(o) == text)
            return o;
    throw ParseError("bad origin '" + std::string(text) + "'");
}

void Generation::validate() const
{
    if (designs.size() != kGenerationSize)
        throw ValidationError("a generation holds exactly 12 designs");
    if (flags.test.size() != kGenerationSize || flags.use.size() != kGenerationSize)
        throw ValidationError("selection flags must cover all 12 designs");
    if (results && results->size() != kGenerationSize)
        throw ValidationError("results must align with the 12 designs");
}

Generation init_generation(const DesignConfig& config, Rng& rng)
{
    Generation gen;
    gen.index = 1;
    for (std::size_t i = 0; i < kGenerationSize; ++i)
        gen.designs.push_back({{1, static_cast<std::uint32_t>(i)}, random_genome(rng, config), Origin::Evolved});
    gen.flags = SelectionFlags::defaults(kGenerationSize);
    return gen;
}

namespace {

struct PoolEntry {
    const CarGenome* genome;
    double fitness;
};

const CarGenome& tournament(std::span<const PoolEntry> pool, int k, Rng& rng)
{
    const PoolEntry* best = nullptr;
    for (int i = 0; i < k; ++i) {
        const auto& e = pool[static_cast<std::size_t>(rng.below(pool.size()))];
        if (!best || e.fitness > best->fitness)
            best = &e;
    }
    return *best->genome;
}

} // namespace

NextGeneration next_generation(const Generation& current, const SelectionFlags& flags,
                               std::span<const Injection> injected, std::span<const BreedingCandidate> extraPool,
                               Rng& rng, const DesignConfig& design, const EvolutionConfig& evolution)
{
    current.validate();
    if (!current.results)
        throw ValidationError("next_generation requires an evaluated generation");
    if (flags.use.size() != kGenerationSize)
        throw ValidationError("selection flags must cover all 12 designs");
    if (evolution.tournamentSize < 1)
        throw ValidationError("tournament size must be positive");

    NextGeneration out;
    Generation& next = out.generation;
    next.index = current.index + 1;
    const auto nextIndex = static_cast<std::uint32_t>(next.index);

    std::size_t firstInjection = 0;
    if (injected.size() > kGenerationSize) {
        out.droppedInjections = injected.size() - kGenerationSize;
        firstInjection = out.droppedInjections;
    }
    for (std::size_t i = firstInjection; i < injected.size(); ++i) {
        validate(injected[i].genome, design);
        next.designs.push_back(
            {{nextIndex, static_cast<std::uint32_t>(next.designs.size())}, injected[i].genome, injected[i].origin});
    }

    std::vector<PoolEntry> pool;
    const auto& results = *current.results;
    for (std::size_t i = 0; i < kGenerationSize; ++i)
        if (flags.use[i])
            pool.push_back({&current.designs[i].genome, results[i].selection_fitness()});
    for (const auto& e : extraPool)
        pool.push_back({&e.genome, e.fitness});
    if (pool.empty())
        for (std::size_t i = 0; i < kGenerationSize; ++i)
            pool.push_back({&current.designs[i].genome, results[i].selection_fitness()});

    while (next.designs.size() < kGenerationSize) {
        const CarGenome& a = tournament(pool, evolution.tournamentSize, rng);
        const CarGenome& b = tournament(pool, evolution.tournamentSize, rng);
        CarGenome child = mutate(crossover(a, b, rng, design), rng, design, evolution.mutation);
        next.designs.push_back(
            {{nextIndex, static_cast<std::uint32_t>(next.designs.size())}, std::move(child), Origin::Evolved});
    }
    next.flags = SelectionFlags::defaults(kGenerationSize);
    return out;
}

std::optional<BestDesign> best_ever(std::span<const Generation> history)
{
    std::optional<BestDesign> best;
    for (const auto& gen : history) {
        if (!gen.results)
            continue;
        for (std::size_t i = 0; i < gen.designs.size(); ++i) {
            const auto& r = (*gen.results)[i];
            if (!r.fitness)
                continue;
            if (!best || *r.fitness > best->fitness)
                best = BestDesign{gen.designs[i].ref, gen.designs[i].genome, *r.fitness};
        }
    }
    return best;
}

} // namespace cardesign
