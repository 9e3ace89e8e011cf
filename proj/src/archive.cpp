#include "cardesign/archive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cardesign/error.hpp"

namespace cardesign {

std::string_view to_string(DescriptorKind kind)
{
    switch (kind) {
    case DescriptorKind::Speed: return "Speed";
    case DescriptorKind::Wheel: return "Wheel";
    case DescriptorKind::Geometry: return "Geometry";
    }
    return "?";
}

std::string_view to_string(InsertOutcome outcome)
{
    switch (outcome) {
    case InsertOutcome::InsertedEmpty: return "insertedEmpty";
    case InsertOutcome::Replaced: return "replaced";
    case InsertOutcome::Rejected: return "rejected";
    }
    return "?";
}

int bin_index(double value, double lo, double hi, int nBins)
{
    if (!(lo < hi) || nBins < 1)
        throw ValidationError("bin_index requires lo < hi and nBins >= 1");
    const double scaled = std::floor(nBins * (value - lo) / (hi - lo));
    if (!(scaled > 0.0))
        return 0;
    if (scaled >= nBins - 1)
        return nBins - 1;
    return static_cast<int>(scaled);
}

EliteArchive::EliteArchive(DescriptorKind kind, Interval range) : kind_(kind), range_(range)
{
    if (!(range.lo < range.hi))
        throw ValidationError("archive range requires lo < hi");
}

InsertOutcome EliteArchive::insert(DesignRef ref, double fitness, double descriptor)
{
    if (!std::isfinite(fitness) || !std::isfinite(descriptor))
        throw ValidationError("archive_insert requires finite fitness and descriptor");
    auto& cell = cells_[static_cast<std::size_t>(bin_index(descriptor, range_.lo, range_.hi))];
    if (!cell) {
        cell = Elite{ref, fitness, descriptor};
        return InsertOutcome::InsertedEmpty;
    }
    if (fitness > cell->fitness) {
        cell = Elite{ref, fitness, descriptor};
        return InsertOutcome::Replaced;
    }
    return InsertOutcome::Rejected;
}

std::size_t EliteArchive::coverage() const
{
    return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const auto& c) { return c.has_value(); }));
}

bool EliteArchive::contains(DesignRef ref) const
{
    return std::any_of(cells_.begin(), cells_.end(), [&](const auto& c) { return c && c->ref == ref; });
}

Interval descriptor_range(DescriptorKind kind, const DesignConfig& config)
{
    switch (kind) {
    case DescriptorKind::Speed: return config.bounds.motorTargetSpeed;
    case DescriptorKind::Wheel: return config.bounds.wheelRadius;
    case DescriptorKind::Geometry: return {0.0, config.bounds.vertexRadius.hi};
    }
    return {};
}

std::size_t HistoryStore::append(HistoryEntry entry)
{
    if (index_.contains(entry.ref))
        throw ValidationError("design " + entry.ref.str() + " already recorded in history");
    const std::size_t i = entries_.size();
    index_.emplace(entry.ref, i);
    entries_.push_back(std::move(entry));
    return i;
}

const HistoryEntry* HistoryStore::find(DesignRef ref) const
{
    const auto it = index_.find(ref);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<DesignRef> control_sample(const HistoryStore& history, std::size_t k, Rng& rng)
{
    std::vector<std::size_t> idx(history.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(k, idx.size());
    std::vector<DesignRef> out;
    out.reserve(take);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
        out.push_back(history[idx[i]].ref);
    }
    return out;
}

} // namespace cardesign
