#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "cardesign/descriptors.hpp"
#include "cardesign/evolve.hpp"
#include "cardesign/random.hpp"

namespace cardesign {

inline constexpr int kArchiveBins = 12;

std::string_view to_string(DescriptorKind kind);

/// floor(nBins (value - lo) / (hi - lo)), clamped to [0, nBins - 1].
int bin_index(double value, double lo, double hi, int nBins = kArchiveBins);

enum class InsertOutcome { InsertedEmpty, Replaced, Rejected };
std::string_view to_string(InsertOutcome outcome);

struct Elite {
    DesignRef ref;
    double fitness = 0.0;
    double descriptor = 0.0;
    friend bool operator==(const Elite&, const Elite&) = default;
};

/// One-dimensional MAP-Elites archive: one elite per descriptor bin.
class EliteArchive {
public:
    EliteArchive(DescriptorKind kind, Interval range);

    DescriptorKind kind() const { return kind_; }
    Interval range() const { return range_; }

    /// Empty cell: insert. Occupied: replace only on strictly higher fitness.
    InsertOutcome insert(DesignRef ref, double fitness, double descriptor);

    const std::array<std::optional<Elite>, kArchiveBins>& cells() const { return cells_; }
    std::size_t coverage() const;
    bool contains(DesignRef ref) const;

private:
    DescriptorKind kind_;
    Interval range_;
    std::array<std::optional<Elite>, kArchiveBins> cells_;
};

/// Speed and Wheel ranges follow the gene bounds; Geometry spans [0, max vertex radius].
Interval descriptor_range(DescriptorKind kind, const DesignConfig& config);

struct HistoryEntry {
    DesignRef ref;
    CarGenome genome;
    double fitness = 0.0;
    Descriptors descriptors;
    TrajectorySample finalPose;
};

/// Append-only record of every non-diverged design tested in a session.
class HistoryStore {
public:
    std::size_t append(HistoryEntry entry);
    std::size_t size() const { return entries_.size(); }
    const HistoryEntry& operator[](std::size_t i) const { return entries_[i]; }
    const HistoryEntry* find(DesignRef ref) const;
    const std::vector<HistoryEntry>& entries() const { return entries_; }

private:
    std::vector<HistoryEntry> entries_;
    std::map<DesignRef, std::size_t> index_;
};

/// Uniform sample without replacement of min(k, |history|) refs, in draw order.
std::vector<DesignRef> control_sample(const HistoryStore& history, std::size_t k, Rng& rng);

} // namespace cardesign
