#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardesign/metrics.hpp"
#include "cardesign/stats.hpp"

namespace cardesign {

inline constexpr int kReportSchemaVersion = 1;

/// Subset of a corpus. Empty lists match everything.
struct SessionFilter {
    std::vector<std::string> interactionGroups;
    std::vector<std::string> viewGroups;
    std::vector<std::string> modes;
    std::vector<std::string> courses;

    bool matches(const SessionMetrics& m) const;
};

struct GroupComparison {
    std::string name;
    std::string metric;
    std::string labelA = "A", labelB = "B";
    SessionFilter a, b;
};

struct Correlation {
    std::string name;
    std::string x, y;
    SessionFilter filter;
};

struct CorrelationComparison {
    std::string name;
    std::string first, second;  // Correlation names
};

struct KdeSeries {
    std::string name;
    std::string metric;
    std::vector<std::pair<std::string, SessionFilter>> groups;
    std::size_t points = 256;
    std::optional<double> bandwidth;
};

struct AnalysisPlan {
    double alpha = 0.01;
    /// Bonferroni family size; defaults to the number of group comparisons.
    std::optional<int> family;
    std::size_t minGroupSize = 3;
    std::optional<double> maxPlausibleFitness;
    std::size_t exactThreshold = 20;
    std::vector<GroupComparison> comparisons;
    std::vector<Correlation> correlations;
    std::vector<CorrelationComparison> correlationComparisons;
    std::vector<KdeSeries> kde;

    int family_size() const;
    double adjusted_alpha() const;
};

AnalysisPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnalysisPlan& plan);

/// Group comparisons, correlations and correlation comparisons for the grouping
/// and improvement questions: interaction vs none, editor-only vs editor+insights,
/// insight viewers vs non-viewers, initial fitness / selections / insight time vs improvement.
AnalysisPlan default_plan();

struct GroupSummary {
    std::size_t n = 0;
    double mean = 0.0, median = 0.0;
};

struct ComparisonOutcome {
    std::string name, metric, labelA, labelB;
    std::optional<std::string> skipped;
    GroupSummary a, b;
    TestResult test;
};

struct CorrelationOutcome {
    std::string name, x, y;
    std::optional<std::string> skipped;
    std::size_t n = 0;
    TestResult test;
};

struct CorrelationComparisonOutcome {
    std::string name, first, second;
    std::optional<std::string> skipped;
    TestResult test;
};

struct KdeOutcome {
    std::string name, metric;
    std::vector<double> grid;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> densities;  // per label; empty when skipped
    std::vector<std::optional<double>> bandwidths;
    std::vector<std::size_t> sizes;
};

struct AnalysisReport {
    double alpha = 0.0, adjustedAlpha = 0.0;
    int family = 0;
    std::size_t sessions = 0;
    std::vector<std::string> dropped;
    std::vector<ComparisonOutcome> comparisons;
    std::vector<CorrelationOutcome> correlations;
    std::vector<CorrelationComparisonOutcome> correlationComparisons;
    std::vector<KdeOutcome> kde;

    std::size_t significant_count() const;
};

/// Cleans the corpus, then runs every plan entry (fanned out across threads,
/// merged in plan order).
AnalysisReport analyze_corpus(std::vector<SessionMetrics> corpus, const AnalysisPlan& plan);

nlohmann::json to_json(const AnalysisReport& report);
std::string to_text(const AnalysisReport& report);

/// Reads every *.json metrics record (object or array of objects) in a directory,
/// in filename order. Records without a session id take the file stem.
std::vector<SessionMetrics> load_corpus(const std::filesystem::path& dir);

/// Writes report.json, report.txt and one kde_<name>.csv per KDE series.
void write_report(const AnalysisReport& report, const std::filesystem::path& outDir);

} // namespace cardesign
