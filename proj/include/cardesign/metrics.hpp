#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cardesign/session_log.hpp"

namespace cardesign {

inline constexpr int kMetricsSchemaVersion = 1;

enum class InteractionGroup { NoInteraction, EditorOnly, EditorAndInsights };
enum class ViewGroup { ViewedNoInsights, ViewedSomeInsight };
std::string_view to_string(InteractionGroup g);
std::string_view to_string(ViewGroup g);
InteractionGroup parse_interaction_group(std::string_view text);
ViewGroup parse_view_group(std::string_view text);

/// 100 (best - first) / first; nullopt when first <= 0 or either input is non-finite.
std::optional<double> improvement_pct(double bestFirstGen, double bestOverall);

/// Flat per-session record; the input schema of the analysis module.
/// View maps are keyed by the view keys used in the log (anonymized in lab mode).
struct SessionMetrics {
    std::string session;
    std::string mode;
    std::string course;
    std::uint64_t seed = 0;
    int dimensions = 0;
    int generations = 0;
    std::optional<double> initialFitness;
    std::optional<double> bestFitness;
    std::optional<double> improvementPct;
    double sessionLength = 0.0;
    std::map<std::string, int> selectionsPerView;
    std::map<std::string, double> timePerView;
    std::map<std::string, double> firstOpenTime;
    InteractionGroup interactionGroup = InteractionGroup::NoInteraction;
    ViewGroup viewGroup = ViewGroup::ViewedNoInsights;
    int totalSelections = 0;
    int insightSelections = 0;
    double insightTime = 0.0;
    int edits = 0;
    int injections = 0;
    double maxPlausibleFitness = 2000.0;

    friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;
};

/// Derives every metric from a recorded log. Throws ParseError with the
/// event index on events that lack required fields.
SessionMetrics compute_metrics(const SessionLog& log, std::string sessionId = {});

nlohmann::json to_json(const SessionMetrics& m);
SessionMetrics metrics_from_json(const nlohmann::json& j);

/// Named scalar lookup used by analysis plans: top-level numeric fields plus
/// "selectionsPerView.<key>", "timePerView.<key>" and "firstOpenTime.<key>".
std::optional<double> metric_value(const SessionMetrics& m, std::string_view name);

/// Drops sessions with non-finite values or fitness above the plausible bound.
/// `bound` overrides the per-record maxPlausibleFitness when set.
struct CleaningReport {
    std::vector<SessionMetrics> kept;
    std::vector<std::string> dropped;  // session ids
};
CleaningReport clean_corpus(std::vector<SessionMetrics> corpus, std::optional<double> bound = std::nullopt);

} // namespace cardesign
