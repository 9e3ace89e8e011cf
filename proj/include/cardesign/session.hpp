#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cardesign/archive.hpp"
#include "cardesign/course.hpp"
#include "cardesign/evolve.hpp"
#include "cardesign/genome.hpp"
#include "cardesign/physics.hpp"
#include "cardesign/random.hpp"
#include "cardesign/session_log.hpp"

namespace cardesign {

enum class SessionMode { Field, Lab };
std::string_view to_string(SessionMode mode);

enum class ViewId { Live, Editor, Control, SpeedElites, WheelElites, GeometryElites };
std::string_view to_string(ViewId view);
std::optional<ViewId> parse_view_id(std::string_view text);
/// Recommendation panels: the control view and the three elite views.
bool is_insight(ViewId view);
std::optional<DescriptorKind> elite_kind(ViewId view);

inline constexpr std::string_view kInsightsLabel1 = "Insights 1";
inline constexpr std::string_view kInsightsLabel2 = "Insights 2";

struct SessionConfig {
    SessionMode mode = SessionMode::Field;
    DesignConfig design;
    std::uint64_t seed = 0;
    std::vector<ViewId> views{ViewId::Live,        ViewId::Editor,      ViewId::Control,
                              ViewId::SpeedElites, ViewId::WheelElites, ViewId::GeometryElites};
    std::optional<int> generationCap;
    bool anonymizeViews = false;
    EvolutionConfig evolution;
    SimConfig sim;
    /// Physical upper bound on fitness used when cleaning corpora.
    double maxPlausibleFitness = 2000.0;

    /// Fixed course, 7 vertices, 4 wheels, 40 generations, control vs geometry elites.
    static SessionConfig lab(std::uint64_t seed);
    static SessionConfig field(std::uint64_t seed, const DesignConfig& design = {});

    void validate() const;
};

nlohmann::json to_json(const SessionConfig& config);
SessionConfig session_config_from_json(const nlohmann::json& j);

// User actions. Views are addressed by ViewId; external payloads use view keys.
enum class SelectKind { Test, Use };
std::string_view to_string(SelectKind kind);

struct OpenView { ViewId view; };
struct Select { ViewId view; DesignRef design; SelectKind kind; };
struct Edit { ViewId view; DesignRef design; };
struct SetGene { int gene; double value; };
struct InjectEditor {};
struct ImportDesign { CarGenome genome; };
struct Advance {};
struct SetAutoAdvance { bool enabled; };
struct EndSession {};

using Action = std::variant<OpenView, Select, Edit, SetGene, InjectEditor, ImportDesign, Advance, SetAutoAdvance,
                            EndSession>;

struct ActionResult {
    bool accepted = true;
    std::string reason;
};

struct EditorState {
    std::optional<DesignRef> source;
    std::optional<CarGenome> genome;
};

/// One design session. Single owner; not thread-safe.
class Session {
public:
    using LineSink = std::function<void(const std::string&)>;

    /// Creates generation 1 and evaluates it at t = 0. The sink receives the
    /// header and every event line as soon as it is produced.
    explicit Session(SessionConfig config, LineSink sink = {});

    ActionResult apply(const Action& action, double t);
    void set_sink(LineSink sink) { sink_ = std::move(sink); }

    const SessionConfig& config() const { return config_; }
    const Course& course() const { return course_; }
    const SessionLog& log() const { return log_; }

    const Generation& current() const { return generations_.back(); }
    const std::vector<Generation>& generations() const { return generations_; }
    const HistoryStore& history() const { return history_; }
    const EliteArchive& archive(DescriptorKind kind) const;

    /// 12 display slots for a view (Live: current generation; elites: bins; Control: sample).
    std::vector<std::optional<DesignRef>> view_candidates(ViewId view) const;
    bool in_view(ViewId view, DesignRef ref) const;

    ViewId current_view() const { return currentView_; }
    const std::vector<ViewId>& nav_order() const { return navOrder_; }
    /// Identifier used in events and payloads; anonymized insight labels in lab mode.
    std::string view_key(ViewId view) const;
    std::optional<ViewId> resolve_view(std::string_view key) const;
    /// Sealed key -> view mapping (only non-trivial in lab mode).
    std::map<std::string, ViewId> sealed_mapping() const;

    const EditorState& editor() const { return editor_; }
    bool test_marked(DesignRef ref) const;
    bool use_marked(DesignRef ref) const;
    const CarGenome* find_genome(DesignRef ref) const;
    std::optional<double> find_fitness(DesignRef ref) const;

    bool auto_advance() const { return autoAdvance_; }
    bool ended() const { return ended_; }
    bool at_cap() const;
    double last_time() const { return lastTime_; }
    std::optional<BestDesign> best() const { return best_ever(generations_); }

    nlohmann::json action_to_json(const Action& action) const;
    /// Throws ParseError on malformed or unknown-view actions.
    Action action_from_json(const nlohmann::json& j) const;

private:
    struct PendingInjection {
        std::optional<DesignRef> ref;  // set for Test marks
        CarGenome genome;
        Origin origin;
    };

    void emit(nlohmann::json event);
    nlohmann::json event(double t, std::string_view type) const;
    void evaluate_current(double t);
    void switch_view(ViewId view, double t, bool derived);
    ActionResult reject(const Action& action, double t, std::string reason);

    SessionConfig config_;
    Course course_;
    LineSink sink_;
    SessionLog log_;

    Rng evolutionRng_;
    Rng controlRng_;

    std::vector<ViewId> navOrder_;
    std::map<ViewId, std::string> labels_;

    std::vector<Generation> generations_;
    HistoryStore history_;
    std::vector<EliteArchive> archives_;
    std::vector<DesignRef> controlView_;

    std::vector<PendingInjection> pending_;
    std::vector<DesignRef> extraUse_;
    EditorState editor_;

    ViewId currentView_ = ViewId::Live;
    bool autoAdvance_ = true;
    bool ended_ = false;
    double lastTime_ = 0.0;
};

} // namespace cardesign
