#include "cardesign/session.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cardesign/error.hpp"
#include "cardesign/evaluate.hpp"

namespace cardesign {

using nlohmann::json;

namespace {

constexpr std::uint64_t kEvolutionStream = 1;
constexpr std::uint64_t kControlStream = 2;
constexpr std::uint64_t kLayoutStream = 3;

constexpr DescriptorKind kKinds[] = {DescriptorKind::Speed, DescriptorKind::Wheel, DescriptorKind::Geometry};

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval interval_from(const json& j, Interval fallback)
{
    if (j.is_null())
        return fallback;
    if (!j.is_array() || j.size() != 2)
        throw ParseError("bound must be [min, max]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

} // namespace

std::string_view to_string(SessionMode mode) { return mode == SessionMode::Lab ? "lab" : "field"; }

std::string_view to_string(ViewId view)
{
    switch (view) {
    case ViewId::Live: return "Live";
    case ViewId::Editor: return "Editor";
    case ViewId::Control: return "Control";
    case ViewId::SpeedElites: return "SpeedElites";
    case ViewId::WheelElites: return "WheelElites";
    case ViewId::GeometryElites: return "GeometryElites";
    }
    return "?";
}

std::optional<ViewId> parse_view_id(std::string_view text)
{
    for (auto v : {ViewId::Live, ViewId::Editor, ViewId::Control, ViewId::SpeedElites, ViewId::WheelElites,
                   ViewId::GeometryElites})
        if (to_string(v) == text)
            return v;
    return std::nullopt;
}

bool is_insight(ViewId view) { return view != ViewId::Live && view != ViewId::Editor; }

std::optional<DescriptorKind> elite_kind(ViewId view)
{
    switch (view) {
    case ViewId::SpeedElites: return DescriptorKind::Speed;
    case ViewId::WheelElites: return DescriptorKind::Wheel;
    case ViewId::GeometryElites: return DescriptorKind::Geometry;
    default: return std::nullopt;
    }
}

std::string_view to_string(SelectKind kind) { return kind == SelectKind::Test ? "test" : "use"; }

SessionConfig SessionConfig::lab(std::uint64_t seed)
{
    SessionConfig c;
    c.mode = SessionMode::Lab;
    c.seed = seed;
    c.design.nv = 7;
    c.design.nw = 4;
    c.design.courseId = CourseId::HillClimb;
    c.views = {ViewId::Live, ViewId::Editor, ViewId::Control, ViewId::GeometryElites};
    c.generationCap = 40;
    c.anonymizeViews = true;
    return c;
}

SessionConfig SessionConfig::field(std::uint64_t seed, const DesignConfig& design)
{
    SessionConfig c;
    c.seed = seed;
    c.design = design;
    return c;
}

void SessionConfig::validate() const
{
    design.validate();
    sim.validate();
    if (evolution.tournamentSize < 1)
        throw ValidationError("tournament size must be positive");
    if (evolution.mutation.rate && !(*evolution.mutation.rate >= 0.0 && *evolution.mutation.rate <= 1.0))
        throw ValidationError("mutation rate must lie in [0, 1]");
    if (!(evolution.mutation.scale >= 0.0))
        throw ValidationError("mutation scale must be non-negative");
    if (generationCap && *generationCap < 1)
        throw ValidationError("generation cap must be at least 1");
    const std::set<ViewId> unique(views.begin(), views.end());
    if (unique.size() != views.size())
        throw ValidationError("view set contains duplicates");
    if (!unique.contains(ViewId::Live))
        throw ValidationError("view set must contain the Live view");
    if (mode == SessionMode::Lab) {
        const std::set<ViewId> labViews{ViewId::Live, ViewId::Editor, ViewId::Control, ViewId::GeometryElites};
        if (unique != labViews)
            throw ValidationError("lab mode requires exactly the Live, Editor, Control and GeometryElites views");
        if (generationCap != 40)
            throw ValidationError("lab mode requires a 40-generation cap");
        if (design.nv != 7 || design.nw != 4)
            throw ValidationError("lab mode requires nv = 7 and nw = 4");
        if (!anonymizeViews)
            throw ValidationError("lab mode requires anonymized insight views");
    }
    else if (anonymizeViews) {
        throw ValidationError("view anonymization is a lab-mode feature");
    }
}

json to_json(const SessionConfig& c)
{
    const auto& b = c.design.bounds;
    json views = json::array();
    for (auto v : c.views)
        views.push_back(to_string(v));
    return {
        {"mode", to_string(c.mode)},
        {"seed", c.seed},
        {"design",
         {{"nv", c.design.nv},
          {"nw", c.design.nw},
          {"course", to_string(c.design.courseId)},
          {"bounds",
           {{"bodyMass", interval_json(b.bodyMass)},
            {"vertexRadius", interval_json(b.vertexRadius)},
            {"wheelRadius", interval_json(b.wheelRadius)},
            {"wheelMass", interval_json(b.wheelMass)},
            {"motorTargetSpeed", interval_json(b.motorTargetSpeed)},
            {"suspensionFrequency", interval_json(b.suspensionFrequency)}}}}},
        {"views", views},
        {"generationCap", c.generationCap ? json(*c.generationCap) : json(nullptr)},
        {"anonymizeViews", c.anonymizeViews},
        {"evolution",
         {{"tournamentSize", c.evolution.tournamentSize},
          {"mutationRate", optional_number(c.evolution.mutation.rate)},
          {"mutationScale", c.evolution.mutation.scale}}},
        {"sim",
         {{"dt", c.sim.dt},
          {"duration", c.sim.duration},
          {"gravity", c.sim.gravity},
          {"dampingRatio", c.sim.dampingRatio},
          {"motorGain", c.sim.motorGain},
          {"maxMotorTorque", c.sim.maxMotorTorque},
          {"friction", c.sim.friction},
          {"contactSlop", c.sim.contactSlop},
          {"velocityIterations", c.sim.velocityIterations},
          {"positionIterations", c.sim.positionIterations},
          {"worldBound", c.sim.worldBound},
          {"sampleRate", c.sim.sampleRate}}},
        {"maxPlausibleFitness", c.maxPlausibleFitness},
    };
}

SessionConfig session_config_from_json(const json& j)
{
    if (!j.is_object())
        throw ParseError("session config must be an object");
    try {
        const std::uint64_t seed = j.value("seed", std::uint64_t{0});
        SessionConfig c = j.value("mode", std::string("field")) == "lab" ? SessionConfig::lab(seed)
                                                                         : SessionConfig::field(seed);
        if (j.contains("mode") && j["mode"] != "lab" && j["mode"] != "field")
            throw ParseError("mode must be 'field' or 'lab'");
        if (const auto it = j.find("design"); it != j.end()) {
            const auto& d = *it;
            c.design.nv = d.value("nv", c.design.nv);
            c.design.nw = d.value("nw", c.design.nw);
            if (d.contains("course"))
                c.design.courseId = parse_course_id(d["course"].get<std::string>());
            if (const auto bt = d.find("bounds"); bt != d.end()) {
                auto& b = c.design.bounds;
                b.bodyMass = interval_from(bt->value("bodyMass", json()), b.bodyMass);
                b.vertexRadius = interval_from(bt->value("vertexRadius", json()), b.vertexRadius);
                b.wheelRadius = interval_from(bt->value("wheelRadius", json()), b.wheelRadius);
                b.wheelMass = interval_from(bt->value("wheelMass", json()), b.wheelMass);
                b.motorTargetSpeed = interval_from(bt->value("motorTargetSpeed", json()), b.motorTargetSpeed);
                b.suspensionFrequency =
                    interval_from(bt->value("suspensionFrequency", json()), b.suspensionFrequency);
            }
        }
        if (const auto it = j.find("views"); it != j.end()) {
            c.views.clear();
            for (const auto& v : *it) {
                const auto id = parse_view_id(v.get<std::string>());
                if (!id)
                    throw ParseError("unknown view " + v.dump());
                c.views.push_back(*id);
            }
        }
        if (const auto it = j.find("generationCap"); it != j.end())
            c.generationCap = it->is_null() ? std::nullopt : std::optional<int>(it->get<int>());
        c.anonymizeViews = j.value("anonymizeViews", c.anonymizeViews);
        if (const auto it = j.find("evolution"); it != j.end()) {
            c.evolution.tournamentSize = it->value("tournamentSize", c.evolution.tournamentSize);
            if (it->contains("mutationRate"))
                c.evolution.mutation.rate = (*it)["mutationRate"].is_null()
                                                ? std::nullopt
                                                : std::optional<double>((*it)["mutationRate"].get<double>());
            c.evolution.mutation.scale = it->value("mutationScale", c.evolution.mutation.scale);
        }
        if (const auto it = j.find("sim"); it != j.end()) {
            auto& s = c.sim;
            s.dt = it->value("dt", s.dt);
            s.duration = it->value("duration", s.duration);
            s.gravity = it->value("gravity", s.gravity);
            s.dampingRatio = it->value("dampingRatio", s.dampingRatio);
            s.motorGain = it->value("motorGain", s.motorGain);
            s.maxMotorTorque = it->value("maxMotorTorque", s.maxMotorTorque);
            s.friction = it->value("friction", s.friction);
            s.contactSlop = it->value("contactSlop", s.contactSlop);
            s.velocityIterations = it->value("velocityIterations", s.velocityIterations);
            s.positionIterations = it->value("positionIterations", s.positionIterations);
            s.worldBound = it->value("worldBound", s.worldBound);
            s.sampleRate = it->value("sampleRate", s.sampleRate);
        }
        c.maxPlausibleFitness = j.value("maxPlausibleFitness", c.maxPlausibleFitness);
        return c;
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("bad session config: ") + e.what());
    }
}

Session::Session(SessionConfig config, LineSink sink)
    : config_(std::move(config)),
      course_(build_course(config_.design.courseId)),
      sink_(std::move(sink)),
      evolutionRng_(mix_seed(config_.seed, kEvolutionStream)),
      controlRng_(mix_seed(config_.seed, kControlStream))
{
    config_.validate();

    Rng layout(mix_seed(config_.seed, kLayoutStream));
    navOrder_ = config_.views;
    for (std::size_t i = navOrder_.size(); i > 1; --i)
        std::swap(navOrder_[i - 1], navOrder_[static_cast<std::size_t>(layout.below(i))]);
    for (auto v : config_.views)
        labels_[v] = std::string(to_string(v));
    if (config_.anonymizeViews) {
        const bool controlFirst = layout.coin();
        labels_[ViewId::Control] = std::string(controlFirst ? kInsightsLabel1 : kInsightsLabel2);
        labels_[ViewId::GeometryElites] = std::string(controlFirst ? kInsightsLabel2 : kInsightsLabel1);
    }

    for (auto kind : kKinds)
        archives_.emplace_back(kind, descriptor_range(kind, config_.design));

    json views = json::array();
    for (auto v : navOrder_)
        views.push_back(view_key(v));
    json sealed = json::object();
    for (const auto& [key, v] : sealed_mapping())
        sealed[key] = to_string(v);
    log_.header = {{"format", kLogFormat}, {"version", kLogVersion}, {"config", to_json(config_)},
                   {"views", views},       {"sealed", sealed}};
    if (sink_)
        sink_(log_.header_line());

    generations_.push_back(init_generation(config_.design, evolutionRng_));
    evaluate_current(0.0);
}

const EliteArchive& Session::archive(DescriptorKind kind) const
{
    return archives_[static_cast<std::size_t>(kind)];
}

std::string Session::view_key(ViewId view) const
{
    const auto it = labels_.find(view);
    return it != labels_.end() ? it->second : std::string(to_string(view));
}

std::optional<ViewId> Session::resolve_view(std::string_view key) const
{
    for (const auto& [v, label] : labels_)
        if (label == key)
            return v;
    return std::nullopt;
}

std::map<std::string, ViewId> Session::sealed_mapping() const
{
    std::map<std::string, ViewId> out;
    for (const auto& [v, label] : labels_)
        out[label] = v;
    return out;
}

bool Session::at_cap() const { return config_.generationCap && current().index >= *config_.generationCap; }

std::vector<std::optional<DesignRef>> Session::view_candidates(ViewId view) const
{
    std::vector<std::optional<DesignRef>> slots(kGenerationSize);
    if (view == ViewId::Live) {
        for (std::size_t i = 0; i < kGenerationSize; ++i)
            slots[i] = current().designs[i].ref;
    }
    else if (view == ViewId::Control) {
        for (std::size_t i = 0; i < controlView_.size(); ++i)
            slots[i] = controlView_[i];
    }
    else if (const auto kind = elite_kind(view)) {
        const auto& cells = archive(*kind).cells();
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (cells[i])
                slots[i] = cells[i]->ref;
    }
    return slots;
}

bool Session::in_view(ViewId view, DesignRef ref) const
{
    const auto slots = view_candidates(view);
    return std::any_of(slots.begin(), slots.end(), [&](const auto& s) { return s && *s == ref; });
}

bool Session::test_marked(DesignRef ref) const
{
    return std::any_of(pending_.begin(), pending_.end(), [&](const auto& p) { return p.ref == ref; });
}

bool Session::use_marked(DesignRef ref) const
{
    const auto& cur = current();
    if (ref.generation == static_cast<std::uint32_t>(cur.index) && ref.slot < kGenerationSize)
        return cur.flags.use[ref.slot];
    return std::find(extraUse_.begin(), extraUse_.end(), ref) != extraUse_.end();
}

const CarGenome* Session::find_genome(DesignRef ref) const
{
    if (ref.generation < 1 || ref.generation > generations_.size() || ref.slot >= kGenerationSize)
        return nullptr;
    return &generations_[ref.generation - 1].designs[ref.slot].genome;
}

std::optional<double> Session::find_fitness(DesignRef ref) const
{
    if (ref.generation < 1 || ref.generation > generations_.size() || ref.slot >= kGenerationSize)
        return std::nullopt;
    const auto& gen = generations_[ref.generation - 1];
    if (!gen.results)
        return std::nullopt;
    return (*gen.results)[ref.slot].fitness;
}

json Session::event(double t, std::string_view type) const { return {{"t", t}, {"type", type}}; }

void Session::emit(json ev)
{
    if (sink_)
        sink_(SessionLog::event_line(ev));
    log_.events.push_back(std::move(ev));
}

void Session::evaluate_current(double t)
{
    Generation& gen = generations_.back();
    std::vector<CarGenome> genomes;
    for (const auto& d : gen.designs)
        genomes.push_back(d.genome);
    gen.results = evaluate_parallel(genomes, config_.design, course_, config_.sim);

    json designs = json::array();
    std::optional<double> genBest;
    for (std::size_t i = 0; i < kGenerationSize; ++i) {
        const auto& d = gen.designs[i];
        const auto& r = (*gen.results)[i];
        designs.push_back({{"design", d.ref.str()}, {"origin", to_string(d.origin)}, {"fitness", optional_number(r.fitness)}});
        if (!r.fitness)
            continue;
        genBest = genBest ? std::max(*genBest, *r.fitness) : *r.fitness;
        history_.append({d.ref, d.genome, *r.fitness, r.descriptors, r.trajectory.back()});
        for (auto& a : archives_)
            a.insert(d.ref, *r.fitness, r.descriptors.get(a.kind()));
    }
    controlView_ = control_sample(history_, kGenerationSize, controlRng_);

    // Only the live generation keeps full trajectories.
    if (generations_.size() > 1) {
        auto& prev = generations_[generations_.size() - 2];
        if (prev.results)
            for (auto& r : *prev.results) {
                r.trajectory.clear();
                r.trajectory.shrink_to_fit();
            }
    }

    json coverage = json::object();
    for (const auto& a : archives_)
        coverage[std::string(to_string(a.kind()))] = a.coverage();
    const auto overall = best();
    auto ev = event(t, "GenerationEvaluated");
    ev["generation"] = gen.index;
    ev["designs"] = std::move(designs);
    ev["best"] = optional_number(genBest);
    ev["bestEver"] = overall ? json(overall->fitness) : json(nullptr);
    ev["coverage"] = std::move(coverage);
    emit(std::move(ev));
}

void Session::switch_view(ViewId view, double t, bool derived)
{
    auto closed = event(t, "ViewClosed");
    closed["view"] = view_key(currentView_);
    emit(std::move(closed));
    auto opened = event(t, "ViewOpened");
    opened["view"] = view_key(view);
    if (derived)
        opened["via"] = "edit";
    emit(std::move(opened));
    currentView_ = view;
}

ActionResult Session::reject(const Action& action, double t, std::string reason)
{
    auto ev = event(t, "ActionRejected");
    ev["action"] = action_to_json(action);
    ev["reason"] = reason;
    emit(std::move(ev));
    return {false, std::move(reason)};
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
} // namespace

ActionResult Session::apply(const Action& action, double t)
{
    if (ended_)
        return {false, "session has ended"};
    if (!std::isfinite(t) || t < lastTime_)
        throw ValidationError("action timestamps must be finite and non-decreasing");
    lastTime_ = t;

    auto configured = [this](ViewId v) {
        return std::find(config_.views.begin(), config_.views.end(), v) != config_.views.end();
    };

    return std::visit(
        overloaded{
            [&](const OpenView& a) -> ActionResult {
                if (!configured(a.view))
                    return reject(action, t, "view not available in this session");
                switch_view(a.view, t, false);
                return {};
            },
            [&](const Select& a) -> ActionResult {
                if (!configured(a.view) || a.view == ViewId::Editor)
                    return reject(action, t, "view does not offer selections");
                if (!in_view(a.view, a.design))
                    return reject(action, t, "stale design reference");
                bool value = false;
                if (a.kind == SelectKind::Test) {
                    const auto it = std::find_if(pending_.begin(), pending_.end(),
                                                 [&](const auto& p) { return p.ref == a.design; });
                    if (it != pending_.end()) {
                        pending_.erase(it);
                    }
                    else {
                        pending_.push_back({a.design, *find_genome(a.design),
                                            a.view == ViewId::Live ? Origin::UserInjected : Origin::ElitePick});
                        value = true;
                    }
                }
                else {
                    auto& cur = generations_.back();
                    if (a.design.generation == static_cast<std::uint32_t>(cur.index)) {
                        const auto slot = a.design.slot;
                        cur.flags.use[slot] = !cur.flags.use[slot];
                        value = cur.flags.use[slot];
                    }
                    else if (const auto it = std::find(extraUse_.begin(), extraUse_.end(), a.design);
                             it != extraUse_.end()) {
                        extraUse_.erase(it);
                    }
                    else {
                        extraUse_.push_back(a.design);
                        value = true;
                    }
                }
                auto ev = event(t, "SelectionMade");
                ev["view"] = view_key(a.view);
                ev["design"] = a.design.str();
                ev["kind"] = to_string(a.kind);
                ev["value"] = value;
                emit(std::move(ev));
                return {};
            },
            [&](const Edit& a) -> ActionResult {
                if (!configured(a.view) || a.view == ViewId::Editor)
                    return reject(action, t, "view does not offer editing");
                if (!in_view(a.view, a.design))
                    return reject(action, t, "stale design reference");
                editor_ = {a.design, *find_genome(a.design)};
                auto ev = event(t, "EditorLoaded");
                ev["view"] = view_key(a.view);
                ev["design"] = a.design.str();
                emit(std::move(ev));
                if (configured(ViewId::Editor) && currentView_ != ViewId::Editor)
                    switch_view(ViewId::Editor, t, true);
                return {};
            },
            [&](const SetGene& a) -> ActionResult {
                if (!editor_.genome)
                    return reject(action, t, "no design loaded in the editor");
                const auto bounds = gene_intervals(config_.design);
                if (a.gene < 0 || static_cast<std::size_t>(a.gene) >= bounds.size())
                    return reject(action, t, "gene index out of range");
                auto genes = to_genes(*editor_.genome);
                genes[static_cast<std::size_t>(a.gene)] = a.value;
                auto edited = from_genes(genes, config_.design);
                if (!is_valid(edited, config_.design))
                    return reject(action, t, "gene value outside its bounds");
                editor_.genome = std::move(edited);
                auto ev = event(t, "DesignEdited");
                ev["design"] = editor_.source ? json(editor_.source->str()) : json(nullptr);
                ev["deltas"] = json::array({{{"gene", a.gene}, {"value", a.value}}});
                emit(std::move(ev));
                return {};
            },
            [&](const InjectEditor&) -> ActionResult {
                if (!editor_.genome)
                    return reject(action, t, "no design loaded in the editor");
                pending_.push_back({std::nullopt, *editor_.genome, Origin::UserInjected});
                auto ev = event(t, "DesignInjected");
                ev["design"] = editor_.source ? json(editor_.source->str()) : json(nullptr);
                ev["genes"] = to_genes(*editor_.genome);
                emit(std::move(ev));
                return {};
            },
            [&](const ImportDesign& a) -> ActionResult {
                if (!is_valid(a.genome, config_.design))
                    return reject(action, t, "imported design does not fit this session's configuration");
                editor_ = {std::nullopt, a.genome};
                auto ev = event(t, "EditorImported");
                ev["genes"] = to_genes(a.genome);
                emit(std::move(ev));
                return {};
            },
            [&](const Advance&) -> ActionResult {
                if (at_cap())
                    return reject(action, t, "generation cap reached");
                std::vector<Injection> injections;
                for (const auto& p : pending_)
                    injections.push_back({p.genome, p.origin});
                std::vector<BreedingCandidate> extras;
                for (const auto& ref : extraUse_)
                    if (const auto* h = history_.find(ref))
                        extras.push_back({h->genome, h->fitness});
                const auto& cur = current();
                auto next = next_generation(cur, cur.flags, injections, extras, evolutionRng_, config_.design,
                                            config_.evolution);
                auto ev = event(t, "SimulationAdvanced");
                ev["generation"] = next.generation.index;
                emit(std::move(ev));
                if (next.droppedInjections > 0) {
                    auto overflow = event(t, "InjectionOverflow");
                    overflow["generation"] = next.generation.index;
                    overflow["dropped"] = next.droppedInjections;
                    emit(std::move(overflow));
                }
                pending_.clear();
                extraUse_.clear();
                generations_.push_back(std::move(next.generation));
                evaluate_current(t);
                return {};
            },
            [&](const SetAutoAdvance& a) -> ActionResult {
                autoAdvance_ = a.enabled;
                auto ev = event(t, "AutoAdvanceSet");
                ev["enabled"] = a.enabled;
                emit(std::move(ev));
                return {};
            },
            [&](const EndSession&) -> ActionResult {
                emit(event(t, "SessionEnded"));
                ended_ = true;
                return {};
            },
        },
        action);
}

json Session::action_to_json(const Action& action) const
{
    return std::visit(
        overloaded{
            [&](const OpenView& a) -> json { return {{"type", "openView"}, {"view", view_key(a.view)}}; },
            [&](const Select& a) -> json {
                return {{"type", "select"},
                        {"view", view_key(a.view)},
                        {"design", a.design.str()},
                        {"kind", to_string(a.kind)}};
            },
            [&](const Edit& a) -> json {
                return {{"type", "edit"}, {"view", view_key(a.view)}, {"design", a.design.str()}};
            },
            [&](const SetGene& a) -> json { return {{"type", "setGene"}, {"gene", a.gene}, {"value", a.value}}; },
            [&](const InjectEditor&) -> json { return {{"type", "injectEditor"}}; },
            [&](const ImportDesign& a) -> json { return {{"type", "importDesign"}, {"genes", to_genes(a.genome)}}; },
            [&](const Advance&) -> json { return {{"type", "advance"}}; },
            [&](const SetAutoAdvance& a) -> json { return {{"type", "setAutoAdvance"}, {"enabled", a.enabled}}; },
            [&](const EndSession&) -> json { return {{"type", "end"}}; },
        },
        action);
}

Action Session::action_from_json(const json& j) const
{
    try {
        if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
            throw ParseError("action must be an object with a string 'type'");
        const auto type = j["type"].get<std::string>();
        auto view = [&]() {
            const auto key = j.at("view").get<std::string>();
            const auto v = resolve_view(key);
            if (!v)
                throw ParseError("unknown view '" + key + "'");
            return *v;
        };
        auto design = [&]() { return DesignRef::parse(j.at("design").get<std::string>()); };
        if (type == "openView")
            return OpenView{view()};
        if (type == "select") {
            const auto kind = j.at("kind").get<std::string>();
            if (kind != "test" && kind != "use")
                throw ParseError("select kind must be 'test' or 'use'");
            return Select{view(), design(), kind == "test" ? SelectKind::Test : SelectKind::Use};
        }
        if (type == "edit")
            return Edit{view(), design()};
        if (type == "setGene")
            return SetGene{j.at("gene").get<int>(), j.at("value").get<double>()};
        if (type == "injectEditor")
            return InjectEditor{};
        if (type == "importDesign") {
            const auto genes = j.at("genes").get<std::vector<double>>();
            try {
                return ImportDesign{from_genes(genes, config_.design)};
            }
            catch (const ValidationError& e) {
                throw ParseError(e.what());
            }
        }
        if (type == "advance")
            return Advance{};
        if (type == "setAutoAdvance")
            return SetAutoAdvance{j.at("enabled").get<bool>()};
        if (type == "end")
            return EndSession{};
        throw ParseError("unknown action type '" + type + "'");
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("malformed action: ") + e.what());
    }
}

} // namespace cardesign
