#include "cardesign/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cardesign/error.hpp"
#include "cardesign/genome.hpp"
#include "cardesign/session.hpp"

namespace cardesign {

using nlohmann::json;

std::string_view to_string(InteractionGroup g)
{
    switch (g) {
    case InteractionGroup::NoInteraction: return "noInteraction";
    case InteractionGroup::EditorOnly: return "editorOnly";
    case InteractionGroup::EditorAndInsights: return "editorAndInsights";
    }
    return "?";
}

std::string_view to_string(ViewGroup g)
{
    return g == ViewGroup::ViewedNoInsights ? "viewedNoInsights" : "viewedSomeInsight";
}

InteractionGroup parse_interaction_group(std::string_view text)
{
    for (auto g : {InteractionGroup::NoInteraction, InteractionGroup::EditorOnly, InteractionGroup::EditorAndInsights})
        if (to_string(g) == text)
            return g;
    throw ParseError("unknown interaction group '" + std::string(text) + "'");
}

ViewGroup parse_view_group(std::string_view text)
{
    for (auto g : {ViewGroup::ViewedNoInsights, ViewGroup::ViewedSomeInsight})
        if (to_string(g) == text)
            return g;
    throw ParseError("unknown view group '" + std::string(text) + "'");
}

std::optional<double> improvement_pct(double bestFirstGen, double bestOverall)
{
    if (!std::isfinite(bestFirstGen) || !std::isfinite(bestOverall) || !(bestFirstGen > 0.0))
        return std::nullopt;
    return 100.0 * (bestOverall - bestFirstGen) / bestFirstGen;
}

namespace {

struct ViewTable {
    std::map<std::string, ViewId> canonical;

    explicit ViewTable(const json& header)
    {
        if (const auto it = header.find("sealed"); it != header.end() && it->is_object())
            for (const auto& [key, value] : it->items())
                if (const auto v = parse_view_id(value.get<std::string>()))
                    canonical[key] = *v;
        if (const auto it = header.find("views"); it != header.end() && it->is_array())
            for (const auto& key : *it)
                if (!canonical.contains(key.get<std::string>()))
                    if (const auto v = parse_view_id(key.get<std::string>()))
                        canonical[key.get<std::string>()] = *v;
    }

    std::optional<ViewId> lookup(const std::string& key) const
    {
        const auto it = canonical.find(key);
        if (it != canonical.end())
            return it->second;
        return parse_view_id(key);
    }

    bool insight(const std::string& key) const
    {
        const auto v = lookup(key);
        return v && is_insight(*v);
    }

    std::string key_of(ViewId view) const
    {
        for (const auto& [k, v] : canonical)
            if (v == view)
                return k;
        return std::string(to_string(view));
    }
};

const std::string& string_field(const json& ev, const char* name, std::size_t index)
{
    const auto it = ev.find(name);
    if (it == ev.end() || !it->is_string())
        throw ParseError(std::string(ev.value("type", "")) + " event at index " + std::to_string(index) +
                             " lacks string field '" + name + "'",
                         index);
    return it->get_ref<const std::string&>();
}

std::optional<double> nullable_number(const json& ev, const char* name, std::size_t index)
{
    const auto it = ev.find(name);
    if (it == ev.end())
        throw ParseError("event at index " + std::to_string(index) + " lacks field '" + name + "'", index);
    if (it->is_null())
        return std::nullopt;
    if (!it->is_number())
        throw ParseError("field '" + std::string(name) + "' at index " + std::to_string(index) + " is not a number",
                         index);
    return it->get<double>();
}

} // namespace

SessionMetrics compute_metrics(const SessionLog& log, std::string sessionId)
{
    SessionMetrics m;
    m.session = std::move(sessionId);
    const json& header = log.header;
    const ViewTable views(header);
    try {
        const json& config = header.at("config");
        m.mode = config.at("mode").get<std::string>();
        m.seed = config.at("seed").get<std::uint64_t>();
        const json& design = config.at("design");
        m.course = design.at("course").get<std::string>();
        m.dimensions = genome_dimension(design.at("nv").get<int>(), design.at("nw").get<int>());
        m.maxPlausibleFitness = config.value("maxPlausibleFitness", m.maxPlausibleFitness);
        for (const auto& key : header.at("views"))
            m.timePerView[key.get<std::string>()] = 0.0;
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("malformed log header: ") + e.what());
    }

    std::string current = views.key_of(ViewId::Live);
    m.firstOpenTime[current] = 0.0;
    double since = 0.0;
    bool interacted = false;
    bool insightInteraction = false;
    bool viewedInsight = false;

    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const json& ev = log.events[i];
        const std::string& type = ev.at("type").get_ref<const std::string&>();
        const double t = ev.at("t").get<double>();
        m.sessionLength = t;

        if (type == "GenerationEvaluated") {
            const auto best = nullable_number(ev, "best", i);
            ++m.generations;
            if (m.generations == 1)
                m.initialFitness = best;
            if (best && (!m.bestFitness || *best > *m.bestFitness))
                m.bestFitness = best;
        }
        else if (type == "ViewOpened") {
            const std::string& key = string_field(ev, "view", i);
            m.timePerView[current] += t - since;
            since = t;
            current = key;
            m.firstOpenTime.try_emplace(key, t);
            if (views.insight(key))
                viewedInsight = true;
        }
        else if (type == "SelectionMade") {
            const std::string& key = string_field(ev, "view", i);
            ++m.selectionsPerView[key];
            ++m.totalSelections;
            interacted = true;
            if (views.insight(key)) {
                ++m.insightSelections;
                insightInteraction = true;
            }
        }
        else if (type == "EditorLoaded") {
            interacted = true;
            if (views.insight(string_field(ev, "view", i)))
                insightInteraction = true;
        }
        else if (type == "DesignEdited") {
            ++m.edits;
            interacted = true;
        }
        else if (type == "DesignInjected" || type == "EditorImported") {
            if (type == "DesignInjected")
                ++m.injections;
            interacted = true;
        }
    }
    m.timePerView[current] += m.sessionLength - since;

    for (const auto& [key, seconds] : m.timePerView)
        if (views.insight(key))
            m.insightTime += seconds;
    if (m.initialFitness && m.bestFitness)
        m.improvementPct = improvement_pct(*m.initialFitness, *m.bestFitness);
    m.interactionGroup = !interacted          ? InteractionGroup::NoInteraction
                         : insightInteraction ? InteractionGroup::EditorAndInsights
                                              : InteractionGroup::EditorOnly;
    m.viewGroup = viewedInsight ? ViewGroup::ViewedSomeInsight : ViewGroup::ViewedNoInsights;
    return m;
}

namespace {
json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* name)
{
    const auto it = j.find(name);
    if (it == j.end() || it->is_null())
        return std::nullopt;
    return it->get<double>();
}
} // namespace

json to_json(const SessionMetrics& m)
{
    return {
        {"schemaVersion", kMetricsSchemaVersion},
        {"session", m.session},
        {"mode", m.mode},
        {"course", m.course},
        {"seed", m.seed},
        {"dimensions", m.dimensions},
        {"generations", m.generations},
        {"initialFitness", optional_json(m.initialFitness)},
        {"bestFitness", optional_json(m.bestFitness)},
        {"improvementPct", optional_json(m.improvementPct)},
        {"sessionLength", m.sessionLength},
        {"selectionsPerView", m.selectionsPerView},
        {"timePerView", m.timePerView},
        {"firstOpenTime", m.firstOpenTime},
        {"interactionGroup", to_string(m.interactionGroup)},
        {"viewGroup", to_string(m.viewGroup)},
        {"totalSelections", m.totalSelections},
        {"insightSelections", m.insightSelections},
        {"insightTime", m.insightTime},
        {"edits", m.edits},
        {"injections", m.injections},
        {"maxPlausibleFitness", m.maxPlausibleFitness},
    };
}

SessionMetrics metrics_from_json(const json& j)
{
    try {
        if (j.at("schemaVersion").get<int>() != kMetricsSchemaVersion)
            throw VersionError("metrics schema version " + j.at("schemaVersion").dump() + " is not supported");
        SessionMetrics m;
        m.session = j.value("session", "");
        m.mode = j.value("mode", "");
        m.course = j.value("course", "");
        m.seed = j.value("seed", std::uint64_t{0});
        m.dimensions = j.value("dimensions", 0);
        m.generations = j.value("generations", 0);
        m.initialFitness = optional_from(j, "initialFitness");
        m.bestFitness = optional_from(j, "bestFitness");
        m.improvementPct = optional_from(j, "improvementPct");
        m.sessionLength = j.at("sessionLength").get<double>();
        m.selectionsPerView = j.value("selectionsPerView", std::map<std::string, int>{});
        m.timePerView = j.value("timePerView", std::map<std::string, double>{});
        m.firstOpenTime = j.value("firstOpenTime", std::map<std::string, double>{});
        m.interactionGroup = parse_interaction_group(j.at("interactionGroup").get<std::string>());
        m.viewGroup = parse_view_group(j.at("viewGroup").get<std::string>());
        m.totalSelections = j.value("totalSelections", 0);
        m.insightSelections = j.value("insightSelections", 0);
        m.insightTime = j.value("insightTime", 0.0);
        m.edits = j.value("edits", 0);
        m.injections = j.value("injections", 0);
        m.maxPlausibleFitness = j.value("maxPlausibleFitness", m.maxPlausibleFitness);
        return m;
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("malformed metrics record: ") + e.what());
    }
}

std::optional<double> metric_value(const SessionMetrics& m, std::string_view name)
{
    auto from_map = [&](const auto& map, std::string_view prefix) -> std::optional<double> {
        const auto key = std::string(name.substr(prefix.size()));
        const auto it = map.find(key);
        return it == map.end() ? std::optional<double>(0.0) : std::optional<double>(it->second);
    };
    if (name.starts_with("selectionsPerView."))
        return from_map(m.selectionsPerView, "selectionsPerView.");
    if (name.starts_with("timePerView."))
        return from_map(m.timePerView, "timePerView.");
    if (name.starts_with("firstOpenTime.")) {
        const auto it = m.firstOpenTime.find(std::string(name.substr(14)));
        return it == m.firstOpenTime.end() ? std::nullopt : std::optional<double>(it->second);
    }
    if (name == "improvementPct") return m.improvementPct;
    if (name == "initialFitness") return m.initialFitness;
    if (name == "bestFitness") return m.bestFitness;
    if (name == "sessionLength") return m.sessionLength;
    if (name == "generations") return m.generations;
    if (name == "dimensions") return m.dimensions;
    if (name == "totalSelections") return m.totalSelections;
    if (name == "insightSelections") return m.insightSelections;
    if (name == "insightTime") return m.insightTime;
    if (name == "edits") return m.edits;
    if (name == "injections") return m.injections;
    throw ValidationError("unknown metric '" + std::string(name) + "'");
}

CleaningReport clean_corpus(std::vector<SessionMetrics> corpus, std::optional<double> bound)
{
    CleaningReport report;
    for (auto& m : corpus) {
        const double limit = bound.value_or(m.maxPlausibleFitness);
        bool ok = std::isfinite(m.sessionLength);
        for (const auto& v : {m.initialFitness, m.bestFitness, m.improvementPct})
            if (v && !std::isfinite(*v))
                ok = false;
        for (const auto& v : {m.initialFitness, m.bestFitness})
            if (v && *v > limit)
                ok = false;
        for (const auto& [k, v] : m.timePerView)
            if (!std::isfinite(v))
                ok = false;
        if (ok)
            report.kept.push_back(std::move(m));
        else
            report.dropped.push_back(m.session);
    }
    return report;
}

} // namespace cardesign
