#include "cardesign/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cardesign/error.hpp"
#include "cardesign/text.hpp"

namespace cardesign {

using nlohmann::json;

namespace {

bool listed(const std::vector<std::string>& allowed, const std::string& value)
{
    return allowed.empty() || std::find(allowed.begin(), allowed.end(), value) != allowed.end();
}

std::vector<std::string> string_list(const json& j, const char* name)
{
    const auto it = j.find(name);
    if (it == j.end())
        return {};
    if (it->is_string())
        return {it->get<std::string>()};
    return it->get<std::vector<std::string>>();
}

SessionFilter filter_from(const json& j)
{
    if (j.is_null())
        return {};
    if (!j.is_object())
        throw ParseError("filter must be an object");
    return {string_list(j, "interactionGroup"), string_list(j, "viewGroup"), string_list(j, "mode"),
            string_list(j, "course")};
}

json filter_json(const SessionFilter& f)
{
    json j = json::object();
    if (!f.interactionGroups.empty()) j["interactionGroup"] = f.interactionGroups;
    if (!f.viewGroups.empty()) j["viewGroup"] = f.viewGroups;
    if (!f.modes.empty()) j["mode"] = f.modes;
    if (!f.courses.empty()) j["course"] = f.courses;
    return j;
}

// Values of `metric` for matching sessions; sessions where it is undefined are skipped.
std::vector<double> column(const std::vector<SessionMetrics>& corpus, const SessionFilter& f, const std::string& metric)
{
    std::vector<double> out;
    for (const auto& m : corpus)
        if (f.matches(m))
            if (const auto v = metric_value(m, metric); v && std::isfinite(*v))
                out.push_back(*v);
    return out;
}

std::pair<std::vector<double>, std::vector<double>> paired(const std::vector<SessionMetrics>& corpus,
                                                           const Correlation& c)
{
    std::vector<double> xs, ys;
    for (const auto& m : corpus) {
        if (!c.filter.matches(m))
            continue;
        const auto x = metric_value(m, c.x), y = metric_value(m, c.y);
        if (x && y && std::isfinite(*x) && std::isfinite(*y)) {
            xs.push_back(*x);
            ys.push_back(*y);
        }
    }
    return {xs, ys};
}

GroupSummary summarize(const std::vector<double>& v)
{
    if (v.empty())
        return {};
    return {v.size(), mean(v), median(v)};
}

json test_json(const TestResult& t)
{
    json j = {{"statistic", t.statistic}, {"p", t.pValue}, {"significant", t.significant}};
    if (t.z)
        j["z"] = *t.z;
    return j;
}

std::string file_safe(const std::string& name)
{
    std::string out;
    for (char c : name)
        out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

} // namespace

bool SessionFilter::matches(const SessionMetrics& m) const
{
    return listed(interactionGroups, std::string(to_string(m.interactionGroup))) &&
           listed(viewGroups, std::string(to_string(m.viewGroup))) && listed(modes, m.mode) &&
           listed(courses, m.course);
}

int AnalysisPlan::family_size() const
{
    return family.value_or(std::max(1, static_cast<int>(comparisons.size())));
}

double AnalysisPlan::adjusted_alpha() const { return bonferroni(alpha, family_size()); }

AnalysisPlan plan_from_json(const json& j)
{
    try {
        AnalysisPlan p;
        p.alpha = j.value("alpha", p.alpha);
        if (j.contains("family") && !j["family"].is_null())
            p.family = j["family"].get<int>();
        p.minGroupSize = j.value("minGroupSize", p.minGroupSize);
        if (j.contains("maxPlausibleFitness") && !j["maxPlausibleFitness"].is_null())
            p.maxPlausibleFitness = j["maxPlausibleFitness"].get<double>();
        p.exactThreshold = j.value("exactThreshold", p.exactThreshold);
        for (const auto& c : j.value("comparisons", json::array()))
            p.comparisons.push_back({c.at("name").get<std::string>(), c.at("metric").get<std::string>(),
                                     c.value("labelA", "A"), c.value("labelB", "B"), filter_from(c.value("a", json())),
                                     filter_from(c.value("b", json()))});
        for (const auto& c : j.value("correlations", json::array()))
            p.correlations.push_back({c.at("name").get<std::string>(), c.at("x").get<std::string>(),
                                      c.at("y").get<std::string>(), filter_from(c.value("filter", json()))});
        for (const auto& c : j.value("correlationComparisons", json::array()))
            p.correlationComparisons.push_back({c.at("name").get<std::string>(), c.at("first").get<std::string>(),
                                                c.at("second").get<std::string>()});
        for (const auto& k : j.value("kde", json::array())) {
            KdeSeries s;
            s.name = k.at("name").get<std::string>();
            s.metric = k.at("metric").get<std::string>();
            for (const auto& [label, f] : k.at("groups").items())
                s.groups.emplace_back(label, filter_from(f));
            s.points = k.value("points", s.points);
            if (k.contains("bandwidth") && !k["bandwidth"].is_null())
                s.bandwidth = k["bandwidth"].get<double>();
            p.kde.push_back(std::move(s));
        }
        if (!(p.alpha > 0.0 && p.alpha < 1.0))
            throw ValidationError("plan alpha must lie in (0, 1)");
        if (p.family && *p.family < 1)
            throw ValidationError("plan family must be at least 1");
        for (const auto& cc : p.correlationComparisons)
            for (const auto& ref : {cc.first, cc.second})
                if (std::none_of(p.correlations.begin(), p.correlations.end(),
                                 [&](const Correlation& c) { return c.name == ref; }))
                    throw ValidationError("correlation comparison '" + cc.name + "' names unknown correlation '" +
                                          ref + "'");
        return p;
    }
    catch (const json::exception& e) {
        throw ParseError(std::string("malformed analysis plan: ") + e.what());
    }
}

json to_json(const AnalysisPlan& p)
{
    json j = {{"alpha", p.alpha},
              {"family", p.family ? json(*p.family) : json(nullptr)},
              {"minGroupSize", p.minGroupSize},
              {"maxPlausibleFitness", p.maxPlausibleFitness ? json(*p.maxPlausibleFitness) : json(nullptr)},
              {"exactThreshold", p.exactThreshold},
              {"comparisons", json::array()},
              {"correlations", json::array()},
              {"correlationComparisons", json::array()},
              {"kde", json::array()}};
    for (const auto& c : p.comparisons)
        j["comparisons"].push_back({{"name", c.name}, {"metric", c.metric}, {"labelA", c.labelA},
                                    {"labelB", c.labelB}, {"a", filter_json(c.a)}, {"b", filter_json(c.b)}});
    for (const auto& c : p.correlations)
        j["correlations"].push_back({{"name", c.name}, {"x", c.x}, {"y", c.y}, {"filter", filter_json(c.filter)}});
    for (const auto& c : p.correlationComparisons)
        j["correlationComparisons"].push_back({{"name", c.name}, {"first", c.first}, {"second", c.second}});
    for (const auto& k : p.kde) {
        json groups = json::object();
        for (const auto& [label, f] : k.groups)
            groups[label] = filter_json(f);
        j["kde"].push_back({{"name", k.name},
                            {"metric", k.metric},
                            {"groups", groups},
                            {"points", k.points},
                            {"bandwidth", k.bandwidth ? json(*k.bandwidth) : json(nullptr)}});
    }
    return j;
}

AnalysisPlan default_plan()
{
    const SessionFilter none{{"noInteraction"}, {}, {}, {}};
    const SessionFilter editor{{"editorOnly"}, {}, {}, {}};
    const SessionFilter insights{{"editorAndInsights"}, {}, {}, {}};
    const SessionFilter interacted{{"editorOnly", "editorAndInsights"}, {}, {}, {}};
    const SessionFilter viewedNone{{"editorOnly", "editorAndInsights"}, {"viewedNoInsights"}, {}, {}};
    const SessionFilter viewedSome{{"editorOnly", "editorAndInsights"}, {"viewedSomeInsight"}, {}, {}};

    AnalysisPlan p;
    p.comparisons = {
        {"editor-only vs no interaction", "improvementPct", "editorOnly", "noInteraction", editor, none},
        {"editor+insights vs no interaction", "improvementPct", "editorAndInsights", "noInteraction", insights, none},
        {"editor-only vs editor+insights", "improvementPct", "editorOnly", "editorAndInsights", editor, insights},
        {"viewed insights vs not", "improvementPct", "viewedSomeInsight", "viewedNoInsights", viewedSome, viewedNone},
        {"dimensions editor-only vs editor+insights", "dimensions", "editorOnly", "editorAndInsights", editor,
         insights},
    };
    p.correlations = {
        {"initial fitness vs improvement (no interaction)", "initialFitness", "improvementPct", none},
        {"initial fitness vs improvement (editor only)", "initialFitness", "improvementPct", editor},
        {"initial fitness vs improvement (editor+insights)", "initialFitness", "improvementPct", insights},
        {"initial fitness vs improvement (viewed no insights)", "initialFitness", "improvementPct", viewedNone},
        {"initial fitness vs improvement (viewed some insight)", "initialFitness", "improvementPct", viewedSome},
        {"selections vs improvement", "totalSelections", "improvementPct", interacted},
        {"insight time vs improvement", "insightTime", "improvementPct", interacted},
    };
    p.correlationComparisons = {
        {"initial fitness: no interaction vs editor only", "initial fitness vs improvement (no interaction)",
         "initial fitness vs improvement (editor only)"},
        {"initial fitness: editor only vs editor+insights", "initial fitness vs improvement (editor only)",
         "initial fitness vs improvement (editor+insights)"},
        {"initial fitness: viewed none vs viewed some", "initial fitness vs improvement (viewed no insights)",
         "initial fitness vs improvement (viewed some insight)"},
    };
    p.kde = {
        {"improvement by interaction", "improvementPct",
         {{"noInteraction", none}, {"editorOnly", editor}, {"editorAndInsights", insights}}, 256, std::nullopt},
        {"improvement by view", "improvementPct",
         {{"viewedNoInsights", viewedNone}, {"viewedSomeInsight", viewedSome}}, 256, std::nullopt},
        {"initial fitness", "initialFitness", {{"all", {}}}, 256, std::nullopt},
    };
    return p;
}

std::size_t AnalysisReport::significant_count() const
{
    std::size_t n = 0;
    for (const auto& c : comparisons)
        n += !c.skipped && c.test.significant;
    for (const auto& c : correlations)
        n += !c.skipped && c.test.significant;
    for (const auto& c : correlationComparisons)
        n += !c.skipped && c.test.significant;
    return n;
}

AnalysisReport analyze_corpus(std::vector<SessionMetrics> corpus, const AnalysisPlan& plan)
{
    // Unknown metric names throw here rather than inside the parallel regions.
    const SessionMetrics probe;
    for (const auto& c : plan.comparisons)
        (void)metric_value(probe, c.metric);
    for (const auto& c : plan.correlations)
        (void)metric_value(probe, c.x), (void)metric_value(probe, c.y);
    for (const auto& k : plan.kde)
        (void)metric_value(probe, k.metric);

    AnalysisReport report;
    report.alpha = plan.alpha;
    report.family = plan.family_size();
    report.adjustedAlpha = plan.adjusted_alpha();
    auto cleaned = clean_corpus(std::move(corpus), plan.maxPlausibleFitness);
    report.dropped = std::move(cleaned.dropped);
    const auto& data = cleaned.kept;
    report.sessions = data.size();
    const double alpha = report.adjustedAlpha;
    const std::size_t minSize = std::max<std::size_t>(1, plan.minGroupSize);

    report.comparisons.resize(plan.comparisons.size());
    report.correlations.resize(plan.correlations.size());
    const auto nComparisons = static_cast<std::ptrdiff_t>(plan.comparisons.size());
    const auto nCorrelations = static_cast<std::ptrdiff_t>(plan.correlations.size());

    // Each entry is independent and writes only its own slot, so plan order is preserved.
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < nComparisons; ++i) {
        const auto& c = plan.comparisons[static_cast<std::size_t>(i)];
        auto& out = report.comparisons[static_cast<std::size_t>(i)];
        out.name = c.name;
        out.metric = c.metric;
        out.labelA = c.labelA;
        out.labelB = c.labelB;
        const auto a = column(data, c.a, c.metric), b = column(data, c.b, c.metric);
        out.a = summarize(a);
        out.b = summarize(b);
        if (a.size() < minSize || b.size() < minSize) {
            out.skipped = "group below minimum size " + std::to_string(minSize) + " (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")";
            continue;
        }
        out.test = mann_whitney_u(a, b, {plan.exactThreshold, alpha});
    }

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < nCorrelations; ++i) {
        const auto& c = plan.correlations[static_cast<std::size_t>(i)];
        auto& out = report.correlations[static_cast<std::size_t>(i)];
        out.name = c.name;
        out.x = c.x;
        out.y = c.y;
        const auto [xs, ys] = paired(data, c);
        out.n = xs.size();
        if (xs.size() < std::max<std::size_t>(minSize, 4)) {
            out.skipped = "fewer than " + std::to_string(std::max<std::size_t>(minSize, 4)) + " pairs";
            continue;
        }
        try {
            out.test = spearman_rho(xs, ys, alpha);
        }
        catch (const ValidationError& e) {
            out.skipped = e.what();
        }
    }

    for (const auto& cc : plan.correlationComparisons) {
        CorrelationComparisonOutcome out{cc.name, cc.first, cc.second, std::nullopt, {}};
        auto find = [&](const std::string& name) {
            return std::find_if(report.correlations.begin(), report.correlations.end(),
                                [&](const CorrelationOutcome& c) { return c.name == name; });
        };
        const auto a = find(cc.first), b = find(cc.second);
        if (a == report.correlations.end() || b == report.correlations.end())
            out.skipped = "unknown correlation";
        else if (a->skipped || b->skipped)
            out.skipped = "a referenced correlation was skipped";
        else if (std::abs(a->test.statistic) >= 1.0 || std::abs(b->test.statistic) >= 1.0)
            out.skipped = "perfect correlation has no Fisher transform";
        else
            out.test = fisher_z_compare(a->test.statistic, static_cast<int>(a->n), b->test.statistic,
                                        static_cast<int>(b->n), alpha);
        report.correlationComparisons.push_back(std::move(out));
    }

    for (const auto& k : plan.kde) {
        KdeOutcome out;
        out.name = k.name;
        out.metric = k.metric;
        std::vector<std::vector<double>> samples;
        double lo = INFINITY, hi = -INFINITY, widest = 0.0;
        for (const auto& [label, f] : k.groups) {
            out.labels.push_back(label);
            samples.push_back(column(data, f, k.metric));
            const auto& s = samples.back();
            out.sizes.push_back(s.size());
            std::optional<double> h = k.bandwidth;
            if (!h && s.size() >= 2) {
                try {
                    h = silverman_bandwidth(s);
                }
                catch (const ValidationError&) {
                }
            }
            out.bandwidths.push_back(h);
            if (h && !s.empty()) {
                lo = std::min(lo, *std::min_element(s.begin(), s.end()));
                hi = std::max(hi, *std::max_element(s.begin(), s.end()));
                widest = std::max(widest, *h);
            }
        }
        if (widest > 0.0) {
            out.grid = linear_grid(lo - 6.0 * widest, hi + 6.0 * widest, std::max<std::size_t>(k.points, 2));
            for (std::size_t g = 0; g < samples.size(); ++g)
                out.densities.push_back(out.bandwidths[g] && !samples[g].empty()
                                            ? kde_parallel(samples[g], out.grid, out.bandwidths[g])
                                            : std::vector<double>{});
        }
        report.kde.push_back(std::move(out));
    }
    return report;
}

json to_json(const AnalysisReport& r)
{
    json j = {{"schemaVersion", kReportSchemaVersion},
              {"alpha", r.alpha},
              {"family", r.family},
              {"adjustedAlpha", r.adjustedAlpha},
              {"sessions", r.sessions},
              {"dropped", r.dropped},
              {"comparisons", json::array()},
              {"correlations", json::array()},
              {"correlationComparisons", json::array()},
              {"kde", json::array()}};
    auto summary = [](const GroupSummary& g) { return json{{"n", g.n}, {"mean", g.mean}, {"median", g.median}}; };
    for (const auto& c : r.comparisons) {
        json e = {{"name", c.name}, {"metric", c.metric}, {"test", "mann-whitney-u"}, {"adjustedAlpha", r.adjustedAlpha},
                  {"a", summary(c.a)}, {"b", summary(c.b)}};
        e["a"]["label"] = c.labelA;
        e["b"]["label"] = c.labelB;
        if (c.skipped)
            e["skipped"] = *c.skipped;
        else {
            e["result"] = test_json(c.test);
            e["result"]["exact"] = c.test.exact;
        }
        j["comparisons"].push_back(std::move(e));
    }
    for (const auto& c : r.correlations) {
        json e = {{"name", c.name}, {"x", c.x}, {"y", c.y}, {"n", c.n}, {"test", "spearman"},
                  {"adjustedAlpha", r.adjustedAlpha}};
        if (c.skipped)
            e["skipped"] = *c.skipped;
        else
            e["result"] = test_json(c.test);
        j["correlations"].push_back(std::move(e));
    }
    for (const auto& c : r.correlationComparisons) {
        json e = {{"name", c.name}, {"first", c.first}, {"second", c.second}, {"test", "fisher-z"},
                  {"adjustedAlpha", r.adjustedAlpha}};
        if (c.skipped)
            e["skipped"] = *c.skipped;
        else
            e["result"] = test_json(c.test);
        j["correlationComparisons"].push_back(std::move(e));
    }
    for (const auto& k : r.kde) {
        json groups = json::array();
        for (std::size_t g = 0; g < k.labels.size(); ++g)
            groups.push_back({{"label", k.labels[g]},
                              {"n", k.sizes[g]},
                              {"bandwidth", k.bandwidths[g] ? json(*k.bandwidths[g]) : json(nullptr)}});
        j["kde"].push_back({{"name", k.name},
                            {"metric", k.metric},
                            {"groups", groups},
                            {"file", k.grid.empty() ? json(nullptr) : json("kde_" + file_safe(k.name) + ".csv")}});
    }
    return j;
}

std::string to_text(const AnalysisReport& r)
{
    std::ostringstream out;
    out << "sessions analysed: " << r.sessions << " (dropped " << r.dropped.size() << ")\n";
    out << "alpha " << to_text(r.alpha) << ", family " << r.family << ", adjusted alpha " << to_text(r.adjustedAlpha)
        << "\n\n[group comparisons: Mann-Whitney U]\n";
    for (const auto& c : r.comparisons) {
        out << c.name << " (" << c.metric << "): " << c.labelA << " n=" << c.a.n << " mean=" << to_text(c.a.mean)
            << " | " << c.labelB << " n=" << c.b.n << " mean=" << to_text(c.b.mean) << " -> ";
        if (c.skipped)
            out << "skipped: " << *c.skipped << "\n";
        else
            out << "U=" << to_text(c.test.statistic) << " p=" << to_text(c.test.pValue)
                << (c.test.exact ? " exact" : " approx") << (c.test.significant ? " SIGNIFICANT" : "") << "\n";
    }
    out << "\n[correlations: Spearman]\n";
    for (const auto& c : r.correlations) {
        out << c.name << " n=" << c.n << " -> ";
        if (c.skipped)
            out << "skipped: " << *c.skipped << "\n";
        else
            out << "rho=" << to_text(c.test.statistic) << " p=" << to_text(c.test.pValue)
                << (c.test.significant ? " SIGNIFICANT" : "") << "\n";
    }
    out << "\n[correlation comparisons: Fisher z]\n";
    for (const auto& c : r.correlationComparisons) {
        out << c.name << " -> ";
        if (c.skipped)
            out << "skipped: " << *c.skipped << "\n";
        else
            out << "z=" << to_text(c.test.statistic) << " p=" << to_text(c.test.pValue)
                << (c.test.significant ? " SIGNIFICANT" : "") << "\n";
    }
    return out.str();
}

std::vector<SessionMetrics> load_corpus(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw ParseError("corpus directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<SessionMetrics> corpus;
    for (const auto& f : files) {
        std::ifstream in(f);
        json j;
        try {
            j = json::parse(in);
        }
        catch (const json::exception& e) {
            throw ParseError("malformed corpus file " + f.string() + ": " + e.what());
        }
        const json records = j.is_array() ? j : json::array({j});
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto m = metrics_from_json(records[i]);
            if (m.session.empty())
                m.session = records.size() == 1 ? f.stem().string() : f.stem().string() + "#" + std::to_string(i);
            corpus.push_back(std::move(m));
        }
    }
    return corpus;
}

void write_report(const AnalysisReport& report, const std::filesystem::path& outDir)
{
    std::filesystem::create_directories(outDir);
    auto open = [&](const std::string& name) {
        std::ofstream f(outDir / name);
        if (!f)
            throw std::runtime_error("cannot write " + (outDir / name).string());
        return f;
    };
    open("report.json") << to_json(report).dump(2) << '\n';
    open("report.txt") << to_text(report);
    for (const auto& k : report.kde) {
        if (k.grid.empty())
            continue;
        auto f = open("kde_" + file_safe(k.name) + ".csv");
        f << "x";
        for (const auto& l : k.labels)
            f << ',' << l;
        f << '\n';
        for (std::size_t i = 0; i < k.grid.size(); ++i) {
            f << to_text(k.grid[i]);
            for (const auto& d : k.densities)
                f << ',' << (d.empty() ? std::string() : to_text(d[i]));
            f << '\n';
        }
    }
}

} // namespace cardesign
