// cardesign: headless runs, replay checks, corpus analysis and the HTTP service.
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardesign/analysis.hpp"
#include "cardesign/error.hpp"
#include "cardesign/http.hpp"
#include "cardesign/metrics.hpp"
#include "cardesign/replay.hpp"
#include "cardesign/service.hpp"
#include "cardesign/session.hpp"

using namespace cardesign;
using nlohmann::json;

namespace {

// Failures surface as one JSON line on stderr plus a nonzero exit code.
struct CliFailure : std::runtime_error {
    std::string code;
    CliFailure(std::string c, const std::string& what) : std::runtime_error(what), code(std::move(c)) {}
};

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw CliFailure("io_error", "cannot open " + path);
    try {
        return json::parse(in);
    }
    catch (const json::exception& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw CliFailure("io_error", "cannot write " + path);
    return out;
}

int run_headless(const std::string& configPath, std::optional<std::uint64_t> seed, bool lab, int generations,
                 const std::string& outPath)
{
    json cfg = configPath.empty() ? json::object() : read_json_file(configPath);
    if (lab)
        cfg["mode"] = "lab";
    if (seed)
        cfg["seed"] = *seed;
    SessionConfig config = session_config_from_json(cfg);
    config.validate();
    if (generations < 1)
        throw ValidationError("--generations must be at least 1");
    if (config.generationCap && generations > *config.generationCap)
        throw ValidationError("--generations " + std::to_string(generations) + " exceeds the session cap of " +
                              std::to_string(*config.generationCap));

    auto out = open_out(outPath);
    Session session(config, [&](const std::string& line) { out << line << '\n'; });
    // Headless clock: each generation plays for the full simulated duration.
    const double period = config.sim.duration;
    double t = 0.0;
    for (int g = 1; g < generations; ++g)
        session.apply(Advance{}, t += period);
    session.apply(EndSession{}, t += period);
    out.close();
    if (!out)
        throw CliFailure("io_error", "failed writing " + outPath);

    const auto best = session.best();
    std::cout << json{{"ok", true},
                      {"log", outPath},
                      {"generations", session.current().index},
                      {"best", best ? json{{"design", best->ref.str()}, {"fitness", best->fitness}} : json(nullptr)}}
                     .dump()
              << '\n';
    return 0;
}

int replay_cmd(const std::string& logPath, bool verbose)
{
    const auto log = SessionLog::read_file(logPath);
    const auto result = replay(log);
    const auto recorded = compute_metrics(log);
    if (!(result.metrics == recorded))
        throw CliFailure("replay_mismatch", "replayed metrics differ from the recorded log");
    std::cout << "metrics match\n";
    json summary = {{"ok", true},
                    {"events", result.events},
                    {"generations", result.bestPerGeneration.size()},
                    {"best", result.best ? json{{"design", result.best->ref.str()}, {"fitness", result.best->fitness}}
                                         : json(nullptr)},
                    {"improvementPct", recorded.improvementPct ? json(*recorded.improvementPct) : json(nullptr)}};
    if (verbose) {
        json seq = json::array();
        for (const auto& b : result.bestPerGeneration)
            seq.push_back(b ? json(*b) : json(nullptr));
        summary["bestPerGeneration"] = seq;
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

int analyze_cmd(const std::string& corpusDir, const std::string& planPath, const std::string& outDir)
{
    const AnalysisPlan plan = planPath.empty() ? default_plan() : plan_from_json(read_json_file(planPath));
    auto corpus = load_corpus(corpusDir);
    const auto loaded = corpus.size();
    const auto report = analyze_corpus(std::move(corpus), plan);
    write_report(report, outDir);
    std::cout << json{{"ok", true},
                      {"loaded", loaded},
                      {"analysed", report.sessions},
                      {"dropped", report.dropped.size()},
                      {"adjustedAlpha", report.adjustedAlpha},
                      {"significant", report.significant_count()},
                      {"report", outDir + "/report.json"}}
                     .dump()
              << '\n';
    return 0;
}

int export_archive_cmd(const std::string& logPath, const std::string& viewName, const std::string& outPath)
{
    const auto log = SessionLog::read_file(logPath);
    const Session session = restore_session(log);
    std::optional<ViewId> view = session.resolve_view(viewName);
    if (!view)
        view = parse_view_id(viewName);
    if (!view) {
        // Short descriptor names select the matching elite archive.
        for (auto [name, v] : {std::pair{"Speed", ViewId::SpeedElites}, std::pair{"Wheel", ViewId::WheelElites},
                               std::pair{"Geometry", ViewId::GeometryElites}})
            if (viewName == name)
                view = v;
    }
    if (!view || *view == ViewId::Editor)
        throw ValidationError("unknown or non-exportable view '" + viewName + "'");

    json entries = json::array();
    const auto slots = session.view_candidates(*view);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) {
            entries.push_back(nullptr);
            continue;
        }
        const auto ref = *slots[i];
        json e = {{"slot", i}, {"design", ref.str()}};
        if (const auto f = session.find_fitness(ref))
            e["fitness"] = *f;
        if (const auto kind = elite_kind(*view)) {
            const auto& cell = session.archive(*kind).cells()[i];
            e["descriptor"] = cell->descriptor;
        }
        if (const auto* g = session.find_genome(ref))
            e["genes"] = to_genes(*g);
        entries.push_back(std::move(e));
    }
    json doc = {{"schemaVersion", kApiSchemaVersion},
                {"view", session.view_key(*view)},
                {"generation", session.current().index},
                {"entries", entries}};
    if (const auto kind = elite_kind(*view)) {
        const auto range = session.archive(*kind).range();
        doc["range"] = {range.lo, range.hi};
        doc["coverage"] = session.archive(*kind).coverage();
    }
    if (outPath.empty())
        std::cout << doc.dump(2) << '\n';
    else
        open_out(outPath) << doc.dump(2) << '\n';
    return 0;
}

int metrics_cmd(const std::string& logPath, const std::string& outPath)
{
    const auto log = SessionLog::read_file(logPath);
    const auto m = compute_metrics(log, std::filesystem::path(logPath).stem().string());
    const std::string text = to_json(m).dump(2);
    if (outPath.empty())
        std::cout << text << '\n';
    else
        open_out(outPath) << text << '\n';
    return 0;
}

HttpServer* activeServer = nullptr;

void on_signal(int)
{
    if (activeServer)
        activeServer->stop();
}

int serve_cmd(const std::string& host, int port, const std::string& dataDir, double speed, bool noAutoAdvance)
{
    ServiceOptions options;
    options.dataDir = dataDir.empty() ? default_data_dir() : std::filesystem::path(dataDir);
    options.speed = speed;
    options.autoAdvance = !noAutoAdvance;
    SessionService service(options);
    const auto restored = service.restore();
    HttpServer server(service);
    activeServer = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << json{{"ok", true}, {"listening", host + ":" + std::to_string(port)},
                      {"dataDir", options.dataDir.string()}, {"restored", restored}}
                     .dump()
              << std::endl;
    if (!server.listen(host, port))
        throw CliFailure("io_error", "cannot listen on " + host + ":" + std::to_string(port));
    activeServer = nullptr;
    return 0;
}

int fail(const std::string& code, const std::string& message, std::optional<std::size_t> index = std::nullopt)
{
    json err = {{"code", code}, {"message", message}};
    if (index)
        err["index"] = *index;
    std::cerr << json{{"error", err}}.dump() << '\n';
    return code == "usage" ? 2 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cardesign: interactive car co-design workbench (headless tools and service)"};
    app.require_subcommand(1);

    std::string configPath, outPath, logPath, corpusDir, planPath, viewName, host = "127.0.0.1", dataDir;
    std::optional<std::uint64_t> seed;
    int generations = 0, port = 8080;
    bool lab = false, verbose = false, noAutoAdvance = false;
    double speed = 1.0;

    auto* headless = app.add_subcommand("run-headless", "Run an evolution-only session and write its log");
    headless->add_option("--config", configPath, "Session config JSON")->check(CLI::ExistingFile);
    headless->add_option("--seed", seed, "Seed (overrides the config)");
    headless->add_option("--generations", generations, "Number of generations to evaluate")->required();
    headless->add_option("--out", outPath, "Output log path")->required();
    headless->add_flag("--lab", lab, "Use the lab configuration");

    auto* replayCmd = app.add_subcommand("replay", "Re-execute a log and verify it bit-exactly");
    replayCmd->add_option("--log", logPath, "Session log")->required();
    replayCmd->add_flag("--verbose", verbose, "Print the per-generation best fitness");

    auto* analyze = app.add_subcommand("analyze", "Analyse a corpus of session metrics");
    analyze->add_option("--corpus", corpusDir, "Directory of metrics records")->required();
    analyze->add_option("--plan", planPath, "Analysis plan JSON (default plan when omitted)");
    analyze->add_option("--out", outPath, "Report directory")->required();

    auto* exportArchive = app.add_subcommand("export-archive", "Export a view's designs from a session log");
    exportArchive->add_option("--log", logPath, "Session log")->required();
    exportArchive->add_option("--view", viewName, "View id, view key, or Speed/Wheel/Geometry")->required();
    exportArchive->add_option("--out", outPath, "Output JSON (stdout when omitted)");

    auto* metrics = app.add_subcommand("metrics", "Compute the metrics record of a session log");
    metrics->add_option("--log", logPath, "Session log")->required();
    metrics->add_option("--out", outPath, "Output JSON (stdout when omitted)");

    auto* plan = app.add_subcommand("default-plan", "Print the default analysis plan");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--data-dir", dataDir, "Session log directory (default $CARDESIGN_DATA_DIR)");
    serve->add_option("--speed", speed, "Simulated seconds per wall second");
    serve->add_flag("--no-auto-advance", noAutoAdvance, "Only advance generations on request");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*headless)
            return run_headless(configPath, seed, lab, generations, outPath);
        if (*replayCmd)
            return replay_cmd(logPath, verbose);
        if (*analyze)
            return analyze_cmd(corpusDir, planPath, outPath);
        if (*exportArchive)
            return export_archive_cmd(logPath, viewName, outPath);
        if (*metrics)
            return metrics_cmd(logPath, outPath);
        if (*plan) {
            std::cout << to_json(default_plan()).dump(2) << '\n';
            return 0;
        }
        if (*serve)
            return serve_cmd(host, port, dataDir, speed, noAutoAdvance);
    }
    catch (const CliFailure& e) {
        return fail(e.code, e.what());
    }
    catch (const ReplayMismatch& e) {
        return fail("replay_mismatch", e.what(), e.index());
    }
    catch (const ParseError& e) {
        return fail("parse_error", e.what(),
                    e.index() == ParseError::npos ? std::nullopt : std::optional<std::size_t>(e.index()));
    }
    catch (const VersionError& e) {
        return fail("version_error", e.what());
    }
    catch (const ValidationError& e) {
        return fail("validation_error", e.what());
    }
    catch (const std::exception& e) {
        return fail("internal_error", e.what());
    }
    return fail("usage", "no subcommand");
}
