#include "cardesign/service.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include "cardesign/error.hpp"
#include "cardesign/metrics.hpp"
#include "cardesign/replay.hpp"

namespace cardesign {

using nlohmann::json;

json api_error(std::string_view code, std::string_view message)
{
    return {{"schemaVersion", kApiSchemaVersion}, {"error", {{"code", code}, {"message", message}}}};
}

std::optional<ApiReply> check_schema(const json& body)
{
    if (body.is_object() && body.contains("schemaVersion") && body["schemaVersion"] != kApiSchemaVersion)
        return ApiReply{409, api_error("version_skew", "payload schemaVersion " + body["schemaVersion"].dump() +
                                                           " is not supported (expects " +
                                                           std::to_string(kApiSchemaVersion) + ")")};
    return std::nullopt;
}

std::filesystem::path default_data_dir()
{
    if (const char* env = std::getenv("CARDESIGN_DATA_DIR"); env && *env)
        return env;
    return "cardesign-data";
}

namespace {

json pose_json(const TrajectorySample& s)
{
    json wheels = json::array();
    for (std::size_t w = 0; w < s.wheelPositions.size(); ++w)
        wheels.push_back({{"x", s.wheelPositions[w].x}, {"y", s.wheelPositions[w].y}, {"angle", s.wheelAngles[w]}});
    return {{"x", s.bodyX}, {"y", s.bodyY}, {"angle", s.angle}, {"wheels", wheels}};
}

const TrajectorySample* sample_at(const SimulationResult& r, std::size_t index)
{
    if (r.trajectory.empty())
        return nullptr;
    return &r.trajectory[std::min(index, r.trajectory.size() - 1)];
}

double fitness_so_far(const SimulationResult& r, const TrajectorySample& s)
{
    if (!r.firstContactTime || s.t < *r.firstContactTime)
        return 0.0;
    return s.bodyX - r.firstContactX;
}

std::string origin_label(const Session& session, Origin origin)
{
    // Lab payloads must not reveal which insight view a pick came from.
    if (session.config().mode == SessionMode::Lab && origin != Origin::Evolved)
        return "injected";
    return std::string(to_string(origin));
}

double mass_color(const Session& session, const CarGenome& g)
{
    const auto& b = session.config().design.bounds.bodyMass;
    return std::clamp((g.bodyMass - b.lo) / (b.hi - b.lo), 0.0, 1.0);
}

json card(const Session& session, DesignRef ref)
{
    const CarGenome* g = session.find_genome(ref);
    const auto f = session.find_fitness(ref);
    return {{"design", ref.str()},
            {"fitness", f ? json(*f) : json(nullptr)},
            {"color", g ? mass_color(session, *g) : 0.0},
            {"genes", g ? json(to_genes(*g)) : json(nullptr)},
            {"test", session.test_marked(ref)},
            {"use", session.use_marked(ref)}};
}

} // namespace

std::size_t frame_count(const Session& session)
{
    const auto& sim = session.config().sim;
    return static_cast<std::size_t>(std::floor(sim.duration * sim.sampleRate + 1e-9)) + 1;
}

json generation_frame(const Session& session, std::size_t index)
{
    const auto& gen = session.current();
    const std::size_t count = frame_count(session);
    json designs = json::array();
    for (std::size_t i = 0; i < gen.designs.size(); ++i) {
        json d = {{"design", gen.designs[i].ref.str()}};
        const SimulationResult* r = gen.results ? &(*gen.results)[i] : nullptr;
        const TrajectorySample* s = r ? sample_at(*r, index) : nullptr;
        if (s) {
            d["pose"] = pose_json(*s);
            d["fitness"] = fitness_so_far(*r, *s);
        }
        else {
            d["pose"] = nullptr;
            d["fitness"] = nullptr;
        }
        d["diverged"] = r && r->diverged;
        designs.push_back(std::move(d));
    }
    return {{"type", "frame"},
            {"generation", gen.index},
            {"index", index},
            {"t", static_cast<double>(index) / session.config().sim.sampleRate},
            {"progress", count > 1 ? static_cast<double>(index) / static_cast<double>(count - 1) : 1.0},
            {"designs", designs}};
}

json session_state(const Session& session, const std::string& sessionId, double progress)
{
    const auto& gen = session.current();
    const bool lab = session.config().mode == SessionMode::Lab;
    const std::size_t frameIndex =
        static_cast<std::size_t>(std::llround(progress * static_cast<double>(frame_count(session) - 1)));

    json designs = json::array();
    for (std::size_t i = 0; i < gen.designs.size(); ++i) {
        const auto& c = gen.designs[i];
        json d = card(session, c.ref);
        d["slot"] = i;
        d["origin"] = origin_label(session, c.origin);
        const SimulationResult* r = gen.results ? &(*gen.results)[i] : nullptr;
        const TrajectorySample* s = r ? sample_at(*r, frameIndex) : nullptr;
        d["pose"] = s ? pose_json(*s) : json(nullptr);
        d["fitnessSoFar"] = s ? json(fitness_so_far(*r, *s)) : json(nullptr);
        d["diverged"] = r && r->diverged;
        designs.push_back(std::move(d));
    }

    json views = json::array();
    json candidates = json::object();
    for (auto v : session.nav_order()) {
        const auto key = session.view_key(v);
        views.push_back(key);
        if (v == ViewId::Editor)
            continue;
        json list = json::array();
        for (const auto& slot : session.view_candidates(v))
            list.push_back(slot ? card(session, *slot) : json(nullptr));
        candidates[key] = std::move(list);
    }

    const auto& editor = session.editor();
    const auto best = session.best();
    json bounds = json::array();
    for (const auto& iv : gene_intervals(session.config().design))
        bounds.push_back({iv.lo, iv.hi});

    json state = {
        {"schemaVersion", kApiSchemaVersion},
        {"sessionId", sessionId},
        {"mode", to_string(session.config().mode)},
        {"generation", gen.index},
        {"progress", progress},
        {"generationCap", session.config().generationCap ? json(*session.config().generationCap) : json(nullptr)},
        {"atCap", session.at_cap()},
        {"ended", session.ended()},
        {"autoAdvance", session.auto_advance()},
        {"currentView", session.view_key(session.current_view())},
        {"views", views},
        {"designs", designs},
        {"candidates", candidates},
        {"editor",
         {{"source", editor.source ? json(editor.source->str()) : json(nullptr)},
          {"genes", editor.genome ? json(to_genes(*editor.genome)) : json(nullptr)}}},
        {"dimensions", genome_dimension(session.config().design.nv, session.config().design.nw)},
        {"geneBounds", bounds},
        {"best", best ? json{{"design", best->ref.str()}, {"fitness", best->fitness}} : json(nullptr)},
    };
    if (!lab)
        state["course"] = to_string(session.config().design.courseId);
    return state;
}

// Snapshot of the current generation published for read-only stream fan-out.
struct FrameSet {
    int generation = 0;
    std::vector<json> frames;
    json complete;
    bool ended = false;
};

struct SessionService::Actor {
    std::string id;
    std::unique_ptr<Session> session;
    std::ofstream logFile;
    double origin = 0.0;          // clock value at session time 0
    double generationStart = 0.0; // clock value when the current generation appeared
    int lastGeneration = 0;

    std::mutex queueMutex;
    std::condition_variable_any queueCv;
    std::deque<std::function<void()>> queue;

    std::mutex snapMutex;
    std::condition_variable_any snapCv;
    std::shared_ptr<const FrameSet> snapshot;

    std::jthread thread;

    void publish()
    {
        auto set = std::make_shared<FrameSet>();
        set->generation = session->current().index;
        const std::size_t n = frame_count(*session);
        set->frames.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
            set->frames.push_back(generation_frame(*session, k));
        const auto& events = session->log().events;
        for (auto it = events.rbegin(); it != events.rend(); ++it)
            if ((*it)["type"] == "GenerationEvaluated") {
                set->complete = {{"type", "generationComplete"},
                                 {"generation", (*it)["generation"]},
                                 {"best", (*it)["best"]},
                                 {"bestEver", (*it)["bestEver"]}};
                break;
            }
        set->ended = session->ended();
        {
            std::lock_guard lock(snapMutex);
            snapshot = std::move(set);
        }
        snapCv.notify_all();
    }

    std::shared_ptr<const FrameSet> current_snapshot()
    {
        std::lock_guard lock(snapMutex);
        return snapshot;
    }

    template <class Fn>
    auto call(Fn fn) -> decltype(fn())
    {
        using R = decltype(fn());
        auto task = std::make_shared<std::packaged_task<R()>>(std::move(fn));
        auto future = task->get_future();
        {
            std::lock_guard lock(queueMutex);
            queue.emplace_back([task] { (*task)(); });
        }
        queueCv.notify_one();
        return future.get();
    }
};

SessionService::SessionService(ServiceOptions options) : options_(std::move(options))
{
    if (!options_.clock) {
        const auto start = std::chrono::steady_clock::now();
        options_.clock = [start] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        };
    }
    if (!(options_.speed > 0.0))
        throw ValidationError("service speed must be positive");
    if (!options_.dataDir.empty())
        std::filesystem::create_directories(options_.dataDir);
}

SessionService::~SessionService()
{
    std::lock_guard lock(mutex_);
    for (auto& [id, actor] : sessions_) {
        actor->thread.request_stop();
        actor->queueCv.notify_all();
        actor->snapCv.notify_all();
    }
    for (auto& [id, actor] : sessions_)
        if (actor->thread.joinable())
            actor->thread.join();
}

double SessionService::now() const { return options_.clock(); }

std::string SessionService::next_id()
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(++counter_));
    return buf;
}

// Actor main loop: runs queued requests and fires auto-advance when playback ends.
static void actor_loop(std::stop_token stop, SessionService::Actor* a, const ServiceOptions* options)
{
    const double period = a->session->config().sim.duration / options->speed;
    while (!stop.stop_requested()) {
        std::function<void()> task;
        {
            std::unique_lock lock(a->queueMutex);
            const bool autoOn = options->autoAdvance && a->session->auto_advance() && !a->session->ended() &&
                                !a->session->at_cap();
            if (autoOn) {
                const double wait = a->generationStart + period - options->clock();
                if (wait > 0.0)
                    a->queueCv.wait_for(lock, stop, std::chrono::duration<double>(std::min(wait, 0.25)),
                                        [&] { return !a->queue.empty(); });
            }
            else {
                a->queueCv.wait_for(lock, stop, std::chrono::milliseconds(250), [&] { return !a->queue.empty(); });
            }
            if (!a->queue.empty()) {
                task = std::move(a->queue.front());
                a->queue.pop_front();
            }
        }
        if (stop.stop_requested())
            break;
        if (task) {
            task();
        }
        else if (options->autoAdvance && a->session->auto_advance() && !a->session->ended() && !a->session->at_cap() &&
                 options->clock() >= a->generationStart + period) {
            const double t = std::max(a->session->last_time(), options->clock() - a->origin);
            a->session->apply(Advance{}, t);
        }
        if (a->session->current().index != a->lastGeneration) {
            a->generationStart = options->clock();
            a->lastGeneration = a->session->current().index;
            a->publish();
        }
        else if (a->session->ended() && !a->snapshot->ended) {
            a->publish();
        }
    }
}

namespace {

void start_actor(const std::shared_ptr<SessionService::Actor>& actor, const ServiceOptions& options)
{
    actor->lastGeneration = actor->session->current().index;
    actor->generationStart = options.clock();
    actor->publish();
    actor->thread = std::jthread(actor_loop, actor.get(), &options);
}

Session::LineSink file_sink(std::ofstream* file)
{
    return [file](const std::string& line) {
        if (file->is_open()) {
            *file << line << '\n';
            file->flush();
        }
    };
}

} // namespace

std::shared_ptr<SessionService::Actor> SessionService::find(const std::string& id)
{
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

ApiReply SessionService::create_session(const json& body)
{
    if (auto skew = check_schema(body))
        return *skew;
    SessionConfig config;
    try {
        json cfg = body.is_object() && body.contains("config") ? body["config"] : body;
        if (cfg.is_null())
            cfg = json::object();
        if (!cfg.contains("seed"))
            cfg["seed"] = (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();
        config = session_config_from_json(cfg);
        config.validate();
    }
    catch (const std::exception& e) {
        return {400, api_error("bad_request", e.what())};
    }

    auto actor = std::make_shared<Actor>();
    {
        std::lock_guard lock(mutex_);
        actor->id = next_id();
        while (sessions_.contains(actor->id) ||
               (!options_.dataDir.empty() && std::filesystem::exists(options_.dataDir / (actor->id + ".jsonl"))))
            actor->id = next_id();
    }
    if (!options_.dataDir.empty()) {
        actor->logFile.open(options_.dataDir / (actor->id + ".jsonl"), std::ios::trunc);
        if (!actor->logFile)
            return {500, api_error("io_error", "cannot create session log")};
    }
    actor->origin = now();
    actor->session = std::make_unique<Session>(config, file_sink(&actor->logFile));
    start_actor(actor, options_);
    {
        std::lock_guard lock(mutex_);
        sessions_[actor->id] = actor;
    }
    auto reply = get_state(actor->id);
    reply.status = 201;
    return reply;
}

ApiReply SessionService::get_state(const std::string& id)
{
    auto a = find(id);
    if (!a)
        return {404, api_error("not_found", "unknown session " + id)};
    return a->call([&, a] {
        const double period = a->session->config().sim.duration / options_.speed;
        const double progress = std::clamp((now() - a->generationStart) / period, 0.0, 1.0);
        return ApiReply{200, session_state(*a->session, a->id, progress)};
    });
}

ApiReply SessionService::post_action(const std::string& id, const json& body)
{
    if (auto skew = check_schema(body))
        return *skew;
    auto a = find(id);
    if (!a)
        return {404, api_error("not_found", "unknown session " + id)};
    const json actionJson = body.is_object() && body.contains("action") ? body["action"] : body;
    return a->call([&, a]() -> ApiReply {
        Session& s = *a->session;
        if (s.ended())
            return {410, api_error("session_ended", "session has ended")};
        Action action;
        try {
            action = s.action_from_json(actionJson);
        }
        catch (const ParseError& e) {
            return {400, api_error("bad_request", e.what())};
        }
        const double t = std::max(s.last_time(), now() - a->origin);
        const auto result = s.apply(action, t);
        if (s.current().index != a->lastGeneration) {
            a->lastGeneration = s.current().index;
            a->generationStart = now();
            a->publish();
        }
        else if (s.ended()) {
            a->publish();
        }
        const double period = s.config().sim.duration / options_.speed;
        json reply = {{"schemaVersion", kApiSchemaVersion},
                      {"accepted", result.accepted},
                      {"state", session_state(s, a->id, std::clamp((now() - a->generationStart) / period, 0.0, 1.0))}};
        if (!result.accepted) {
            reply["reason"] = result.reason;
            return {409, reply};
        }
        return {200, reply};
    });
}

ApiReply SessionService::export_design(const std::string& id, const std::string& designRef)
{
    auto a = find(id);
    if (!a)
        return {404, api_error("not_found", "unknown session " + id)};
    DesignRef ref;
    try {
        ref = DesignRef::parse(designRef);
    }
    catch (const std::exception& e) {
        return {400, api_error("bad_request", e.what())};
    }
    return a->call([&, a]() -> ApiReply {
        const CarGenome* g = a->session->find_genome(ref);
        if (!g)
            return {404, api_error("not_found", "unknown design " + designRef)};
        std::ostringstream text;
        write_design(text, *g, a->session->config().design);
        return {200,
                {{"schemaVersion", kApiSchemaVersion}, {"design", ref.str()}, {"text", text.str()}, {"genes", to_genes(*g)}}};
    });
}

ApiReply SessionService::import_design(const std::string& id, const std::string& designText)
{
    auto a = find(id);
    if (!a)
        return {404, api_error("not_found", "unknown session " + id)};
    DesignFile file;
    try {
        std::istringstream in(designText);
        file = read_design(in);
    }
    catch (const VersionError& e) {
        return {409, api_error("version_skew", e.what())};
    }
    catch (const std::exception& e) {
        return {400, api_error("bad_request", e.what())};
    }
    return a->call([&, a]() -> ApiReply {
        Session& s = *a->session;
        if (s.ended())
            return {410, api_error("session_ended", "session has ended")};
        const auto& cfg = s.config().design;
        if (file.config.nv != cfg.nv || file.config.nw != cfg.nw)
            return {400, api_error("incompatible_design", "design has nv=" + std::to_string(file.config.nv) +
                                                              ", nw=" + std::to_string(file.config.nw) +
                                                              " but the session uses nv=" + std::to_string(cfg.nv) +
                                                              ", nw=" + std::to_string(cfg.nw))};
        const auto result = s.apply(ImportDesign{file.genome}, std::max(s.last_time(), now() - a->origin));
        json reply = {{"schemaVersion", kApiSchemaVersion},
                      {"accepted", result.accepted},
                      {"state", session_state(s, a->id, 0.0)}};
        if (!result.accepted) {
            reply["reason"] = result.reason;
            return {409, reply};
        }
        return {200, reply};
    });
}

ApiReply SessionService::end_session(const std::string& id)
{
    auto a = find(id);
    if (!a)
        return {404, api_error("not_found", "unknown session " + id)};
    return a->call([&, a]() -> ApiReply {
        Session& s = *a->session;
        if (!s.ended()) {
            s.apply(EndSession{}, std::max(s.last_time(), now() - a->origin));
            a->publish();
        }
        return {200,
                {{"schemaVersion", kApiSchemaVersion},
                 {"sessionId", a->id},
                 {"metrics", to_json(compute_metrics(s.log(), a->id))}}};
    });
}

ApiReply SessionService::list_sessions()
{
    json ids = json::array();
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, actor] : sessions_)
            ids.push_back(id);
    }
    return {200, {{"schemaVersion", kApiSchemaVersion}, {"sessions", ids}}};
}

ApiReply SessionService::stream_frames(const std::string& id, const std::function<bool(const json&)>& sink,
                                       std::stop_token stop, bool paced, bool once)
{
    auto a = find(id);
    if (!a)
        return {404, api_error("not_found", "unknown session " + id)};
    const auto framePeriod = std::chrono::duration<double>(0.1 / options_.speed);
    auto set = a->current_snapshot();
    while (!stop.stop_requested()) {
        if (!sink({{"type", "generationStarted"}, {"generation", set->generation}}))
            return {200, json::object()};
        bool interrupted = false;
        for (const auto& frame : set->frames) {
            if (stop.stop_requested() || !sink(frame))
                return {200, json::object()};
            if (paced) {
                std::unique_lock lock(a->snapMutex);
                if (a->snapCv.wait_for(lock, stop, framePeriod,
                                       [&] { return a->snapshot->generation != set->generation; })) {
                    interrupted = true;
                    break;
                }
            }
        }
        if (!interrupted && !sink(set->complete))
            return {200, json::object()};
        if (once)
            break;
        {
            std::unique_lock lock(a->snapMutex);
            a->snapCv.wait(lock, stop, [&] { return a->snapshot->generation != set->generation || a->snapshot->ended; });
            if (stop.stop_requested())
                break;
            set = a->snapshot;
        }
        if (set->ended) {
            sink({{"type", "sessionEnded"}});
            break;
        }
    }
    return {200, json::object()};
}

bool SessionService::with_session(const std::string& id, const std::function<void(const Session&)>& fn)
{
    auto a = find(id);
    if (!a)
        return false;
    a->call([&, a] { fn(*a->session); });
    return true;
}

std::size_t SessionService::restore()
{
    if (options_.dataDir.empty() || !std::filesystem::is_directory(options_.dataDir))
        return 0;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(options_.dataDir))
        if (e.is_regular_file() && e.path().extension() == ".jsonl")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::size_t restored = 0;
    for (const auto& path : files) {
        const std::string id = path.stem().string();
        if (find(id))
            continue;
        // Keep the intact prefix of a log torn by a crash.
        std::ifstream in(path);
        std::ostringstream kept;
        std::string line;
        std::size_t lines = 0;
        while (std::getline(in, line)) {
            if (lines > 0 && !json::accept(line))
                break;
            kept << line << '\n';
            ++lines;
        }
        in.close();
        SessionLog log;
        try {
            std::istringstream text(kept.str());
            log = SessionLog::read(text);
        }
        catch (const std::exception&) {
            continue;  // not a session log
        }
        auto actor = std::make_shared<Actor>();
        actor->id = id;
        try {
            actor->session = std::make_unique<Session>(restore_session(log));
        }
        catch (const std::exception&) {
            continue;
        }
        // Rewrite so the file matches the rebuilt session exactly, then keep appending.
        {
            std::ofstream out(path, std::ios::trunc);
            out << actor->session->log().str();
        }
        actor->logFile.open(path, std::ios::app);
        actor->session->set_sink(file_sink(&actor->logFile));
        actor->origin = now() - actor->session->last_time();
        start_actor(actor, options_);
        {
            std::lock_guard lock(mutex_);
            sessions_[id] = actor;
            if (id.size() > 1 && id[0] == 's')
                try {
                    counter_ = std::max<std::uint64_t>(counter_, std::stoull(id.substr(1)));
                }
                catch (const std::exception&) {
                }
        }
        ++restored;
    }
    return restored;
}

} // namespace cardesign
