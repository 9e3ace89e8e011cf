#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "cardesign/error.hpp"
#include "cardesign/http.hpp"
#include "cardesign/metrics.hpp"
#include "cardesign/service.hpp"
#include "support.hpp"

using namespace cardesign;
using nlohmann::json;

namespace {

// Manual clock so progress and timestamps do not depend on wall time.
struct FakeClock {
    std::shared_ptr<std::atomic<double>> now = std::make_shared<std::atomic<double>>(0.0);
    std::function<double()> fn() const
    {
        return [n = now] { return n->load(); };
    }
};

ServiceOptions quiet_options(const FakeClock& clock, std::filesystem::path dir = {})
{
    ServiceOptions o;
    o.dataDir = std::move(dir);
    o.autoAdvance = false;
    o.clock = clock.fn();
    return o;
}

json field_body(std::uint64_t seed)
{
    return {{"config", {{"mode", "field"}, {"seed", seed}, {"sim", {{"duration", 3.0}}}}}};
}

std::string create(SessionService& svc, const json& body)
{
    const auto r = svc.create_session(body);
    REQUIRE(r.status == 201);
    return r.body["sessionId"].get<std::string>();
}

} // namespace

TEST_CASE("create then get_state shows generation 1 with 12 designs")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    const auto id = create(svc, field_body(1));
    const auto r = svc.get_state(id);
    CHECK(r.status == 200);
    CHECK(r.body["generation"] == 1);
    CHECK(r.body["designs"].size() == 12);
    CHECK(r.body["schemaVersion"] == kApiSchemaVersion);
    CHECK(r.body["course"] == "HillClimb");
    CHECK(r.body["geneBounds"].size() == r.body["dimensions"].get<std::size_t>());
    for (const auto& d : r.body["designs"])
        CHECK(d.contains("pose"));
}

TEST_CASE("Test then advance shows the injected design")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    const auto id = create(svc, field_body(2));
    const auto genes = svc.get_state(id).body["designs"][5]["genes"];
    clock.now->store(1.0);
    auto r = svc.post_action(id, {{"type", "select"}, {"view", "Live"}, {"design", "g1.5"}, {"kind", "test"}});
    REQUIRE(r.status == 200);
    CHECK(r.body["state"]["designs"][5]["test"] == true);
    r = svc.post_action(id, {{"action", {{"type", "advance"}}}});
    REQUIRE(r.status == 200);
    const auto state = svc.get_state(id).body;
    CHECK(state["generation"] == 2);
    CHECK(state["designs"][0]["genes"] == genes);
    CHECK(state["designs"][0]["origin"] == "userInjected");
}

TEST_CASE("error statuses")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    CHECK(svc.get_state("s999999").status == 404);
    CHECK(svc.post_action("nope", {{"type", "advance"}}).status == 404);
    const auto id = create(svc, field_body(3));
    CHECK(svc.post_action(id, {{"type", "fly"}}).status == 400);
    CHECK(svc.post_action(id, {{"type", "select"}}).status == 400);
    CHECK(svc.post_action(id, {{"schemaVersion", 99}, {"action", {{"type", "advance"}}}}).status == 409);
    CHECK(svc.create_session({{"schemaVersion", 2}}).status == 409);
    CHECK(svc.create_session({{"config", {{"mode", "lab"}, {"design", {{"nv", 5}}}}}}).status == 400);
    const auto rejected = svc.post_action(id, {{"type", "select"}, {"view", "Live"}, {"design", "g7.0"}, {"kind", "use"}});
    CHECK(rejected.status == 409);
    CHECK(rejected.body["accepted"] == false);
    CHECK(svc.export_design(id, "garbage").status == 400);
    CHECK(svc.export_design(id, "g4.0").status == 404);
    CHECK(svc.end_session(id).status == 200);
    CHECK(svc.post_action(id, {{"type", "advance"}}).status == 410);
}

TEST_CASE("design export and import")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    const auto a = create(svc, field_body(4));
    const auto b = create(svc, field_body(5));
    const auto exported = svc.export_design(a, "g1.3");
    REQUIRE(exported.status == 200);
    const auto text = exported.body["text"].get<std::string>();
    const auto r = svc.import_design(b, text);
    REQUIRE(r.status == 200);
    CHECK(r.body["state"]["editor"]["genes"] == exported.body["genes"]);

    // A lab session has nv = 7, nw = 4 as well, but a 5-vertex design does not fit.
    DesignConfig small;
    small.nv = 5;
    Rng rng(1);
    std::ostringstream other;
    write_design(other, random_genome(rng, small), small);
    const auto bad = svc.import_design(b, other.str());
    CHECK(bad.status == 400);
    CHECK(bad.body["error"]["code"] == "incompatible_design");
    CHECK(svc.import_design(b, "cardesign-design 7\n").status == 409);
    CHECK(svc.import_design(b, "junk").status == 400);
}

TEST_CASE("parallel sessions are independent")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    const auto a = create(svc, field_body(6));
    const auto b = create(svc, field_body(6));
    CHECK(a != b);
    std::thread ta([&] {
        for (int i = 0; i < 3; ++i)
            svc.post_action(a, {{"type", "advance"}});
    });
    std::thread tb([&] { svc.post_action(b, {{"type", "openView"}, {"view", "Control"}}); });
    ta.join();
    tb.join();
    const auto sa = svc.get_state(a).body, sb = svc.get_state(b).body;
    CHECK(sa["generation"] == 4);
    CHECK(sb["generation"] == 1);
    CHECK(sb["currentView"] == "Control");
    CHECK(sa["currentView"] == "Live");
    // Same seed, so the untouched session still matches a's first generation.
    std::string aLog, bLog;
    svc.with_session(a, [&](const Session& s) { aLog = s.log().events.front().dump(); });
    svc.with_session(b, [&](const Session& s) { bLog = s.log().events.front().dump(); });
    CHECK(aLog == bLog);
    CHECK(svc.list_sessions().body["sessions"].size() == 2);
}

TEST_CASE("lab state hides which insight view is which")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    const auto id = create(svc, {{"config", {{"mode", "lab"}, {"seed", 9}, {"sim", {{"duration", 3.0}}}}}});
    std::string elite;
    svc.with_session(id, [&](const Session& s) {
        for (const auto& slot : s.view_candidates(ViewId::GeometryElites))
            if (slot) {
                elite = slot->str();
                break;
            }
    });
    std::string label;
    svc.with_session(id, [&](const Session& s) { label = s.view_key(ViewId::GeometryElites); });
    REQUIRE(svc.post_action(id, {{"type", "select"}, {"view", label}, {"design", elite}, {"kind", "test"}}).status ==
            200);
    svc.post_action(id, {{"type", "advance"}});
    const auto text = svc.get_state(id).body.dump();
    for (const char* word : {"Control", "Elite", "elite", "Speed", "Geometry", "HillClimb"})
        CHECK_MESSAGE(text.find(word) == std::string::npos, word);
    CHECK(text.find("Insights 1") != std::string::npos);
    CHECK(svc.get_state(id).body["designs"][0]["origin"] == "injected");
}

TEST_CASE("restart reloads logs with identical metrics")
{
    const auto dir = testing::scratch_dir("service-restart");
    FakeClock clock;
    std::string id, ended;
    json liveMetrics, endedMetrics;
    {
        SessionService svc(quiet_options(clock, dir));
        id = create(svc, field_body(10));
        ended = create(svc, field_body(11));
        clock.now->store(2.0);
        svc.post_action(id, {{"type", "openView"}, {"view", "WheelElites"}});
        clock.now->store(3.0);
        svc.post_action(id, {{"type", "edit"}, {"view", "Live"}, {"design", "g1.1"}});
        svc.post_action(id, {{"type", "injectEditor"}});
        clock.now->store(5.0);
        svc.post_action(id, {{"type", "advance"}});
        svc.with_session(id, [&](const Session& s) { liveMetrics = to_json(compute_metrics(s.log(), id)); });
        endedMetrics = svc.end_session(ended).body["metrics"];
    }
    SessionService again(quiet_options(clock, dir));
    CHECK(again.restore() == 2);
    json reloaded;
    again.with_session(id, [&](const Session& s) { reloaded = to_json(compute_metrics(s.log(), id)); });
    CHECK(reloaded == liveMetrics);
    CHECK(again.get_state(id).body["generation"] == 2);
    CHECK(again.end_session(ended).body["metrics"] == endedMetrics);
    // The restored session keeps accepting actions and appending to its log.
    CHECK(again.post_action(id, {{"type", "advance"}}).status == 200);
}

TEST_CASE("restore keeps the valid prefix of a torn log")
{
    const auto dir = testing::scratch_dir("service-torn");
    FakeClock clock;
    std::string id;
    {
        SessionService svc(quiet_options(clock, dir));
        id = create(svc, field_body(12));
        svc.post_action(id, {{"type", "advance"}});
    }
    {
        std::ofstream(dir / (id + ".jsonl"), std::ios::app) << "{\"t\": 9, \"type\": \"Selec";
    }
    SessionService again(quiet_options(clock, dir));
    CHECK(again.restore() == 1);
    CHECK(again.get_state(id).body["generation"] == 2);
}

TEST_CASE("frame stream emits a full generation")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    const auto id = create(svc, field_body(13));
    std::vector<json> events;
    const auto r = svc.stream_frames(
        id, [&](const json& e) {
            events.push_back(e);
            return true;
        },
        {}, false, true);
    CHECK(r.status == 200);
    REQUIRE(events.size() >= 3);
    CHECK(events.front()["type"] == "generationStarted");
    CHECK(events.back()["type"] == "generationComplete");
    std::size_t frames = 0;
    svc.with_session(id, [&](const Session& s) { frames = frame_count(s); });
    CHECK(events.size() == frames + 2);
    CHECK(svc.stream_frames("none", [](const json&) { return true; }).status == 404);
}

TEST_CASE("HTTP round trip")
{
    FakeClock clock;
    SessionService svc(quiet_options(clock));
    HttpServer server(svc);
    const int port = server.bind_any("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    while (!server.running())
        std::this_thread::sleep_for(std::chrono::milliseconds(5));

    httplib::Client cli("127.0.0.1", port);
    auto res = cli.Get("/api/v1/health");
    REQUIRE(res);
    CHECK(res->status == 200);

    res = cli.Post("/api/v1/sessions", field_body(14).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    const auto id = json::parse(res->body)["sessionId"].get<std::string>();

    res = cli.Get("/api/v1/sessions/" + id);
    REQUIRE(res);
    CHECK(json::parse(res->body)["designs"].size() == 12);

    res = cli.Post("/api/v1/sessions/" + id + "/actions", "{oops", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"]["code"] == "bad_request");

    res = cli.Get("/api/v1/sessions/s424242");
    REQUIRE(res);
    CHECK(res->status == 404);

    res = cli.Get("/api/v1/sessions/" + id + "/designs/g1.0?format=text");
    REQUIRE(res);
    CHECK(res->body.rfind("cardesign-design 1", 0) == 0);
    res = cli.Post("/api/v1/sessions/" + id + "/designs", res->body, "text/plain");
    REQUIRE(res);
    CHECK(res->status == 200);

    res = cli.Get("/api/v1/sessions/" + id + "/stream?paced=0&once=1");
    REQUIRE(res);
    CHECK(res->get_header_value("Content-Type").find("text/event-stream") == 0);
    CHECK(res->body.find("event: generationComplete") != std::string::npos);

    res = cli.Post("/api/v1/sessions/" + id + "/end", "", "application/json");
    REQUIRE(res);
    CHECK(json::parse(res->body)["metrics"]["session"] == id);

    server.stop();
    t.join();
}
