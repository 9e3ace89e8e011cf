#include <doctest.h>

#include <algorithm>
#include <set>

#include "cardesign/error.hpp"
#include "cardesign/session.hpp"
#include "support.hpp"

using namespace cardesign;

namespace {

// Field session with short runs to keep the suite fast.
SessionConfig quick_field(std::uint64_t seed)
{
    auto c = SessionConfig::field(seed);
    c.sim.duration = 4.0;
    return c;
}

std::vector<std::string> event_types(const Session& s)
{
    std::vector<std::string> out;
    for (const auto& e : s.log().events)
        out.push_back(e["type"].get<std::string>());
    return out;
}

const nlohmann::json& last_event(const Session& s) { return s.log().events.back(); }

DesignRef first_elite(const Session& s, ViewId view)
{
    for (const auto& slot : s.view_candidates(view))
        if (slot)
            return *slot;
    FAIL("view has no candidates");
    return {};
}

} // namespace

TEST_CASE("a new session evaluates generation 1 and logs it")
{
    std::vector<std::string> lines;
    Session s(quick_field(1), [&](const std::string& l) { lines.push_back(l); });
    CHECK(s.current().index == 1);
    CHECK(s.current().designs.size() == kGenerationSize);
    CHECK(s.current().results.has_value());
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == s.log().header_line());
    CHECK(event_types(s) == std::vector<std::string>{"GenerationEvaluated"});
    CHECK(s.current_view() == ViewId::Live);
    CHECK(s.history().size() <= kGenerationSize);
}

TEST_CASE("nav order is a permutation of the configured views")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Session s(quick_field(seed));
        auto a = s.nav_order(), b = s.config().views;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }
}

TEST_CASE("Test on an archive design injects it into the next generation")
{
    Session s(quick_field(2));
    const auto ref = first_elite(s, ViewId::SpeedElites);
    const CarGenome genome = *s.find_genome(ref);
    REQUIRE(s.apply(Select{ViewId::SpeedElites, ref, SelectKind::Test}, 1.0).accepted);
    CHECK(s.test_marked(ref));
    REQUIRE(s.apply(Advance{}, 2.0).accepted);
    CHECK(s.current().index == 2);
    CHECK(s.current().designs[0].genome == genome);
    CHECK(s.current().designs[0].origin == Origin::ElitePick);
    CHECK_FALSE(s.test_marked(ref));
}

TEST_CASE("Test on a live design is a user injection; toggling twice cancels")
{
    Session s(quick_field(3));
    const DesignRef ref{1, 4};
    s.apply(Select{ViewId::Live, ref, SelectKind::Test}, 1.0);
    s.apply(Select{ViewId::Live, ref, SelectKind::Test}, 1.5);
    CHECK_FALSE(s.test_marked(ref));
    s.apply(Select{ViewId::Live, ref, SelectKind::Test}, 2.0);
    s.apply(Advance{}, 3.0);
    CHECK(s.current().designs[0].origin == Origin::UserInjected);
    CHECK(s.current().designs[0].genome == s.generations()[0].designs[4].genome);
    CHECK(s.current().designs[1].origin == Origin::Evolved);
}

TEST_CASE("toggling Use twice is a no-op")
{
    Session a(quick_field(4)), b(quick_field(4));
    const DesignRef ref{1, 7};
    const auto before = a.current().flags.use;
    a.apply(Select{ViewId::Live, ref, SelectKind::Use}, 1.0);
    CHECK_FALSE(a.use_marked(ref));
    a.apply(Select{ViewId::Live, ref, SelectKind::Use}, 2.0);
    CHECK(a.use_marked(ref));
    CHECK(a.current().flags.use == before);
    a.apply(Advance{}, 3.0);
    b.apply(Advance{}, 3.0);
    for (std::size_t i = 0; i < kGenerationSize; ++i)
        CHECK(a.current().designs[i].genome == b.current().designs[i].genome);
}

TEST_CASE("Edit then inject without changes gives the source genome")
{
    Session s(quick_field(5));
    const DesignRef ref{1, 2};
    REQUIRE(s.apply(Edit{ViewId::Live, ref}, 1.0).accepted);
    CHECK(s.current_view() == ViewId::Editor);
    CHECK(s.log().events.back()["type"] == "ViewOpened");
    CHECK(s.log().events.back()["via"] == "edit");
    REQUIRE(s.editor().genome.has_value());
    CHECK(*s.editor().genome == s.current().designs[2].genome);
    REQUIRE(s.apply(InjectEditor{}, 2.0).accepted);
    s.apply(Advance{}, 3.0);
    CHECK(s.current().designs[0].genome == s.generations()[0].designs[2].genome);
}

TEST_CASE("gene edits are validated and logged")
{
    Session s(quick_field(6));
    CHECK_FALSE(s.apply(SetGene{0, 60.0}, 0.5).accepted);  // nothing loaded
    CHECK(last_event(s)["type"] == "ActionRejected");
    s.apply(Edit{ViewId::Live, {1, 0}}, 1.0);
    CHECK(s.apply(SetGene{0, 60.0}, 2.0).accepted);
    CHECK(s.editor().genome->bodyMass == 60.0);
    CHECK(last_event(s)["type"] == "DesignEdited");
    CHECK(last_event(s)["deltas"][0]["gene"] == 0);
    CHECK_FALSE(s.apply(SetGene{0, 1e6}, 3.0).accepted);
    CHECK_FALSE(s.apply(SetGene{999, 1.0}, 3.0).accepted);
    CHECK(s.editor().genome->bodyMass == 60.0);
}

TEST_CASE("stale references are rejected and logged")
{
    Session s(quick_field(7));
    s.apply(Advance{}, 1.0);
    const auto before = s.log().events.size();
    const auto r = s.apply(Select{ViewId::Live, {1, 0}, SelectKind::Test}, 2.0);
    CHECK_FALSE(r.accepted);
    CHECK(r.reason.find("stale") != std::string::npos);
    CHECK(s.log().events.size() == before + 1);
    CHECK(last_event(s)["type"] == "ActionRejected");
    CHECK(last_event(s)["action"]["type"] == "select");
    CHECK_FALSE(s.apply(Edit{ViewId::Live, {9, 0}}, 3.0).accepted);
}

TEST_CASE("timestamps must not go backwards")
{
    Session s(quick_field(8));
    s.apply(OpenView{ViewId::Control}, 5.0);
    CHECK_THROWS_AS(s.apply(OpenView{ViewId::Live}, 4.0), ValidationError);
}

TEST_CASE("archives only hold designs from history and coverage grows")
{
    Session s(quick_field(9));
    std::map<DescriptorKind, std::size_t> prev;
    for (int g = 0; g < 5; ++g) {
        for (auto kind : {DescriptorKind::Speed, DescriptorKind::Wheel, DescriptorKind::Geometry}) {
            const auto& a = s.archive(kind);
            CHECK(a.coverage() >= prev[kind]);
            prev[kind] = a.coverage();
            for (const auto& cell : a.cells())
                if (cell) {
                    const auto* h = s.history().find(cell->ref);
                    REQUIRE(h != nullptr);
                    CHECK(h->fitness == cell->fitness);
                }
        }
        for (const auto& slot : s.view_candidates(ViewId::Control))
            if (slot)
                CHECK(s.history().find(*slot) != nullptr);
        s.apply(Advance{}, g + 1.0);
    }
}

TEST_CASE("over-injection is logged")
{
    Session s(quick_field(10));
    s.apply(Edit{ViewId::Live, {1, 0}}, 0.0);
    for (int i = 0; i < 14; ++i)
        s.apply(InjectEditor{}, 1.0);
    s.apply(Advance{}, 2.0);
    const auto types = event_types(s);
    const auto it = std::find(types.begin(), types.end(), "InjectionOverflow");
    REQUIRE(it != types.end());
    CHECK(s.log().events[static_cast<std::size_t>(it - types.begin())]["dropped"] == 2);
}

TEST_CASE("generation cap and session end")
{
    auto c = quick_field(11);
    c.generationCap = 2;
    Session s(c);
    CHECK(s.apply(Advance{}, 1.0).accepted);
    CHECK(s.at_cap());
    CHECK_FALSE(s.apply(Advance{}, 2.0).accepted);
    CHECK(s.apply(EndSession{}, 3.0).accepted);
    CHECK(s.ended());
    const auto n = s.log().events.size();
    CHECK_FALSE(s.apply(OpenView{ViewId::Control}, 4.0).accepted);
    CHECK(s.log().events.size() == n);
}

TEST_CASE("imported designs must fit the session")
{
    Session s(quick_field(12));
    DesignConfig other;
    other.nv = 5;
    Rng rng(1);
    CHECK_FALSE(s.apply(ImportDesign{random_genome(rng, other)}, 1.0).accepted);
    const auto g = random_genome(rng, s.config().design);
    CHECK(s.apply(ImportDesign{g}, 2.0).accepted);
    CHECK(*s.editor().genome == g);
    CHECK_FALSE(s.editor().source.has_value());
}

TEST_CASE("lab sessions anonymize the insight views")
{
    std::set<std::string> firstLabels;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto c = SessionConfig::lab(seed);
        c.sim.duration = 3.0;
        Session s(c);
        const auto kc = s.view_key(ViewId::Control), kg = s.view_key(ViewId::GeometryElites);
        CHECK(((kc == "Insights 1" && kg == "Insights 2") || (kc == "Insights 2" && kg == "Insights 1")));
        CHECK(s.resolve_view(kc) == ViewId::Control);
        firstLabels.insert(kc);

        s.apply(OpenView{ViewId::Control}, 1.0);
        s.apply(Select{ViewId::GeometryElites, first_elite(s, ViewId::GeometryElites), SelectKind::Test}, 2.0);
        s.apply(Advance{}, 3.0);
        for (const auto& e : s.log().events) {
            const auto text = e.dump();
            CHECK(text.find("Control") == std::string::npos);
            CHECK(text.find("GeometryElites") == std::string::npos);
        }
        for (const auto& key : s.log().header["views"])
            CHECK(key.get<std::string>().find("Elites") == std::string::npos);
        CHECK(s.log().header["sealed"][kc] == "Control");
    }
    CHECK(firstLabels.size() == 2);  // both assignments occur
}

TEST_CASE("lab config is strict")
{
    auto c = SessionConfig::lab(1);
    CHECK_NOTHROW(c.validate());
    c.generationCap = 10;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    auto f = SessionConfig::field(1);
    f.anonymizeViews = true;
    CHECK_THROWS_AS(f.validate(), ValidationError);
    auto d = SessionConfig::field(1);
    d.views = {ViewId::Editor};
    CHECK_THROWS_AS(d.validate(), ValidationError);
}

TEST_CASE("session config JSON round trip")
{
    auto c = SessionConfig::lab(77);
    c.sim.duration = 12.0;
    const auto back = session_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.seed == 77);
    CHECK(back.generationCap == 40);
    CHECK_THROWS_AS(session_config_from_json(nlohmann::json{{"mode", "moon"}}), ParseError);
}

TEST_CASE("actions round trip through JSON")
{
    Session s(quick_field(13));
    Rng rng(2);
    const std::vector<Action> actions{OpenView{ViewId::WheelElites},
                                      Select{ViewId::Live, {1, 3}, SelectKind::Use},
                                      Edit{ViewId::Control, {1, 5}},
                                      SetGene{4, 1.25},
                                      InjectEditor{},
                                      ImportDesign{random_genome(rng, s.config().design)},
                                      Advance{},
                                      SetAutoAdvance{false},
                                      EndSession{}};
    for (const auto& a : actions) {
        const auto j = s.action_to_json(a);
        CHECK(s.action_to_json(s.action_from_json(j)) == j);
    }
    CHECK_THROWS_AS(s.action_from_json(nlohmann::json{{"type", "fly"}}), ParseError);
    CHECK_THROWS_AS(s.action_from_json(nlohmann::json{{"type", "openView"}, {"view", "Nowhere"}}), ParseError);
    CHECK_THROWS_AS(s.action_from_json(nlohmann::json::array()), ParseError);
}

TEST_CASE("same seed and actions give the same log")
{
    auto run = [] {
        Session s(quick_field(14));
        s.apply(OpenView{ViewId::SpeedElites}, 1.0);
        s.apply(Select{ViewId::Live, {1, 1}, SelectKind::Test}, 2.0);
        s.apply(Advance{}, 3.0);
        s.apply(Advance{}, 4.0);
        s.apply(EndSession{}, 5.0);
        return s.log().str();
    };
    CHECK(run() == run());
}
