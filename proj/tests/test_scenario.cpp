#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "aerocomm/errors.hpp"
#include "aerocomm/scenario.hpp"
#include "oracles.hpp"

using namespace aerocomm;
using aerocomm::test::approx;

namespace
{
EventModel silent()
{
    EventModel m;
    m.breaths_per_minute = 0.0;
    m.speaking.p_silence_to_talk = 0.0;
    m.cough_probability = 0.0;
    m.sneeze_probability = 0.0;
    return m;
}

AgentConfig coughing_emitter()
{
    AgentConfig a;
    a.infected = true;
    a.events = silent();
    a.scheduled = {{0.0, EventKind::cough}};
    return a;
}

AgentConfig bystander(Vec3 at, Vec3 facing = {0, -1, 0})
{
    AgentConfig a;
    a.waypoints = {{0.0, at}};
    a.facing = facing;
    a.events = silent();
    return a;
}

ScenarioConfig single_cough(int particles, std::uint64_t seed = 7)
{
    ScenarioConfig c;
    c.emission.particles_per_event = {0, 0, particles, 0};
    c.agents.push_back(coughing_emitter());
    c.run.duration = 300.0;
    c.run.seed = seed;
    return c;
}

bool same_records(SimulationResult const& a, SimulationResult const& b)
{
    if (a.depositions.size() != b.depositions.size()
        || a.absorptions.size() != b.absorptions.size()
        || a.airborne_at_end.size() != b.airborne_at_end.size()
        || a.events.size() != b.events.size())
    {
        return false;
    }
    for (std::size_t i = 0; i < a.depositions.size(); ++i)
    {
        auto const& x = a.depositions[i];
        auto const& y = b.depositions[i];
        if (x.particle_id != y.particle_id || x.x != y.x || x.y != y.y || x.t != y.t
            || x.diameter != y.diameter || x.infectious != y.infectious)
        {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.absorptions.size(); ++i)
    {
        auto const& x = a.absorptions[i];
        auto const& y = b.absorptions[i];
        if (x.particle_id != y.particle_id || x.receiver != y.receiver
            || x.aperture != y.aperture || x.t != y.t || x.position != y.position)
        {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.airborne_at_end.size(); ++i)
    {
        if (a.airborne_at_end[i].particle_id != b.airborne_at_end[i].particle_id
            || a.airborne_at_end[i].position != b.airborne_at_end[i].position)
        {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.agents.size(); ++i)
    {
        if (a.agents[i].dose != b.agents[i].dose || a.agents[i].infected != b.agents[i].infected)
            return false;
    }
    return true;
}

// Emitter with spontaneous events plus three receivers walking through the
// exhaled cloud.
ScenarioConfig crowd(std::uint64_t seed)
{
    ScenarioConfig c;
    c.emission.particles_per_event = {20, 40, 1500, 0};
    AgentConfig e = coughing_emitter();
    e.events = default_event_model(true);
    e.events.cough_probability = 0.02;
    c.agents.push_back(e);
    AgentConfig r1 = bystander({0.0, 0.6, 1.6});
    AgentConfig r2 = bystander({-1.0, 1.0, 1.5}, {1, 0, 0});
    r2.waypoints.push_back({4.0, {1.0, 1.0, 1.5}});
    AgentConfig r3 = bystander({0.3, 2.5, 1.7});
    r3.waypoints.push_back({3.0, {0.0, 1.2, 1.7}});
    r3.detection_threshold = 5;
    c.agents.push_back(r1);
    c.agents.push_back(r2);
    c.agents.push_back(r3);
    c.run.duration = 4.0;
    c.run.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("receiver trajectory")
{
    AgentConfig a;
    a.waypoints = {{0.0, {0, 0, 0}}};
    CHECK(receiver_position(a, -5.0) == Vec3{0, 0, 0});
    CHECK(receiver_position(a, 100.0) == Vec3{0, 0, 0});

    a.waypoints.push_back({10.0, {10, 0, 0}});
    CHECK(receiver_position(a, 2.5) == Vec3{2.5, 0, 0});
    CHECK(receiver_position(a, 11.0) == Vec3{10, 0, 0});

    a.waypoints.push_back({20.0, {10, 4, 0}});
    Vec3 x = receiver_position(a, 15.0);
    CHECK(x.x == approx(10.0));
    CHECK(x.y == approx(2.0));
}

TEST_CASE("aperture absorption test")
{
    Aperture ap{ApertureKind::face, {}, 0.1, 1.0};
    Vec3 center{0, 1, 1.5};

    SUBCASE("miss")
    {
        CounterRng rng(stream_key(1));
        PathSegment seg{{0.5, 0, 1.5}, {0.5, 2, 1.5}, 0, 0.01};
        CHECK_FALSE(absorb_check(seg, center, ap, rng).has_value());
        CHECK(rng.counter() == 0);
        PathSegment before{{0, 0, 1.5}, {0, 0.5, 1.5}, 0, 0.01};
        CHECK_FALSE(absorb_check(before, center, ap, rng).has_value());
    }
    SUBCASE("through the centre at full gain")
    {
        PathSegment seg{{0, 0, 1.5}, {0, 2, 1.5}, 0, 0.01};
        for (int i = 0; i < 1000; ++i)
        {
            CounterRng rng(stream_key(2, i));
            auto hit = absorb_check(seg, center, ap, rng);
            REQUIRE(hit.has_value());
            CHECK(*hit == approx(0.45));
        }
    }
    SUBCASE("half gain")
    {
        ap.gain = 0.5;
        PathSegment seg{{0, 0, 1.5}, {0, 2, 1.5}, 0, 0.01};
        int hits = 0;
        for (int i = 0; i < 10000; ++i)
        {
            CounterRng rng(stream_key(3, i));
            hits += absorb_check(seg, center, ap, rng).has_value();
        }
        CHECK(std::abs(hits / 1e4 - 0.5) < 0.015);
    }
    SUBCASE("zero gain is transparent")
    {
        ap.gain = 0.0;
        CounterRng rng(stream_key(4));
        PathSegment seg{{0, 0, 1.5}, {0, 2, 1.5}, 0, 0.01};
        CHECK_FALSE(absorb_check(seg, center, ap, rng).has_value());
        CHECK(rng.counter() == 0);
    }
    SUBCASE("segment starting inside")
    {
        CHECK(segment_sphere_entry({0, 1, 1.5}, {0, 3, 1.5}, center, 0.1) == 0.0);
    }
}

TEST_CASE("dose bookkeeping")
{
    AgentOutcome r;
    r.threshold = 10;
    SUBCASE("non-infectious particles add nothing")
    {
        AgentOutcome after = accumulate_dose(r, false, 1.0);
        CHECK(after.dose == 0.0);
        CHECK(after.trace.empty());
    }
    SUBCASE("k infectious particles")
    {
        for (int k = 0; k < 7; ++k)
            r = accumulate_dose(r, true, k);
        CHECK(r.dose == 7.0);
    }
    SUBCASE("interleaved stream")
    {
        CounterRng rng(stream_key(5));
        int infectious = 0;
        for (int k = 0; k < 500; ++k)
        {
            bool inf = bernoulli(rng, 0.3);
            infectious += inf;
            r = accumulate_dose(r, inf, k * 0.01);
        }
        CHECK(r.dose == infectious);
        for (std::size_t i = 1; i < r.trace.size(); ++i)
            CHECK(r.trace[i].dose >= r.trace[i - 1].dose);
    }
    SUBCASE("threshold crossing")
    {
        CHECK_FALSE(infection_decision(r));
        for (int k = 0; k < 9; ++k)
            r = accumulate_dose(r, true, k);
        CHECK_FALSE(infection_decision(r));
        r = accumulate_dose(r, true, 9.5);
        CHECK(r.dose == 10.0);
        CHECK(infection_decision(r));
        CHECK(r.infected_at == 9.5);
        r = accumulate_dose(r, true, 12.0);
        CHECK(r.infected_at == 9.5);
    }
    SUBCASE("outcome is non-increasing in the threshold")
    {
        r.dose = 25;
        bool previous = true;
        for (double theta = 1; theta < 60; theta += 1)
        {
            r.threshold = theta;
            bool now = infection_decision(r);
            CHECK((previous || !now));
            previous = now;
        }
    }
}

TEST_CASE("config validation names the field")
{
    ScenarioConfig c = single_cough(10);
    c.agents[0].apertures[0].radius = -1.0;
    try
    {
        c.validate();
        FAIL("expected a config error");
    }
    catch (ConfigError const& e)
    {
        CHECK(e.path() == "agents[0].apertures[0].radius");
    }

    c = single_cough(10);
    c.agents[0].waypoints = {{1.0, {}}, {1.0, {1, 0, 0}}};
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = single_cough(10);
    c.environment.air_viscosity = 0.0;
    try
    {
        c.validate();
        FAIL("expected a config error");
    }
    catch (ConfigError const& e)
    {
        CHECK(e.path() == "environment.air_viscosity");
    }

    c = single_cough(10);
    c.run.seed.reset();
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(run(c), ConfigError);
}

TEST_CASE("empty scenario")
{
    ScenarioConfig c;
    c.run.seed = 1;
    SimulationResult r = run(c);
    CHECK(r.emitted == 0);
    CHECK(r.depositions.empty());
    CHECK(r.absorptions.empty());
    CHECK(r.events.empty());
    LedgerReport led = ledger_check(r);
    CHECK(led.total.emitted == 0);
    CHECK(led.total.balanced());
}

TEST_CASE("a single cough in an empty room settles completely")
{
    ScenarioConfig c = single_cough(5000);
    SimulationResult r = run(c);
    CHECK(r.emitted == 5000);
    CHECK(r.depositions.size() == 5000);
    CHECK(r.airborne_at_end.empty());
    CHECK(r.absorptions.empty());
    CHECK(r.end_time < c.run.duration);
    for (auto const& d : r.depositions)
        REQUIRE(d.diameter >= c.emission.min_diameter_cutoff);
    for (std::size_t i = 1; i < r.depositions.size(); ++i)
        REQUIRE(r.depositions[i - 1].t <= r.depositions[i].t);
    CHECK(ledger_check(r).total.deposited == 5000);
    REQUIRE(r.symbols.size() == 1);
    CHECK(r.symbols[0].level == 2);
}

TEST_CASE("a face across the jet absorbs")
{
    ScenarioConfig c = single_cough(2000);
    AgentConfig rec = bystander({0, 0.5, 1.64});
    rec.apertures = {{ApertureKind::face, {}, 0.3, 1.0}};
    c.agents.push_back(rec);
    SimulationResult r = run(c);
    CHECK(r.absorptions.size() > 0);
    CHECK(r.absorptions.size() + r.depositions.size() + r.blocked == r.emitted);
    for (auto const& a : r.absorptions)
    {
        CHECK(a.receiver == 1);
        CHECK(norm(a.position - Vec3{0, 0.5, 1.64}) <= 0.3 + 1e-9);
    }
    std::size_t infectious = 0;
    for (auto const& a : r.absorptions)
        infectious += a.infectious;
    CHECK(r.agents[1].dose == static_cast<double>(infectious));
    CHECK(r.agents[1].infected == (infectious >= 100));
    CHECK(r.agents[0].dose == 0.0);
}

TEST_CASE("emitters never absorb their own particles")
{
    ScenarioConfig c = single_cough(500);
    c.agents[0].apertures = {{ApertureKind::face, {0, 0.2, 0}, 0.3, 1.0}};
    SimulationResult r = run(c);
    CHECK(r.absorptions.empty());
    CHECK(r.depositions.size() == 500);
}

TEST_CASE("masked cough ledger")
{
    ScenarioConfig c = single_cough(5000);
    c.agents[0].mask.enabled = true;
    c.agents[0].mask.efficiency = 0.8;
    c.agents.push_back(bystander({0.0, 0.4, 1.5}));
    SimulationResult r = run(c);
    LedgerReport led = ledger_check(r);
    CHECK(std::abs(static_cast<double>(led.total.blocked) - 4000.0) <= 85.0);
    CHECK(led.total.emitted == 5000);
    CHECK(led.total.balanced());
    REQUIRE(led.per_event.size() == 1);
    CHECK(led.per_event[0].balanced());

    SimulationResult broken = r;
    broken.depositions.pop_back();
    CHECK_THROWS_AS(ledger_check(broken), ConsistencyError);
    broken = r;
    broken.emitted += 1;
    CHECK_THROWS_AS(ledger_check(broken), ConsistencyError);
}

TEST_CASE("mixed scenario keeps an exact ledger")
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
    {
        SimulationResult r = run(crowd(seed));
        LedgerReport led = ledger_check(r);
        CHECK(led.total.balanced());
        CHECK(led.total.emitted > 1500);
        for (auto const& a : r.agents)
        {
            for (std::size_t i = 1; i < a.trace.size(); ++i)
                CHECK(a.trace[i].t >= a.trace[i - 1].t);
        }
    }
}

TEST_CASE("results do not depend on the thread count")
{
    ScenarioConfig c = crowd(11);
    c.run.threads = 1;
    SimulationResult one = run(c);
    c.run.threads = 3;
    SimulationResult three = run(c);
    c.run.threads = 8;
    SimulationResult eight = run(c);
    CHECK(same_records(one, three));
    CHECK(same_records(one, eight));
    CHECK(one.absorptions.size() > 0);
    CHECK(one.airborne_at_end.size() > 0);
}

TEST_CASE("seeds matter and repeat")
{
    SimulationResult a = run(crowd(5));
    SimulationResult b = run(crowd(5));
    SimulationResult c = run(crowd(6));
    CHECK(same_records(a, b));
    CHECK_FALSE(same_records(a, c));
}

TEST_CASE("the geometric prefilter only saves time")
{
    ScenarioConfig c = crowd(8);
    c.run.geometric_prefilter = true;
    SimulationResult on = run(c);
    c.run.geometric_prefilter = false;
    SimulationResult off = run(c);
    CHECK(same_records(on, off));
}

TEST_CASE("zero-gain receivers are transparent")
{
    ScenarioConfig with = single_cough(1500, 21);
    ScenarioConfig without = with;
    AgentConfig ghost = bystander({0, 0.6, 1.6});
    for (auto& ap : ghost.apertures)
        ap.gain = 0.0;
    with.agents.push_back(ghost);
    ghost.waypoints = {{0.0, {0.2, 1.5, 1.2}}};
    with.agents.push_back(ghost);
    SimulationResult a = run(with);
    SimulationResult b = run(without);
    CHECK(a.absorptions.empty());
    REQUIRE(a.depositions.size() == b.depositions.size());
    for (std::size_t i = 0; i < a.depositions.size(); ++i)
    {
        CHECK(a.depositions[i].particle_id == b.depositions[i].particle_id);
        CHECK(a.depositions[i].x == b.depositions[i].x);
        CHECK(a.depositions[i].y == b.depositions[i].y);
        CHECK(a.depositions[i].t == b.depositions[i].t);
    }
}

TEST_CASE("infection status only ever switches on")
{
    ScenarioConfig c = crowd(3);
    c.agents[1].detection_threshold = 1;
    c.agents[2].detection_threshold = 1;
    c.agents[3].detection_threshold = 1;
    SimulationResult r = run(c);
    for (std::size_t i = 1; i < r.agents.size(); ++i)
    {
        auto const& a = r.agents[i];
        if (a.trace.empty())
        {
            CHECK_FALSE(a.infected);
            continue;
        }
        CHECK(a.infected);
        CHECK(a.infected_at == a.trace.front().t);
        CHECK(a.dose == a.trace.back().dose);
    }
}
