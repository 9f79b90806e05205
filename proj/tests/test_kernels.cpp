#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "aerocomm/kernels.hpp"

using namespace aerocomm;

namespace
{
std::vector<Particle> spray(std::size_t n, std::uint64_t seed)
{
    std::vector<Particle> out(n);
    CounterRng rng(stream_key(seed, 77));
    for (std::size_t i = 0; i < n; ++i)
    {
        Particle& p = out[i];
        p.id = i;
        p.diameter = 20e-6 + 150e-6 * uniform01(rng);
        p.initial_diameter = p.diameter;
        p.position = {0, 0, 0.8};
        p.origin = p.position;
        p.velocity = {0.5 * standard_normal(rng), 4.0 + 2.0 * uniform01(rng), 0.3 * standard_normal(rng)};
        p.event = static_cast<std::uint32_t>(i % 2);
        p.rng = CounterRng(stream_key(seed, StreamTag::transport, i));
    }
    return out;
}

bool same(std::vector<Particle> const& a, std::vector<Particle> const& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        if (a[i].position != b[i].position || a[i].velocity != b[i].velocity
            || a[i].state != b[i].state || a[i].settled_at != b[i].settled_at
            || a[i].rng != b[i].rng || a[i].dt_hint != b[i].dt_hint)
        {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("parallel advance matches the serial reference bit for bit")
{
    std::vector<JetField> jets(2);
    jets[0].origin = {0, 0, 0.8};
    jets[1].origin = {0, 0, 0.8};
    jets[1].start_time = 0.05;
    Environment env;
    env.evaporation_enabled = true;
    TransportContext ctx{env, jets, StepControl{}};

    auto reference = spray(600, 3);
    auto parallel2 = reference;
    auto parallel8 = reference;
    double t = 0.0;
    for (int step = 0; step < 150; ++step, t += 0.01)
    {
        advance_particles_serial(reference, ctx, t, t + 0.01);
        advance_particles_parallel(parallel2, ctx, t, t + 0.01, 2);
        advance_particles_parallel(parallel8, ctx, t, t + 0.01, 8);
    }
    CHECK(same(reference, parallel2));
    CHECK(same(reference, parallel8));

    std::size_t landed = 0;
    for (auto const& p : reference)
        landed += p.state == ParticleState::deposited;
    CHECK(landed > 0);
    CHECK(landed < reference.size());
}

TEST_CASE("one long interval equals many short ones only through the stream")
{
    std::vector<JetField> jets(2);
    TransportContext ctx{Environment{}, jets, StepControl{}};
    auto a = spray(50, 9);
    auto b = a;
    advance_particles_serial(a, ctx, 0.0, 0.2);
    advance_particles_serial(b, ctx, 0.0, 0.2);
    CHECK(same(a, b));
}

TEST_CASE("particles are not advanced before their emission time")
{
    std::vector<JetField> jets(1);
    TransportContext ctx{Environment{}, jets, StepControl{}};
    auto ps = spray(1, 1);
    ps[0].event = 0;
    ps[0].emitted_at = 0.5;
    Vec3 x0 = ps[0].position;
    advance_particles_serial(ps, ctx, 0.0, 0.5);
    CHECK(ps[0].position == x0);
    advance_particles_serial(ps, ctx, 0.5, 0.51);
    CHECK(ps[0].position != x0);
}

TEST_CASE("parallel_for rethrows the lowest-index failure")
{
    for (int threads : {1, 4})
    {
        try
        {
            parallel_for(1000, threads, [](std::size_t i) {
                if (i == 700 || i == 123 || i == 999)
                    throw std::runtime_error(std::to_string(i));
            });
            FAIL("expected an exception");
        }
        catch (std::runtime_error const& e)
        {
            CHECK(std::string(e.what()) == "123");
        }
    }
}

TEST_CASE("thread count resolution")
{
    CHECK(resolve_threads(3) == 3);
    CHECK(resolve_threads(0) >= 1);
}
