#include <benchmark/benchmark.h>

#include <vector>

#include "aerocomm/kernels.hpp"

using namespace aerocomm;

namespace
{
std::vector<Particle> spray(std::size_t n)
{
    std::vector<Particle> out(n);
    CounterRng rng(stream_key(11, 77));
    for (std::size_t i = 0; i < n; ++i)
    {
        Particle& p = out[i];
        p.id = i;
        p.diameter = 5e-6 + 200e-6 * uniform01(rng);
        p.initial_diameter = p.diameter;
        p.position = {0, 0, 1.64};
        p.origin = p.position;
        p.velocity = {0.5 * standard_normal(rng), 4.0 + 4.0 * uniform01(rng), 0.3 * standard_normal(rng)};
        p.rng = CounterRng(stream_key(11, StreamTag::transport, i));
    }
    return out;
}

struct Setup
{
    std::vector<JetField> jets;
    Environment env;
    TransportContext ctx;

    Setup() : jets(1), ctx{env, {}, StepControl{}}
    {
        jets[0].origin = {0, 0, 1.64};
        ctx.jets = jets;
    }
};

void serial(benchmark::State& state)
{
    Setup s;
    auto const initial = spray(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
    {
        auto particles = initial;
        advance_particles_serial(particles, s.ctx, 0.0, 0.5);
        benchmark::DoNotOptimize(particles.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void parallel(benchmark::State& state)
{
    Setup s;
    auto const initial = spray(static_cast<std::size_t>(state.range(0)));
    int threads = static_cast<int>(state.range(1));
    for (auto _ : state)
    {
        auto particles = initial;
        advance_particles_parallel(particles, s.ctx, 0.0, 0.5, threads);
        benchmark::DoNotOptimize(particles.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(serial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(parallel)
    ->ArgsProduct({{1000, 10000}, {1, 2, 4, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
