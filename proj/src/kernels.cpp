#include "aerocomm/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#    include <omp.h>
#endif

namespace aerocomm
{
void advance_particle(Particle& p,
                      TransportContext const& ctx,
                      double t_begin,
                      double t_end)
{
    JetField const& jet = ctx.jets[p.event];
    double t = std::max(t_begin, p.emitted_at);
    StepControl control = ctx.control;
    while (p.state == ParticleState::airborne && t < t_end)
    {
        double remaining = t_end - t;
        control.dt_max = std::min(ctx.control.dt_max, remaining);
        StepResult r = step_adaptive(p, ctx.env, jet, t, control);
        p = r.particle;
        // Snap to the interval end to avoid a sliver step from round-off.
        t = (r.dt_used >= remaining) ? t_end : t + r.dt_used;
    }
}

void advance_particles_serial(std::span<Particle> particles,
                              TransportContext const& ctx,
                              double t_begin,
                              double t_end)
{
    for (Particle& p : particles)
    {
        if (p.state == ParticleState::airborne)
            advance_particle(p, ctx, t_begin, t_end);
    }
}

void advance_particles_parallel(std::span<Particle> particles,
                                TransportContext const& ctx,
                                double t_begin,
                                double t_end,
                                int num_threads)
{
    parallel_for(particles.size(), resolve_threads(num_threads), [&](std::size_t i) {
        Particle& p = particles[i];
        if (p.state == ParticleState::airborne)
            advance_particle(p, ctx, t_begin, t_end);
    });
}

int resolve_threads(int requested)
{
    if (requested > 0)
        return requested;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace aerocomm
