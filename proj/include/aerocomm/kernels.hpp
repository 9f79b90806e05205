#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include "transport.hpp"

namespace aerocomm
{
//! Read-only inputs shared by every particle during one global step.
struct TransportContext
{
    Environment env;
    std::span<JetField const> jets;  //!< indexed by Particle::event
    StepControl control;
};

//---------------------------------------------------------------------------//
/*!
 * Advance one airborne particle from t_begin to t_end with adaptive substeps.
 *
 * Particles that settle mid-interval stop at their deposition point.
 */
void advance_particle(Particle& p,
                      TransportContext const& ctx,
                      double t_begin,
                      double t_end);

//! Reference implementation: plain loop over all airborne particles.
void advance_particles_serial(std::span<Particle> particles,
                              TransportContext const& ctx,
                              double t_begin,
                              double t_end);

//! OpenMP version; results are identical to the serial loop.
void advance_particles_parallel(std::span<Particle> particles,
                                TransportContext const& ctx,
                                double t_begin,
                                double t_end,
                                int num_threads);

//! Resolve a thread count request: 0 means "OpenMP default".
int resolve_threads(int requested);

//---------------------------------------------------------------------------//
/*!
 * Run `fn(i)` for i in [0, n) on `num_threads` OpenMP threads.
 *
 * The first exception by index is rethrown after the loop, so error
 * reporting does not depend on scheduling.
 */
template<class F>
void parallel_for(std::size_t n, int num_threads, F&& fn)
{
    std::vector<std::exception_ptr> errors(n);
    bool failed = false;
    long long const count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64) num_threads(num_threads) \
    reduction(|| : failed)
    for (long long i = 0; i < count; ++i)
    {
        try
        {
            fn(static_cast<std::size_t>(i));
        }
        catch (...)
        {
            errors[i] = std::current_exception();
            failed = true;
        }
    }
    if (failed)
    {
        for (auto const& e : errors)
        {
            if (e)
                std::rethrow_exception(e);
        }
    }
}

}  // namespace aerocomm
