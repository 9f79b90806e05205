#pragma once

#include <cstdint>

#include "random.hpp"
#include "vec3.hpp"

namespace aerocomm
{
enum class ParticleState : std::uint8_t
{
    airborne,
    deposited,
    absorbed,
    blocked,
};

char const* to_string(ParticleState s);

//---------------------------------------------------------------------------//
/*!
 * One emitted droplet or aerosol.
 *
 * The particle owns its transport random stream so it can be advanced on any
 * thread with identical results. `dt_hint` carries the integrator's step-size
 * proposal between calls.
 */
struct Particle
{
    std::uint64_t id{0};
    Vec3 position;
    Vec3 velocity;
    double diameter{0};          //!< [m]
    double initial_diameter{0};  //!< [m], evaporation residue reference
    double mass_density{997.0};  //!< [kg/m^3]
    bool infectious{false};
    double emitted_at{0};   //!< [s]
    double settled_at{-1};  //!< [s], time of the terminal transition
    ParticleState state{ParticleState::airborne};

    Vec3 origin;               //!< emission point
    std::uint32_t emitter{0};  //!< emitting agent index
    std::uint32_t event{0};    //!< emission event index (also the jet index)

    double dt_hint{0};
    CounterRng rng;

    double volume() const;
    double mass() const;
};

//! Individual force terms, for isolating physics in tests.
struct ForceSwitches
{
    bool gravity{true};
    bool buoyancy{true};
    bool drag{true};
    bool advection{true};
    bool eddy{true};

    friend bool operator==(ForceSwitches const&, ForceSwitches const&)
        = default;
};

//! Ambient air and physics settings. Defaults are the still-air room values.
struct Environment
{
    double air_density{1.2041};      //!< [kg/m^3]
    double air_viscosity{18.13e-6};  //!< [N s/m^2]
    double gravity{9.81};            //!< [m/s^2]
    double t_min{20.0};              //!< ambient air [C]
    double t_max{36.0};              //!< oral cavity [C]
    double eddy_diffusivity_scale{0.03};
    double mixing_length{0.05};  //!< [m]
    bool evaporation_enabled{false};
    double evaporation_rate{1e-9};  //!< d^2-law constant [m^2/s]
    double residue_fraction{0.3};   //!< of the initial diameter
    ForceSwitches forces;

    //! Throw InvalidInput if any invariant is broken.
    void validate() const;

    friend bool operator==(Environment const&, Environment const&) = default;
};

//---------------------------------------------------------------------------//
/*!
 * Steady round jet expelled with a respiratory event.
 *
 * Centerline speed decays as u0 * min(1, K*D0/s) with axial distance s, with a
 * Gaussian radial profile of width s*tan(half_angle) and zero air velocity
 * outside the cone. The flow direction bends upward linearly with s to mimic
 * the warm exhaled air rising.
 */
struct JetField
{
    Vec3 origin;
    Vec3 axis{0, 1, 0};
    double exit_speed{8.0};        //!< u0 [m/s]
    double mouth_diameter{0.02};   //!< D0 [m]
    double half_angle_deg{20.0};   //!< cone half angle [deg]
    double decay_constant{6.0};    //!< K
    double buoyant_rise_rate{0.0}; //!< upward tilt per metre of travel
    double start_time{0};          //!< jet is absent before this [s]

    void validate() const;

    friend bool operator==(JetField const&, JetField const&) = default;
};

struct ForceVector
{
    Vec3 components;  //!< [N]
};

//! Integrator limits for one adaptive step.
struct StepControl
{
    double dt_max{0.01};  //!< [s]
    double tol{1e-6};     //!< per-step position error bound [m]
    double dt_min{1e-7};  //!< underflow guard [s]
};

struct StepResult
{
    Particle particle;
    double dt_used{0};
};

//---------------------------------------------------------------------------//
// Physics
//---------------------------------------------------------------------------//

//! Particle Reynolds number rho_air |v_rel| d / mu.
double reynolds_number(double diameter, double rel_speed, Environment const& env);

//! Schiller-Naumann drag multiplier on Stokes drag.
double drag_correction(double reynolds);

//! Stokes settling speed rho_p d^2 g / (18 mu).
double stokes_terminal_speed(double diameter,
                             double mass_density,
                             Environment const& env);

ForceVector
drag_force(Particle const& p, Vec3 const& air_velocity, Environment const& env);

//! Gravity, buoyancy and drag against the local jet velocity.
ForceVector net_force(Particle const& p,
                      Environment const& env,
                      JetField const& jet,
                      double t);

Vec3 jet_velocity(JetField const& jet, Vec3 const& x, double t);

//! Isotropic turbulent random-walk displacement over dt.
Vec3 eddy_displacement(CounterRng& rng,
                       double local_air_speed,
                       Environment const& env,
                       double dt);

//! d^2-law shrinkage, clamped at the residue diameter.
Particle evaporate(Particle p, Environment const& env, double dt);

//---------------------------------------------------------------------------//
/*!
 * Advance an airborne particle by one accepted adaptive step.
 *
 * Uses the Dormand-Prince 5(4) pair with the embedded estimate applied to
 * position. Eddy displacement and evaporation are applied after the
 * deterministic substep. A floor crossing deposits the particle at the
 * interpolated crossing point and time.
 */
StepResult step_adaptive(Particle const& p,
                         Environment const& env,
                         JetField const& jet,
                         double t,
                         StepControl const& control);

//! Range of a frictionless horizontal throw: v * sqrt(2 h0 / g).
double max_throw_distance(double v, double h0, double g);

}  // namespace aerocomm
