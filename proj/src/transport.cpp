#include "aerocomm/transport.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "aerocomm/errors.hpp"

namespace aerocomm
{
namespace
{
constexpr double pi = std::numbers::pi;

double sphere_volume(double d) { return pi / 6.0 * d * d * d; }

void require_finite(double v, char const* what)
{
    if (!std::isfinite(v))
        throw InvalidInput(std::string("non-finite ") + what);
}

// Drag force from the raw quantities; shared by the public call and the
// integrator's right-hand side.
Vec3 drag_from(double d, Vec3 const& v_rel, Environment const& env)
{
    double speed = norm(v_rel);
    if (speed == 0.0)
        return {};
    double re = reynolds_number(d, speed, env);
    return v_rel * (-3.0 * pi * env.air_viscosity * d * drag_correction(re));
}

struct Kinematics
{
    Vec3 x;
    Vec3 v;
};

Vec3 acceleration(double d,
                  double rho_p,
                  Kinematics const& s,
                  Environment const& env,
                  JetField const& jet,
                  double t)
{
    double volume = sphere_volume(d);
    double mass = rho_p * volume;
    Vec3 force;
    if (env.forces.gravity)
        force.z -= mass * env.gravity;
    if (env.forces.buoyancy)
        force.z += env.air_density * volume * env.gravity;
    if (env.forces.drag)
    {
        Vec3 air = env.forces.advection ? jet_velocity(jet, s.x, t) : Vec3{};
        force += drag_from(d, s.v - air, env);
    }
    return force * (1.0 / mass);
}

// Dormand-Prince 5(4) tableau
constexpr std::array<double, 7> dp_c{
    0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr std::array<double, 7> dp_b5{
    35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr std::array<double, 7> dp_b4{5179.0 / 57600,
                                      0.0,
                                      7571.0 / 16695,
                                      393.0 / 640,
                                      -92097.0 / 339200,
                                      187.0 / 2100,
                                      1.0 / 40};

struct TrialStep
{
    Kinematics end;
    double error{0};  // max-norm position error estimate
};

TrialStep dormand_prince(double d,
                         double rho_p,
                         Kinematics const& start,
                         Environment const& env,
                         JetField const& jet,
                         double t,
                         double dt)
{
    std::array<Vec3, 7> kx;
    std::array<Vec3, 7> kv;
    for (int i = 0; i < 7; ++i)
    {
        Kinematics stage = start;
        for (int j = 0; j < i; ++j)
        {
            stage.x += kx[j] * (dt * dp_a[i][j]);
            stage.v += kv[j] * (dt * dp_a[i][j]);
        }
        kx[i] = stage.v;
        kv[i] = acceleration(d, rho_p, stage, env, jet, t + dp_c[i] * dt);
    }
    TrialStep result{start, 0.0};
    Vec3 err;
    for (int i = 0; i < 7; ++i)
    {
        result.end.x += kx[i] * (dt * dp_b5[i]);
        result.end.v += kv[i] * (dt * dp_b5[i]);
        err += kx[i] * (dt * (dp_b5[i] - dp_b4[i]));
    }
    result.error = std::max({std::abs(err.x), std::abs(err.y), std::abs(err.z)});
    if (!std::isfinite(result.error) || !is_finite(result.end.x)
        || !is_finite(result.end.v))
    {
        result.error = std::numeric_limits<double>::infinity();
    }
    return result;
}

// Velocity relaxation time under drag. Explicit steps much longer than this
// oscillate about the local equilibrium velocity while the position error
// estimate stays small, so the step is capped at a multiple of it.
double relaxation_time(Particle const& p, Environment const& env, JetField const& jet, double t)
{
    Vec3 air = env.forces.advection ? jet_velocity(jet, p.position, t) : Vec3{};
    double re = reynolds_number(p.diameter, norm(p.velocity - air), env);
    return p.mass_density * p.diameter * p.diameter
           / (18.0 * env.air_viscosity * drag_correction(re));
}

constexpr double relaxation_steps = 2.0;

// Cubic Hermite interpolation of the accepted step at fraction theta.
double hermite(double y0, double dy0, double y1, double dy1, double dt, double s)
{
    double s2 = s * s;
    double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * dt * dy0
           + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * dt * dy1;
}

// Fraction of the step at which the interpolated height first reaches zero.
double floor_crossing(Kinematics const& a, Kinematics const& b, double dt)
{
    if (a.x.z <= 0.0)
        return 0.0;
    auto height = [&](double s) {
        return hermite(a.x.z, a.v.z, b.x.z, b.v.z, dt, s);
    };
    // The cubic can dip below zero before the endpoint; locate the first
    // sign change on a coarse scan, then bisect.
    constexpr int scan = 16;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 1; i <= scan; ++i)
    {
        double s = static_cast<double>(i) / scan;
        if (height(s) <= 0.0)
        {
            hi = s;
            break;
        }
        lo = s;
    }
    for (int iter = 0; iter < 60 && hi - lo > 1e-15; ++iter)
    {
        double mid = 0.5 * (lo + hi);
        if (height(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

void deposit(Particle& p, Vec3 const& at, double when)
{
    p.position = at;
    p.position.z = 0.0;
    p.velocity = {};
    p.state = ParticleState::deposited;
    p.settled_at = when;
}

}  // namespace

//---------------------------------------------------------------------------//
char const* to_string(ParticleState s)
{
    switch (s)
    {
        case ParticleState::airborne:
            return "airborne";
        case ParticleState::deposited:
            return "deposited";
        case ParticleState::absorbed:
            return "absorbed";
        case ParticleState::blocked:
            return "blocked";
    }
    return "?";
}

double Particle::volume() const { return sphere_volume(diameter); }
double Particle::mass() const { return mass_density * volume(); }

void Environment::validate() const
{
    auto positive = [](double v, char const* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidInput(std::string(name) + " must be positive");
    };
    positive(air_density, "air_density");
    positive(air_viscosity, "air_viscosity");
    positive(gravity, "gravity");
    positive(mixing_length, "mixing_length");
    if (!(t_max >= t_min))
        throw InvalidInput("t_max must not be below t_min");
    if (!(eddy_diffusivity_scale >= 0.0))
        throw InvalidInput("eddy_diffusivity_scale must be non-negative");
    if (!(evaporation_rate >= 0.0))
        throw InvalidInput("evaporation_rate must be non-negative");
    if (!(residue_fraction > 0.0 && residue_fraction <= 1.0))
        throw InvalidInput("residue_fraction must be in (0, 1]");
}

void JetField::validate() const
{
    if (!(exit_speed >= 0.0))
        throw InvalidInput("jet exit_speed must be non-negative");
    if (!(half_angle_deg > 0.0 && half_angle_deg < 90.0))
        throw InvalidInput("jet half angle must be in (0, 90) degrees");
    if (!(mouth_diameter > 0.0) || !(decay_constant > 0.0))
        throw InvalidInput("jet mouth diameter and decay constant must be positive");
    if (std::abs(norm(axis) - 1.0) > 1e-9)
        throw InvalidInput("jet axis must be a unit vector");
}

double reynolds_number(double diameter, double rel_speed, Environment const& env)
{
    return env.air_density * rel_speed * diameter / env.air_viscosity;
}

double drag_correction(double reynolds)
{
    if (reynolds <= 1000.0)
        return 1.0 + 0.15 * std::pow(reynolds, 0.687);
    // Newton regime: constant drag coefficient 0.44
    return 0.44 * reynolds / 24.0;
}

double stokes_terminal_speed(double diameter,
                             double mass_density,
                             Environment const& env)
{
    return mass_density * diameter * diameter * env.gravity
           / (18.0 * env.air_viscosity);
}

ForceVector
drag_force(Particle const& p, Vec3 const& air_velocity, Environment const& env)
{
    require_finite(p.diameter, "diameter");
    if (!is_finite(p.velocity) || !is_finite(air_velocity))
        throw InvalidInput("non-finite velocity");
    if (!(p.diameter > 0.0))
        throw InvalidInput("diameter must be positive");
    return {drag_from(p.diameter, p.velocity - air_velocity, env)};
}

ForceVector net_force(Particle const& p,
                      Environment const& env,
                      JetField const& jet,
                      double t)
{
    if (!is_finite(p.position) || !is_finite(p.velocity))
        throw InvalidInput("non-finite particle state");
    if (!(p.diameter > 0.0))
        throw InvalidInput("diameter must be positive");
    Vec3 a = acceleration(
        p.diameter, p.mass_density, {p.position, p.velocity}, env, jet, t);
    return {a * p.mass()};
}

Vec3 jet_velocity(JetField const& jet, Vec3 const& x, double t)
{
    if (t < jet.start_time || jet.exit_speed == 0.0)
        return {};
    Vec3 rel = x - jet.origin;
    double s = dot(rel, jet.axis);
    if (s <= 0.0)
        return {};
    double width = s * std::tan(jet.half_angle_deg * pi / 180.0);
    Vec3 radial = rel - jet.axis * s;
    double r2 = dot(radial, radial);
    if (r2 > width * width)
        return {};
    double centerline
        = jet.exit_speed
          * std::min(1.0, jet.decay_constant * jet.mouth_diameter / s);
    double profile = std::exp(-0.5 * r2 / (width * width));
    Vec3 dir = normalized(jet.axis + unit_z * (jet.buoyant_rise_rate * s));
    return dir * (centerline * profile);
}

Vec3 eddy_displacement(CounterRng& rng,
                       double local_air_speed,
                       Environment const& env,
                       double dt)
{
    if (!(dt > 0.0))
        throw InvalidInput("eddy_displacement requires dt > 0");
    double diffusivity
        = env.eddy_diffusivity_scale * local_air_speed * env.mixing_length;
    if (!(diffusivity > 0.0))
        return {};
    double sigma = std::sqrt(2.0 * diffusivity * dt);
    Vec3 out;
    out.x = sigma * standard_normal(rng);
    out.y = sigma * standard_normal(rng);
    out.z = sigma * standard_normal(rng);
    return out;
}

Particle evaporate(Particle p, Environment const& env, double dt)
{
    if (!env.evaporation_enabled || p.state != ParticleState::airborne)
        return p;
    double residue = env.residue_fraction * p.initial_diameter;
    double d2 = p.diameter * p.diameter - env.evaporation_rate * dt;
    double shrunk = std::sqrt(std::max(d2, residue * residue));
    p.diameter = std::min(p.diameter, shrunk);
    return p;
}

StepResult step_adaptive(Particle const& p,
                         Environment const& env,
                         JetField const& jet,
                         double t,
                         StepControl const& control)
{
    if (p.state != ParticleState::airborne)
        throw InvalidInput("step_adaptive requires an airborne particle");
    if (!(control.dt_max > 0.0) || !(control.tol > 0.0))
        throw InvalidInput("step_adaptive requires dt_max > 0 and tol > 0");

    Kinematics start{p.position, p.velocity};
    double dt_cap = control.dt_max;
    if (env.forces.drag)
        dt_cap = std::min(dt_cap, relaxation_steps * relaxation_time(p, env, jet, t));
    bool capped = p.dt_hint <= 0.0 || p.dt_hint >= dt_cap;
    double dt = capped ? dt_cap : p.dt_hint;

    TrialStep trial;
    while (true)
    {
        // A sliver dt_max (end of a global step) is not an underflow.
        if (dt < control.dt_min && dt < control.dt_max)
        {
            throw StiffnessError(
                "step size underflow for particle " + std::to_string(p.id)
                + " (diameter " + std::to_string(p.diameter * 1e6) + " um) at t = "
                + std::to_string(t) + " s, height " + std::to_string(p.position.z)
                + " m, error " + std::to_string(trial.error) + " m");
        }
        trial = dormand_prince(
            p.diameter, p.mass_density, start, env, jet, t, dt);
        if (trial.error <= control.tol)
            break;
        double factor = std::isfinite(trial.error)
                            ? 0.9 * std::pow(control.tol / trial.error, 0.2)
                            : 0.1;
        dt *= std::clamp(factor, 0.1, 0.5);
        capped = false;
    }

    StepResult result{p, dt};
    Particle& out = result.particle;
    double growth = trial.error > 0.0
                        ? 0.9 * std::pow(control.tol / trial.error, 0.2)
                        : 5.0;
    growth = std::clamp(growth, 0.2, 5.0);
    double proposal = dt * growth;
    // A step truncated by the cap says nothing about the natural step size.
    out.dt_hint = (capped && growth >= 1.0) ? std::max(p.dt_hint, proposal)
                                            : proposal;

    if (trial.end.x.z <= 0.0)
    {
        double s = floor_crossing(start, trial.end, dt);
        Vec3 at;
        at.x = hermite(start.x.x, start.v.x, trial.end.x.x, trial.end.v.x, dt, s);
        at.y = hermite(start.x.y, start.v.y, trial.end.x.y, trial.end.v.y, dt, s);
        deposit(out, at, t + s * dt);
        return result;
    }

    out.position = trial.end.x;
    out.velocity = trial.end.v;

    if (env.forces.eddy && env.eddy_diffusivity_scale > 0.0)
    {
        double air_speed
            = env.forces.advection ? norm(jet_velocity(jet, out.position, t + dt))
                                   : 0.0;
        Vec3 jump = eddy_displacement(out.rng, air_speed, env, dt);
        Vec3 moved = out.position + jump;
        if (moved.z <= 0.0)
        {
            double f = out.position.z / (out.position.z - moved.z);
            deposit(out, out.position + jump * f, t + dt);
            return result;
        }
        out.position = moved;
    }

    out = evaporate(out, env, dt);
    return result;
}

double max_throw_distance(double v, double h0, double g)
{
    if (!(g > 0.0) || !std::isfinite(g))
        throw InvalidInput("gravity must be positive");
    if (!(h0 >= 0.0) || !(v >= 0.0))
        throw InvalidInput("speed and height must be non-negative");
    return v * std::sqrt(2.0 * h0 / g);
}

}  // namespace aerocomm
