#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emission.hpp"
#include "random.hpp"
#include "transport.hpp"

namespace aerocomm
{
//---------------------------------------------------------------------------//
// Agents
//---------------------------------------------------------------------------//

enum class ApertureKind : std::uint8_t
{
    face,
    hand,
};

char const* to_string(ApertureKind k);
std::optional<ApertureKind> aperture_kind_from_string(std::string_view s);

//! Absorbing sphere attached to an agent; gain is the absorption probability.
struct Aperture
{
    ApertureKind kind{ApertureKind::face};
    Vec3 offset;  //!< from the agent position (mouth height) [m]
    double radius{0.1};
    double gain{1.0};

    friend bool operator==(Aperture const&, Aperture const&) = default;
};

Aperture default_face_aperture();
Aperture default_hand_aperture();

struct Waypoint
{
    double t{0};
    Vec3 position;

    friend bool operator==(Waypoint const&, Waypoint const&) = default;
};

struct ScheduledEvent
{
    double time{0};
    EventKind kind{EventKind::cough};

    friend bool operator==(ScheduledEvent const&, ScheduledEvent const&) = default;
};

//! Static description of one person; every agent both emits and receives.
struct AgentConfig
{
    bool infected{false};
    std::vector<Waypoint> waypoints{{0.0, {0.0, 0.0, 1.64}}};
    Vec3 facing{0, 1, 0};
    std::vector<Aperture> apertures{default_face_aperture(),
                                    default_hand_aperture()};
    double detection_threshold{100.0};  //!< infectious particles
    double virion_concentration{1e12};  //!< [1/m^3] of emitted fluid
    MaskSettings mask;
    EventModel events{default_event_model(false)};
    std::vector<ScheduledEvent> scheduled;

    friend bool operator==(AgentConfig const&, AgentConfig const&) = default;
};

//! Piecewise-linear position along the waypoints, clamped at both ends.
Vec3 receiver_position(AgentConfig const& a, double t);

//---------------------------------------------------------------------------//
// Configuration
//---------------------------------------------------------------------------//

struct RunSettings
{
    double duration{60.0};    //!< [s]
    double dt_global{0.01};   //!< [s]
    std::optional<std::uint64_t> seed;
    StepControl control;
    int threads{0};  //!< 0 = automatic
    bool geometric_prefilter{true};
    std::string output_dir{"out"};

    friend bool operator==(RunSettings const& a, RunSettings const& b)
    {
        return a.duration == b.duration && a.dt_global == b.dt_global
               && a.seed == b.seed && a.control.dt_max == b.control.dt_max
               && a.control.tol == b.control.tol
               && a.control.dt_min == b.control.dt_min && a.threads == b.threads
               && a.geometric_prefilter == b.geometric_prefilter
               && a.output_dir == b.output_dir;
    }
};

struct AnalysisSettings
{
    double heatmap_cell{0.1};
    double heatmap_x_min{-1.5};
    double heatmap_x_max{1.5};
    double heatmap_y_min{0.0};
    double heatmap_y_max{6.0};
    std::vector<double> radial_bands{0.5, 2.0, 5.0};
    std::vector<double> level_thresholds{100.0, 1000.0};

    friend bool operator==(AnalysisSettings const&, AnalysisSettings const&)
        = default;
};

struct ScenarioConfig
{
    Environment environment;
    EmissionProfile emission;
    std::vector<AgentConfig> agents;
    RunSettings run;
    AnalysisSettings analysis;

    //! Throw ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(ScenarioConfig const&, ScenarioConfig const&) = default;
};

//---------------------------------------------------------------------------//
// Results
//---------------------------------------------------------------------------//

struct DepositionRecord
{
    std::uint64_t particle_id;
    std::uint32_t emitter;
    std::uint32_t event;
    double x;
    double y;
    double t;
    double diameter;
    bool infectious;
    Vec3 origin;
};

struct AbsorptionRecord
{
    std::uint64_t particle_id;
    std::uint32_t receiver;
    ApertureKind aperture;
    std::uint32_t emitter;
    std::uint32_t event;
    double t;
    Vec3 position;
    double diameter;
    bool infectious;
    Vec3 origin;
};

struct AirborneRecord
{
    std::uint64_t particle_id;
    std::uint32_t event;
    Vec3 position;
    double diameter;
    bool infectious;
    Vec3 origin;
};

struct DosePoint
{
    double t;
    double dose;
};

//! Receiver state during and after a run.
struct AgentOutcome
{
    std::uint32_t id{0};
    double threshold{100.0};
    double dose{0};
    bool infected{false};
    double infected_at{-1};  //!< -1 if never crossed (or infected at start)
    std::vector<DosePoint> trace;
};

struct SimulationResult
{
    std::vector<DepositionRecord> depositions;  //!< sorted by (t, id)
    std::vector<AbsorptionRecord> absorptions;  //!< sorted by (t, id)
    std::vector<AirborneRecord> airborne_at_end;
    std::vector<EventRecord> events;
    std::vector<AgentOutcome> agents;
    std::vector<MovcskSymbol> symbols;
    std::size_t emitted{0};
    std::size_t blocked{0};
    double end_time{0};
};

//---------------------------------------------------------------------------//
// Operations
//---------------------------------------------------------------------------//

//! Straight chord of a particle path over one global step.
struct PathSegment
{
    Vec3 start;
    Vec3 end;
    double t_start{0};
    double t_end{0};
};

//! Fraction along the segment where it first enters the sphere.
std::optional<double>
segment_sphere_entry(Vec3 const& a, Vec3 const& b, Vec3 const& center, double radius);

/*!
 * Geometric intersection followed by a Bernoulli(gain) draw.
 *
 * Returns the entry fraction if the particle is absorbed. No random number is
 * consumed when the segment misses or the gain is zero.
 */
std::optional<double> absorb_check(PathSegment const& segment,
                                   Vec3 const& aperture_center,
                                   Aperture const& aperture,
                                   CounterRng& rng);

//! Count one absorbed particle; only infectious ones add to the dose.
AgentOutcome accumulate_dose(AgentOutcome receiver, bool infectious, double t);

//! Threshold detector: dose >= threshold; stays true once crossed.
bool infection_decision(AgentOutcome const& receiver);

SimulationResult run(ScenarioConfig const& config);

struct LedgerEntry
{
    std::uint32_t event;
    std::size_t emitted{0};
    std::size_t deposited{0};
    std::size_t absorbed{0};
    std::size_t blocked{0};
    std::size_t airborne{0};

    bool balanced() const
    {
        return emitted == deposited + absorbed + blocked + airborne;
    }
};

struct LedgerReport
{
    LedgerEntry total;
    std::vector<LedgerEntry> per_event;
};

//! Check emitted = deposited + absorbed + blocked + airborne; throws
//! ConsistencyError on any imbalance.
LedgerReport ledger_check(SimulationResult const& r);

}  // namespace aerocomm
