#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "random.hpp"
#include "transport.hpp"

namespace aerocomm
{
//---------------------------------------------------------------------------//
// Respiratory events
//---------------------------------------------------------------------------//

enum class EventKind : std::uint8_t
{
    breath,
    speech_frame,
    cough,
    sneeze,
};

inline constexpr std::size_t num_event_kinds = 4;

char const* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

struct RespiratoryEvent
{
    EventKind kind;
    double time;  //!< [s]

    friend bool operator==(RespiratoryEvent const&, RespiratoryEvent const&)
        = default;
};

//! Two-state talk/silence chain stepped once per `step` seconds.
struct SpeakingMarkov
{
    double p_silence_to_talk{0.2};
    double p_talk_to_silence{0.1};
    bool talking{false};
    double step{1.0};  //!< [s]

    void validate() const;

    friend bool operator==(SpeakingMarkov const&, SpeakingMarkov const&)
        = default;
};

//! One transition; the new state emits a speech frame iff it is talking.
SpeakingMarkov speaking_transition(SpeakingMarkov m, CounterRng& rng);

//! Per-agent parameters of the event processes.
struct EventModel
{
    double breaths_per_minute{14.0};
    SpeakingMarkov speaking;
    double cough_probability{1e-3};   //!< per trial
    double sneeze_probability{2e-4};  //!< per trial
    double trial_step{0.1};           //!< Bernoulli trial period [s]

    void validate() const;

    friend bool operator==(EventModel const&, EventModel const&) = default;
};

//! Defaults; coughing and sneezing are far more frequent when infected.
EventModel default_event_model(bool infected);

//---------------------------------------------------------------------------//
/*!
 * Stateful generator of one agent's respiratory events.
 *
 * Time advances in fixed windows [n*dt, (n+1)*dt). Breaths are deterministic
 * ticks at k*60/rate. The speaking chain transitions at multiples of its step
 * and cough/sneeze Bernoulli trials run at multiples of the trial step.
 */
class EventProcess
{
  public:
    EventProcess(EventModel model, double dt);

    //! Events in the next window, sorted by (time, kind).
    std::vector<RespiratoryEvent> next_events(CounterRng& rng);

    double time() const { return static_cast<double>(window_) * dt_; }
    SpeakingMarkov const& speaking() const { return model_.speaking; }

  private:
    EventModel model_;
    double dt_;
    std::int64_t window_{0};
    std::int64_t next_breath_{0};
    std::int64_t next_speech_{0};
    std::int64_t next_trial_{0};
};

//---------------------------------------------------------------------------//
// Empirical distributions
//---------------------------------------------------------------------------//

//! Weighted sample in SI units.
struct WeightedSample
{
    std::vector<double> values;
    std::vector<double> weights;
};

//---------------------------------------------------------------------------//
/*!
 * Step CDF over a finite support.
 *
 * `cumulative` is strictly increasing and ends at exactly 1. Sampling is by
 * inverse transform: the smallest support value whose cumulative probability
 * reaches u.
 */
class EmpiricalCdf
{
  public:
    EmpiricalCdf() = default;

    //! Merge duplicate values, drop zero weights; throws ConfigError if empty.
    static EmpiricalCdf from_weighted(WeightedSample const& sample);
    static EmpiricalCdf from_values(std::span<double const> values);
    //! Rebuild from a serialized table; validates monotonicity.
    static EmpiricalCdf from_cumulative(std::vector<double> values,
                                        std::vector<double> cumulative);

    //! Inverse CDF for u in (0, 1].
    double quantile(double u) const;

    //! P(X <= x)
    double cdf(double x) const;

    std::span<double const> values() const { return values_; }
    std::span<double const> cumulative() const { return cumulative_; }
    double min() const { return values_.front(); }
    double max() const { return values_.back(); }

    friend bool operator==(EmpiricalCdf const&, EmpiricalCdf const&) = default;

  private:
    std::vector<double> values_;
    std::vector<double> cumulative_;
};

//! Speeds of frictionless horizontal throws that land at `distances`.
EmpiricalCdf
empirical_cdf_from_distances(std::span<double const> distances, double h0, double g);

double sample_from_cdf(EmpiricalCdf const& c, CounterRng& rng);

//---------------------------------------------------------------------------//
// Emission profile
//---------------------------------------------------------------------------//

//! Diameter ~ exp(Normal(log_mean, log_std)), diameters in metres.
struct LogNormalDiameter
{
    double log_mean{-10.26};  // median ~35 um
    double log_std{0.6};

    friend bool operator==(LogNormalDiameter const&, LogNormalDiameter const&)
        = default;
};

/*!
 * Two-mode exit speeds: fast aerosol cloud and slower ballistic droplets.
 *
 * Particles at or above `split_diameter` are always droplets; smaller ones
 * join the cloud with probability `cloud_fraction`.
 */
struct BimodalSpeed
{
    double cloud_speed{8.0};
    double droplet_speed{5.0};
    double cloud_fraction{0.5};
    double split_diameter{100e-6};
    double relative_spread{0.1};  //!< std of the speed relative to its mode

    friend bool operator==(BimodalSpeed const&, BimodalSpeed const&) = default;
};

using DiameterSource = std::variant<LogNormalDiameter, EmpiricalCdf>;
using SpeedSource = std::variant<BimodalSpeed, EmpiricalCdf>;

//! Geometry of the exhaled jet that accompanies each event.
struct JetSettings
{
    double exit_speed{8.0};
    double mouth_diameter{0.02};
    double half_angle_deg{20.0};
    double decay_constant{6.0};
    double buoyant_rise_rate{0.0};

    friend bool operator==(JetSettings const&, JetSettings const&) = default;
};

struct EmissionProfile
{
    DiameterSource diameters{LogNormalDiameter{}};
    SpeedSource speeds{BimodalSpeed{}};
    double opening_angle_std_deg{6.25};
    std::array<int, num_event_kinds> particles_per_event{50, 100, 5000, 15000};
    double min_diameter_cutoff{50e-6};
    double mass_density{997.0};
    JetSettings jet;

    int count(EventKind k) const
    {
        return particles_per_event[static_cast<std::size_t>(k)];
    }

    void validate() const;

    friend bool operator==(EmissionProfile const&, EmissionProfile const&)
        = default;
};

struct EmissionBatch
{
    std::vector<Particle> particles;
    JetField jet;
    std::size_t omitted_draws{0};  //!< diameter draws rejected by the cutoff
};

/*!
 * Draw the particles of one event.
 *
 * Particles start at `origin` with emitted_at = 0 and sequential ids from 0;
 * the caller assigns global ids, times and random streams.
 */
EmissionBatch sample_emission(EventKind kind,
                              EmissionProfile const& profile,
                              Vec3 const& origin,
                              Vec3 const& axis,
                              CounterRng& rng);

//! Poisson loading: 1 - exp(-c_v * pi/6 * d^3).
double infection_probability(double diameter, double virion_concentration);

std::vector<Particle> tag_infectious(std::vector<Particle> batch,
                                     double virion_concentration,
                                     bool emitter_infected,
                                     CounterRng& rng);

struct MaskSettings
{
    bool enabled{false};
    double efficiency{0.8};
    double jet_reduction{0.9};  //!< fraction of exit speed removed

    friend bool operator==(MaskSettings const&, MaskSettings const&) = default;
};

struct MaskResult
{
    std::vector<Particle> batch;
    JetField jet;
    std::size_t blocked{0};
};

MaskResult apply_mask(std::vector<Particle> batch,
                      JetField jet,
                      MaskSettings const& mask,
                      CounterRng& rng);

//---------------------------------------------------------------------------//
// Concentration-shift-keying symbols
//---------------------------------------------------------------------------//

//! Per-event emission summary, also used by the conservation ledger.
struct EventRecord
{
    std::uint32_t index{0};
    std::uint32_t emitter{0};
    EventKind kind{EventKind::breath};
    double time{0};
    std::size_t emitted{0};
    std::size_t infectious{0};
    std::size_t blocked{0};
};

struct MovcskSymbol
{
    EventKind kind;
    std::size_t level;
    std::size_t particle_count;
    std::size_t infectious_count;
    double timestamp;
    std::uint32_t emitter;
};

//! Level = number of thresholds at or below the particle count.
std::size_t concentration_level(std::size_t count,
                                std::span<double const> thresholds);

std::vector<MovcskSymbol> to_symbols(std::span<EventRecord const> events,
                                     std::span<double const> thresholds);

}  // namespace aerocomm
