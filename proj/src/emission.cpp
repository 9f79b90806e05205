#include "aerocomm/emission.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "aerocomm/errors.hpp"

namespace aerocomm
{
namespace
{
void check_probability(double p, char const* path)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError(path, "probability must be in [0, 1]");
}

constexpr double deg = std::numbers::pi / 180.0;

// Orthonormal frame (axis, right, up) with `up` as close to +z as possible.
struct Frame
{
    Vec3 axis;
    Vec3 right;
    Vec3 up;
};

Frame make_frame(Vec3 const& axis)
{
    Frame f;
    f.axis = normalized(axis);
    f.right = cross(f.axis, unit_z);
    if (norm(f.right) < 1e-12)
        f.right = {1, 0, 0};
    f.right = normalized(f.right);
    f.up = cross(f.right, f.axis);
    return f;
}

struct SpeedDraw
{
    CounterRng& rng;
    double diameter;

    double operator()(BimodalSpeed const& s) const
    {
        bool cloud = diameter < s.split_diameter
                     && bernoulli(rng, s.cloud_fraction);
        double mode = cloud ? s.cloud_speed : s.droplet_speed;
        double v = mode * (1.0 + s.relative_spread * standard_normal(rng));
        return std::max(v, 0.0);
    }
    double operator()(EmpiricalCdf const& c) const
    {
        return sample_from_cdf(c, rng);
    }
};

struct DiameterDraw
{
    CounterRng& rng;

    double operator()(LogNormalDiameter const& s) const
    {
        return std::exp(s.log_mean + s.log_std * standard_normal(rng));
    }
    double operator()(EmpiricalCdf const& c) const
    {
        return sample_from_cdf(c, rng);
    }
};

}  // namespace

//---------------------------------------------------------------------------//
char const* to_string(EventKind k)
{
    switch (k)
    {
        case EventKind::breath:
            return "breath";
        case EventKind::speech_frame:
            return "speech_frame";
        case EventKind::cough:
            return "cough";
        case EventKind::sneeze:
            return "sneeze";
    }
    return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view s)
{
    for (auto k : {EventKind::breath,
                   EventKind::speech_frame,
                   EventKind::cough,
                   EventKind::sneeze})
    {
        if (s == to_string(k))
            return k;
    }
    return std::nullopt;
}

void SpeakingMarkov::validate() const
{
    check_probability(p_silence_to_talk, "p_silence_to_talk");
    check_probability(p_talk_to_silence, "p_talk_to_silence");
    if (!(step > 0.0))
        throw ConfigError("speech_step", "must be positive");
}

SpeakingMarkov speaking_transition(SpeakingMarkov m, CounterRng& rng)
{
    double leave = m.talking ? m.p_talk_to_silence : m.p_silence_to_talk;
    if (bernoulli(rng, leave))
        m.talking = !m.talking;
    return m;
}

void EventModel::validate() const
{
    speaking.validate();
    check_probability(cough_probability, "cough_probability");
    check_probability(sneeze_probability, "sneeze_probability");
    if (!(breaths_per_minute >= 0.0))
        throw ConfigError("breaths_per_minute", "must be non-negative");
    if (!(trial_step > 0.0))
        throw ConfigError("trial_step", "must be positive");
}

EventModel default_event_model(bool infected)
{
    EventModel m;
    m.cough_probability = infected ? 1e-3 : 1e-5;
    m.sneeze_probability = infected ? 2e-4 : 2e-6;
    return m;
}

//---------------------------------------------------------------------------//
EventProcess::EventProcess(EventModel model, double dt)
    : model_(model), dt_(dt)
{
    if (!(dt > 0.0))
        throw InvalidInput("event process requires dt > 0");
    model_.validate();
}

std::vector<RespiratoryEvent> EventProcess::next_events(CounterRng& rng)
{
    double end = static_cast<double>(window_ + 1) * dt_;
    std::vector<RespiratoryEvent> events;

    if (model_.breaths_per_minute > 0.0)
    {
        double period = 60.0 / model_.breaths_per_minute;
        for (double t; (t = static_cast<double>(next_breath_) * period) < end;
             ++next_breath_)
        {
            events.push_back({EventKind::breath, t});
        }
    }
    for (double t;
         (t = static_cast<double>(next_speech_) * model_.speaking.step) < end;
         ++next_speech_)
    {
        model_.speaking = speaking_transition(model_.speaking, rng);
        if (model_.speaking.talking)
            events.push_back({EventKind::speech_frame, t});
    }
    for (double t; (t = static_cast<double>(next_trial_) * model_.trial_step) < end;
         ++next_trial_)
    {
        // Both trials always consume a draw so the stream layout is fixed.
        bool cough = bernoulli(rng, model_.cough_probability);
        bool sneeze = bernoulli(rng, model_.sneeze_probability);
        if (cough)
            events.push_back({EventKind::cough, t});
        if (sneeze)
            events.push_back({EventKind::sneeze, t});
    }

    ++window_;
    std::stable_sort(events.begin(), events.end(), [](auto const& a, auto const& b) {
        return a.time < b.time || (a.time == b.time && a.kind < b.kind);
    });
    return events;
}

//---------------------------------------------------------------------------//
EmpiricalCdf EmpiricalCdf::from_weighted(WeightedSample const& sample)
{
    if (sample.values.size() != sample.weights.size())
        throw ConfigError("", "weighted sample has mismatched columns");
    std::map<double, double> merged;
    double total = 0.0;
    for (std::size_t i = 0; i < sample.values.size(); ++i)
    {
        double v = sample.values[i];
        double w = sample.weights[i];
        if (!std::isfinite(v) || !(w >= 0.0) || !std::isfinite(w))
            throw ConfigError("", "invalid sample entry " + std::to_string(i));
        if (w > 0.0)
        {
            merged[v] += w;
            total += w;
        }
    }
    if (!(total > 0.0))
        throw ConfigError("", "empirical sample has zero total weight");

    EmpiricalCdf c;
    double running = 0.0;
    for (auto const& [v, w] : merged)
    {
        running += w;
        c.values_.push_back(v);
        c.cumulative_.push_back(running / total);
    }
    c.cumulative_.back() = 1.0;
    return c;
}

EmpiricalCdf EmpiricalCdf::from_values(std::span<double const> values)
{
    WeightedSample s;
    s.values.assign(values.begin(), values.end());
    s.weights.assign(values.size(), 1.0);
    return from_weighted(s);
}

EmpiricalCdf EmpiricalCdf::from_cumulative(std::vector<double> values,
                                           std::vector<double> cumulative)
{
    if (values.empty() || values.size() != cumulative.size())
        throw ConfigError("", "cumulative table must be non-empty and aligned");
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        bool ok = std::isfinite(values[i]) && cumulative[i] > 0.0
                  && cumulative[i] <= 1.0;
        if (i > 0)
            ok = ok && values[i] > values[i - 1] && cumulative[i] > cumulative[i - 1];
        if (!ok)
            throw ConfigError("", "cumulative table is not strictly increasing");
    }
    if (cumulative.back() != 1.0)
        throw ConfigError("", "cumulative table must end at 1");
    EmpiricalCdf c;
    c.values_ = std::move(values);
    c.cumulative_ = std::move(cumulative);
    return c;
}

double EmpiricalCdf::quantile(double u) const
{
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end())
        return values_.back();
    return values_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double EmpiricalCdf::cdf(double x) const
{
    auto it = std::upper_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin())
        return 0.0;
    return cumulative_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

EmpiricalCdf
empirical_cdf_from_distances(std::span<double const> distances, double h0, double g)
{
    if (distances.empty())
        throw ConfigError("distances", "empty distance sample");
    if (!(h0 > 0.0) || !(g > 0.0))
        throw InvalidInput("emission height and gravity must be positive");
    double scale = std::sqrt(g / (2.0 * h0));
    std::vector<double> speeds;
    speeds.reserve(distances.size());
    for (double d : distances)
    {
        if (!(d >= 0.0))
            throw ConfigError("distances", "negative distance");
        speeds.push_back(d * scale);
    }
    return EmpiricalCdf::from_values(speeds);
}

double sample_from_cdf(EmpiricalCdf const& c, CounterRng& rng)
{
    return c.quantile(uniform_open_closed(rng));
}

//---------------------------------------------------------------------------//
void EmissionProfile::validate() const
{
    if (!(opening_angle_std_deg > 0.0))
        throw ConfigError("emission.opening_angle_std_deg", "must be positive");
    if (!(min_diameter_cutoff >= 0.0))
        throw ConfigError("emission.min_diameter_cutoff", "must be non-negative");
    if (!(mass_density > 0.0))
        throw ConfigError("emission.mass_density", "must be positive");
    for (std::size_t i = 0; i < num_event_kinds; ++i)
    {
        if (particles_per_event[i] < 0)
        {
            throw ConfigError(std::string("emission.particles_per_event.")
                                  + to_string(static_cast<EventKind>(i)),
                              "must be non-negative");
        }
    }
    if (auto const* c = std::get_if<EmpiricalCdf>(&diameters))
    {
        if (c->max() < min_diameter_cutoff)
        {
            throw ConfigError("emission.diameters",
                              "no support at or above the diameter cutoff");
        }
    }
    if (auto const* b = std::get_if<BimodalSpeed>(&speeds))
    {
        check_probability(b->cloud_fraction, "emission.speeds.cloud_fraction");
        if (!(b->cloud_speed >= 0.0) || !(b->droplet_speed >= 0.0)
            || !(b->relative_spread >= 0.0))
        {
            throw ConfigError("emission.speeds", "speeds must be non-negative");
        }
    }
    JetField probe;
    probe.exit_speed = jet.exit_speed;
    probe.mouth_diameter = jet.mouth_diameter;
    probe.half_angle_deg = jet.half_angle_deg;
    probe.decay_constant = jet.decay_constant;
    try
    {
        probe.validate();
    }
    catch (InvalidInput const& e)
    {
        throw ConfigError("emission.jet", e.what());
    }
}

EmissionBatch sample_emission(EventKind kind,
                              EmissionProfile const& profile,
                              Vec3 const& origin,
                              Vec3 const& axis,
                              CounterRng& rng)
{
    constexpr std::size_t max_rejections = 10'000'000;

    Frame frame = make_frame(axis);
    EmissionBatch batch;
    // Virtual origin: the cone is as wide as the mouth at the mouth plane.
    double setback = 0.5 * profile.jet.mouth_diameter
                     / std::tan(profile.jet.half_angle_deg * deg);
    batch.jet.origin = origin - frame.axis * setback;
    batch.jet.axis = frame.axis;
    batch.jet.exit_speed = profile.jet.exit_speed;
    batch.jet.mouth_diameter = profile.jet.mouth_diameter;
    batch.jet.half_angle_deg = profile.jet.half_angle_deg;
    batch.jet.decay_constant = profile.jet.decay_constant;
    batch.jet.buoyant_rise_rate = profile.jet.buoyant_rise_rate;

    int const count = std::max(profile.count(kind), 0);
    batch.particles.reserve(static_cast<std::size_t>(count));
    double const angle_std = profile.opening_angle_std_deg * deg;

    for (int i = 0; i < count; ++i)
    {
        double d = 0.0;
        while (true)
        {
            d = std::visit(DiameterDraw{rng}, profile.diameters);
            if (d >= profile.min_diameter_cutoff && d > 0.0)
                break;
            if (++batch.omitted_draws > max_rejections)
            {
                throw ConfigError("emission.min_diameter_cutoff",
                                  "diameter cutoff rejects nearly all draws");
            }
        }
        double yaw = angle_std * standard_normal(rng);
        double pitch = angle_std * standard_normal(rng);
        double speed = std::visit(SpeedDraw{rng, d}, profile.speeds);

        Vec3 dir = (frame.axis * std::cos(yaw) + frame.right * std::sin(yaw))
                       * std::cos(pitch)
                   + frame.up * std::sin(pitch);

        Particle p;
        p.id = static_cast<std::uint64_t>(i);
        p.position = origin;
        p.origin = origin;
        p.velocity = dir * speed;
        p.diameter = d;
        p.initial_diameter = d;
        p.mass_density = profile.mass_density;
        batch.particles.push_back(p);
    }
    return batch;
}

double infection_probability(double diameter, double virion_concentration)
{
    double volume = std::numbers::pi / 6.0 * diameter * diameter * diameter;
    return -std::expm1(-virion_concentration * volume);
}

std::vector<Particle> tag_infectious(std::vector<Particle> batch,
                                     double virion_concentration,
                                     bool emitter_infected,
                                     CounterRng& rng)
{
    if (!(virion_concentration >= 0.0))
        throw InvalidInput("virion concentration must be non-negative");
    for (Particle& p : batch)
    {
        p.infectious = emitter_infected
                       && bernoulli(rng,
                                    infection_probability(
                                        p.diameter, virion_concentration));
    }
    return batch;
}

MaskResult apply_mask(std::vector<Particle> batch,
                      JetField jet,
                      MaskSettings const& mask,
                      CounterRng& rng)
{
    check_probability(mask.efficiency, "mask.efficiency");
    check_probability(mask.jet_reduction, "mask.jet_reduction");
    MaskResult result;
    for (Particle& p : batch)
    {
        if (p.state == ParticleState::airborne && bernoulli(rng, mask.efficiency))
        {
            p.state = ParticleState::blocked;
            p.velocity = {};
            p.settled_at = p.emitted_at;
            ++result.blocked;
        }
    }
    jet.exit_speed *= 1.0 - mask.jet_reduction;
    result.batch = std::move(batch);
    result.jet = jet;
    return result;
}

//---------------------------------------------------------------------------//
std::size_t concentration_level(std::size_t count,
                                std::span<double const> thresholds)
{
    auto c = static_cast<double>(count);
    return static_cast<std::size_t>(
        std::upper_bound(thresholds.begin(), thresholds.end(), c)
        - thresholds.begin());
}

std::vector<MovcskSymbol> to_symbols(std::span<EventRecord const> events,
                                     std::span<double const> thresholds)
{
    for (std::size_t i = 1; i < thresholds.size(); ++i)
    {
        if (!(thresholds[i] > thresholds[i - 1]))
            throw ConfigError("analysis.level_thresholds",
                              "thresholds must be strictly increasing");
    }
    std::vector<MovcskSymbol> out;
    out.reserve(events.size());
    for (EventRecord const& e : events)
    {
        out.push_back({e.kind,
                       concentration_level(e.emitted, thresholds),
                       e.emitted,
                       e.infectious,
                       e.time,
                       e.emitter});
    }
    return out;
}

}  // namespace aerocomm
