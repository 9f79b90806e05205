#include "aerocomm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aerocomm/errors.hpp"
#include "aerocomm/kernels.hpp"

namespace aerocomm
{
namespace
{
std::string agent_path(std::size_t i, char const* field)
{
    return "agents[" + std::to_string(i) + "]." + field;
}

void positive(double v, std::string const& path)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(path, "must be positive");
}

void validate_agent(AgentConfig const& a, std::size_t i)
{
    if (a.waypoints.empty())
        throw ConfigError(agent_path(i, "waypoints"), "at least one waypoint required");
    for (std::size_t w = 0; w < a.waypoints.size(); ++w)
    {
        if (!is_finite(a.waypoints[w].position) || !std::isfinite(a.waypoints[w].t))
            throw ConfigError(agent_path(i, "waypoints"), "non-finite waypoint");
        if (w > 0 && !(a.waypoints[w].t > a.waypoints[w - 1].t))
        {
            throw ConfigError(agent_path(i, "waypoints"),
                              "waypoint times must be strictly increasing");
        }
    }
    if (!(norm(a.facing) > 0.0) || !is_finite(a.facing))
        throw ConfigError(agent_path(i, "facing"), "must be a non-zero vector");
    for (std::size_t k = 0; k < a.apertures.size(); ++k)
    {
        auto path = agent_path(i, "apertures") + "[" + std::to_string(k) + "]";
        positive(a.apertures[k].radius, path + ".radius");
        if (!(a.apertures[k].gain >= 0.0 && a.apertures[k].gain <= 1.0))
            throw ConfigError(path + ".gain", "must be in [0, 1]");
    }
    positive(a.detection_threshold, agent_path(i, "detection_threshold"));
    if (!(a.virion_concentration >= 0.0))
        throw ConfigError(agent_path(i, "virion_concentration"), "must be non-negative");
    if (!(a.mask.efficiency >= 0.0 && a.mask.efficiency <= 1.0))
        throw ConfigError(agent_path(i, "mask.efficiency"), "must be in [0, 1]");
    if (!(a.mask.jet_reduction >= 0.0 && a.mask.jet_reduction <= 1.0))
        throw ConfigError(agent_path(i, "mask.jet_reduction"), "must be in [0, 1]");
    try
    {
        a.events.validate();
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(agent_path(i, "events.") + e.path(), "invalid value");
    }
    for (auto const& s : a.scheduled)
    {
        if (!(s.time >= 0.0))
            throw ConfigError(agent_path(i, "scheduled"), "event time must be >= 0");
    }
}

struct AgentState
{
    AgentConfig const* config;
    EventProcess process;
    CounterRng event_rng;
    std::size_t next_scheduled{0};
    std::vector<ScheduledEvent> scheduled;
    bool spontaneous{true};
};

bool can_emit(EventModel const& m)
{
    return m.breaths_per_minute > 0.0 || m.speaking.talking
           || m.speaking.p_silence_to_talk > 0.0 || m.cough_probability > 0.0
           || m.sneeze_probability > 0.0;
}

struct PendingEvent
{
    double time;
    std::uint32_t agent;
    EventKind kind;
};

struct Absorption
{
    std::uint32_t receiver;
    std::uint32_t aperture;
    double t;
};

}  // namespace

//---------------------------------------------------------------------------//
char const* to_string(ApertureKind k)
{
    return k == ApertureKind::face ? "face" : "hand";
}

std::optional<ApertureKind> aperture_kind_from_string(std::string_view s)
{
    if (s == "face")
        return ApertureKind::face;
    if (s == "hand")
        return ApertureKind::hand;
    return std::nullopt;
}

Aperture default_face_aperture()
{
    return {ApertureKind::face, {0.0, 0.0, 0.0}, 0.1, 1.0};
}

Aperture default_hand_aperture()
{
    return {ApertureKind::hand, {0.0, 0.15, -0.6}, 0.08, 0.3};
}

Vec3 receiver_position(AgentConfig const& a, double t)
{
    auto const& w = a.waypoints;
    if (w.empty())
        return {};
    if (t <= w.front().t)
        return w.front().position;
    if (t >= w.back().t)
        return w.back().position;
    auto it = std::upper_bound(w.begin(), w.end(), t, [](double v, Waypoint const& p) {
        return v < p.t;
    });
    Waypoint const& b = *it;
    Waypoint const& a0 = *(it - 1);
    double f = (t - a0.t) / (b.t - a0.t);
    return a0.position + (b.position - a0.position) * f;
}

void ScenarioConfig::validate() const
{
    try
    {
        environment.validate();
    }
    catch (InvalidInput const& e)
    {
        std::string msg = e.what();
        std::string field = msg.substr(0, msg.find(' '));
        throw ConfigError("environment." + field, msg);
    }
    emission.validate();
    for (std::size_t i = 0; i < agents.size(); ++i)
        validate_agent(agents[i], i);

    positive(run.duration, "run.duration");
    positive(run.dt_global, "run.dt_global");
    positive(run.control.dt_max, "run.dt_max");
    positive(run.control.tol, "run.tol");
    positive(run.control.dt_min, "run.dt_min");
    if (run.control.dt_min > run.control.dt_max)
        throw ConfigError("run.dt_min", "must not exceed run.dt_max");
    if (run.threads < 0)
        throw ConfigError("run.threads", "must be non-negative");

    positive(analysis.heatmap_cell, "analysis.heatmap_cell");
    if (!(analysis.heatmap_x_max > analysis.heatmap_x_min))
        throw ConfigError("analysis.heatmap_x_max", "must exceed heatmap_x_min");
    if (!(analysis.heatmap_y_max > analysis.heatmap_y_min))
        throw ConfigError("analysis.heatmap_y_max", "must exceed heatmap_y_min");
    auto increasing = [](std::vector<double> const& v, char const* path) {
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (!std::isfinite(v[i]) || (i > 0 && !(v[i] > v[i - 1])))
                throw ConfigError(path, "must be strictly increasing");
        }
    };
    increasing(analysis.radial_bands, "analysis.radial_bands");
    increasing(analysis.level_thresholds, "analysis.level_thresholds");
}

//---------------------------------------------------------------------------//
std::optional<double>
segment_sphere_entry(Vec3 const& a, Vec3 const& b, Vec3 const& center, double radius)
{
    Vec3 d = b - a;
    Vec3 m = a - center;
    double c = dot(m, m) - radius * radius;
    if (c <= 0.0)
        return 0.0;
    double dd = dot(d, d);
    if (dd == 0.0)
        return std::nullopt;
    double bq = dot(m, d);
    if (bq >= 0.0)
        return std::nullopt;  // moving away from the centre
    double disc = bq * bq - dd * c;
    if (disc < 0.0)
        return std::nullopt;
    double s = (-bq - std::sqrt(disc)) / dd;
    if (s < 0.0 || s > 1.0)
        return std::nullopt;
    return s;
}

std::optional<double> absorb_check(PathSegment const& segment,
                                   Vec3 const& aperture_center,
                                   Aperture const& aperture,
                                   CounterRng& rng)
{
    auto entry = segment_sphere_entry(
        segment.start, segment.end, aperture_center, aperture.radius);
    if (!entry || aperture.gain <= 0.0)
        return std::nullopt;
    if (aperture.gain < 1.0 && !bernoulli(rng, aperture.gain))
        return std::nullopt;
    return entry;
}

AgentOutcome accumulate_dose(AgentOutcome receiver, bool infectious, double t)
{
    if (!infectious)
        return receiver;
    receiver.dose += 1.0;
    receiver.trace.push_back({t, receiver.dose});
    if (!receiver.infected && infection_decision(receiver))
    {
        receiver.infected = true;
        receiver.infected_at = t;
    }
    return receiver;
}

bool infection_decision(AgentOutcome const& receiver)
{
    return receiver.infected || receiver.dose >= receiver.threshold;
}

//---------------------------------------------------------------------------//
SimulationResult run(ScenarioConfig const& config)
{
    config.validate();
    if (!config.run.seed)
        throw ConfigError("run.seed", "an explicit seed is required");
    std::uint64_t const seed = *config.run.seed;
    double const dt = config.run.dt_global;
    int const threads = resolve_threads(config.run.threads);

    SimulationResult result;
    std::size_t const num_agents = config.agents.size();

    std::vector<AgentState> agents;
    agents.reserve(num_agents);
    for (std::size_t i = 0; i < num_agents; ++i)
    {
        AgentConfig const& a = config.agents[i];
        AgentState s{&a,
                     EventProcess(a.events, dt),
                     CounterRng(stream_key(seed, StreamTag::events, i)),
                     0,
                     a.scheduled,
                     can_emit(a.events)};
        std::stable_sort(s.scheduled.begin(), s.scheduled.end(),
                         [](auto const& x, auto const& y) { return x.time < y.time; });
        agents.push_back(std::move(s));

        AgentOutcome o;
        o.id = static_cast<std::uint32_t>(i);
        o.threshold = a.detection_threshold;
        o.infected = a.infected;
        result.agents.push_back(o);
    }

    std::vector<JetField> jets;
    std::vector<Particle> airborne;
    std::vector<Vec3> starts;
    std::vector<double> start_times;
    std::vector<std::optional<Absorption>> hits;
    std::vector<Vec3> agent_pos(num_agents);
    double reach = 0.0;  // farthest aperture surface from any agent position
    for (auto const& a : config.agents)
    {
        for (auto const& ap : a.apertures)
            reach = std::max(reach, norm(ap.offset) + ap.radius);
    }

    std::uint64_t next_id = 0;
    TransportContext ctx{config.environment, {}, config.run.control};

    for (std::int64_t step = 0;; ++step)
    {
        double const t0 = static_cast<double>(step) * dt;
        if (t0 >= config.run.duration)
            break;
        double const t1 = std::min(static_cast<double>(step + 1) * dt,
                                   config.run.duration);

        // Respiratory events for this window, ordered by (time, agent, kind)
        std::vector<PendingEvent> pending;
        for (std::size_t i = 0; i < num_agents; ++i)
        {
            AgentState& s = agents[i];
            auto idx = static_cast<std::uint32_t>(i);
            for (auto const& e : s.process.next_events(s.event_rng))
            {
                if (e.time < config.run.duration)
                    pending.push_back({e.time, idx, e.kind});
            }
            while (s.next_scheduled < s.scheduled.size()
                   && s.scheduled[s.next_scheduled].time < t1)
            {
                auto const& e = s.scheduled[s.next_scheduled++];
                pending.push_back({std::max(e.time, t0), idx, e.kind});
            }
        }
        std::stable_sort(pending.begin(), pending.end(), [](auto const& a, auto const& b) {
            if (a.time != b.time)
                return a.time < b.time;
            if (a.agent != b.agent)
                return a.agent < b.agent;
            return a.kind < b.kind;
        });

        for (PendingEvent const& e : pending)
        {
            AgentConfig const& a = config.agents[e.agent];
            auto event_index = static_cast<std::uint32_t>(result.events.size());
            CounterRng rng(stream_key(seed, StreamTag::emission, event_index));
            Vec3 origin = receiver_position(a, e.time);
            EmissionBatch batch
                = sample_emission(e.kind, config.emission, origin, a.facing, rng);
            batch.particles = tag_infectious(std::move(batch.particles),
                                             a.virion_concentration,
                                             a.infected,
                                             rng);
            JetField jet = batch.jet;
            jet.start_time = e.time;

            EventRecord rec;
            rec.index = event_index;
            rec.emitter = e.agent;
            rec.kind = e.kind;
            rec.time = e.time;
            rec.emitted = batch.particles.size();
            for (Particle& p : batch.particles)
            {
                p.id = next_id++;
                p.emitted_at = e.time;
                p.emitter = e.agent;
                p.event = event_index;
                p.rng = CounterRng(stream_key(seed, StreamTag::transport, p.id));
                rec.infectious += p.infectious ? 1 : 0;
            }
            if (a.mask.enabled)
            {
                MaskResult masked
                    = apply_mask(std::move(batch.particles), jet, a.mask, rng);
                batch.particles = std::move(masked.batch);
                jet = masked.jet;
                rec.blocked = masked.blocked;
            }
            for (Particle& p : batch.particles)
            {
                if (p.state == ParticleState::airborne)
                    airborne.push_back(p);
            }
            result.emitted += rec.emitted;
            result.blocked += rec.blocked;
            result.events.push_back(rec);
            jets.push_back(jet);
        }

        // Transport
        std::size_t const n = airborne.size();
        starts.resize(n);
        start_times.resize(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            starts[i] = airborne[i].position;
            start_times[i] = std::max(t0, airborne[i].emitted_at);
        }
        ctx.jets = jets;
        if (threads <= 1)
            advance_particles_serial(airborne, ctx, t0, t1);
        else
            advance_particles_parallel(airborne, ctx, t0, t1, threads);

        // Aperture absorption against positions at the end of the step
        for (std::size_t i = 0; i < num_agents; ++i)
            agent_pos[i] = receiver_position(config.agents[i], t1);
        hits.assign(n, std::nullopt);
        auto absorb = [&](std::size_t i) {
            Particle const& p = airborne[i];
            PathSegment seg{starts[i],
                            p.position,
                            start_times[i],
                            p.state == ParticleState::deposited ? p.settled_at : t1};
            Vec3 mid = (seg.start + seg.end) * 0.5;
            double half = 0.5 * norm(seg.end - seg.start);
            std::optional<double> best;
            for (std::size_t r = 0; r < num_agents; ++r)
            {
                if (r == p.emitter)
                    continue;
                if (config.run.geometric_prefilter
                    && norm(agent_pos[r] - mid) > half + reach)
                {
                    continue;
                }
                auto const& aps = config.agents[r].apertures;
                for (std::size_t k = 0; k < aps.size(); ++k)
                {
                    CounterRng rng(stream_key(
                        seed, StreamTag::absorption, p.id, step, r, k));
                    auto entry = absorb_check(seg, agent_pos[r] + aps[k].offset, aps[k], rng);
                    if (entry && (!best || *entry < *best))
                    {
                        best = entry;
                        hits[i] = Absorption{static_cast<std::uint32_t>(r),
                                             static_cast<std::uint32_t>(k),
                                             seg.t_start
                                                 + *entry * (seg.t_end - seg.t_start)};
                    }
                }
            }
            if (best)
            {
                Particle& q = airborne[i];
                q.position = seg.start + (seg.end - seg.start) * *best;
                q.velocity = {};
                q.state = ParticleState::absorbed;
                q.settled_at = hits[i]->t;
            }
        };
        if (num_agents > 1)
        {
            if (threads <= 1)
            {
                for (std::size_t i = 0; i < n; ++i)
                    absorb(i);
            }
            else
            {
                parallel_for(n, threads, absorb);
            }
        }

        // Merge in particle-id order
        std::size_t kept = 0;
        std::vector<std::size_t> step_absorbed;
        for (std::size_t i = 0; i < n; ++i)
        {
            Particle const& p = airborne[i];
            switch (p.state)
            {
                case ParticleState::deposited:
                    result.depositions.push_back({p.id,
                                                  p.emitter,
                                                  p.event,
                                                  p.position.x,
                                                  p.position.y,
                                                  p.settled_at,
                                                  p.diameter,
                                                  p.infectious,
                                                  p.origin});
                    break;
                case ParticleState::absorbed: {
                    Absorption const& h = *hits[i];
                    step_absorbed.push_back(result.absorptions.size());
                    result.absorptions.push_back(
                        {p.id,
                         h.receiver,
                         config.agents[h.receiver].apertures[h.aperture].kind,
                         p.emitter,
                         p.event,
                         h.t,
                         p.position,
                         p.diameter,
                         p.infectious,
                         p.origin});
                    break;
                }
                default:
                    airborne[kept++] = p;
                    break;
            }
        }
        airborne.resize(kept);
        // Doses in time order so every trace is chronological
        std::stable_sort(step_absorbed.begin(), step_absorbed.end(), [&](auto a, auto b) {
            auto const& x = result.absorptions[a];
            auto const& y = result.absorptions[b];
            return x.t < y.t || (x.t == y.t && x.particle_id < y.particle_id);
        });
        for (std::size_t k : step_absorbed)
        {
            auto const& rec = result.absorptions[k];
            result.agents[rec.receiver] = accumulate_dose(
                std::move(result.agents[rec.receiver]), rec.infectious, rec.t);
        }
        result.end_time = t1;

        bool more_events = false;
        for (auto const& s : agents)
        {
            more_events = more_events || s.spontaneous
                          || s.next_scheduled < s.scheduled.size();
        }
        if (airborne.empty() && !more_events)
            break;
    }

    for (Particle const& p : airborne)
    {
        result.airborne_at_end.push_back(
            {p.id, p.event, p.position, p.diameter, p.infectious, p.origin});
    }

    auto by_time = [](auto const& a, auto const& b) {
        return a.t < b.t || (a.t == b.t && a.particle_id < b.particle_id);
    };
    std::stable_sort(result.depositions.begin(), result.depositions.end(), by_time);
    std::stable_sort(result.absorptions.begin(), result.absorptions.end(), by_time);
    result.symbols = to_symbols(result.events, config.analysis.level_thresholds);
    return result;
}

//---------------------------------------------------------------------------//
LedgerReport ledger_check(SimulationResult const& r)
{
    LedgerReport report;
    report.per_event.resize(r.events.size());
    for (std::size_t i = 0; i < r.events.size(); ++i)
    {
        auto& e = report.per_event[i];
        e.event = r.events[i].index;
        e.emitted = r.events[i].emitted;
        e.blocked = r.events[i].blocked;
    }
    auto entry = [&](std::uint32_t event) -> LedgerEntry& {
        if (event >= report.per_event.size())
            throw ConsistencyError("record refers to unknown event "
                                   + std::to_string(event));
        return report.per_event[event];
    };
    for (auto const& d : r.depositions)
        ++entry(d.event).deposited;
    for (auto const& a : r.absorptions)
        ++entry(a.event).absorbed;
    for (auto const& a : r.airborne_at_end)
        ++entry(a.event).airborne;

    report.total.event = static_cast<std::uint32_t>(r.events.size());
    for (auto const& e : report.per_event)
    {
        if (!e.balanced())
        {
            throw ConsistencyError("ledger imbalance in event "
                                   + std::to_string(e.event));
        }
        report.total.emitted += e.emitted;
        report.total.deposited += e.deposited;
        report.total.absorbed += e.absorbed;
        report.total.blocked += e.blocked;
        report.total.airborne += e.airborne;
    }
    if (report.total.emitted != r.emitted || report.total.blocked != r.blocked
        || !report.total.balanced())
    {
        throw ConsistencyError("ledger totals disagree with the result");
    }
    return report;
}

}  // namespace aerocomm
