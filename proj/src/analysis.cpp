#include "aerocomm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aerocomm/errors.hpp"

namespace aerocomm
{
std::uint64_t HeatmapGrid::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t Histogram::total() const
{
    return std::accumulate(counts.begin(), counts.end(), underflow + overflow);
}

HeatmapGrid deposition_heatmap(std::span<DepositionRecord const> records,
                               double x_min,
                               double y_min,
                               double x_max,
                               double y_max,
                               double cell)
{
    if (!(cell > 0.0))
        throw InvalidInput("heatmap cell size must be positive");
    if (!(x_max > x_min) || !(y_max > y_min))
        throw InvalidInput("heatmap extent must be non-empty");

    HeatmapGrid g;
    g.origin_x = x_min;
    g.origin_y = y_min;
    g.cell = cell;
    g.nx = static_cast<std::size_t>(std::ceil((x_max - x_min) / cell - 1e-9));
    g.ny = static_cast<std::size_t>(std::ceil((y_max - y_min) / cell - 1e-9));
    g.counts.assign(g.nx * g.ny, 0);

    for (auto const& r : records)
    {
        double fi = std::floor((r.x - x_min) / cell);
        double fj = std::floor((r.y - y_min) / cell);
        if (fi < 0 || fj < 0 || fi >= static_cast<double>(g.nx)
            || fj >= static_cast<double>(g.ny))
        {
            ++g.out_of_extent;
            continue;
        }
        ++g.counts[static_cast<std::size_t>(fj) * g.nx + static_cast<std::size_t>(fi)];
    }
    return g;
}

Histogram histogram(std::span<double const> values, std::span<double const> edges)
{
    if (edges.size() < 2)
        throw InvalidInput("histogram needs at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
    {
        if (!(edges[i] > edges[i - 1]))
            throw InvalidInput("histogram edges must be strictly increasing");
    }
    Histogram h;
    h.edges.assign(edges.begin(), edges.end());
    h.counts.assign(edges.size() - 1, 0);
    for (double v : values)
    {
        if (v < edges.front())
        {
            ++h.underflow;
        }
        else if (v >= edges.back())
        {
            ++h.overflow;
        }
        else
        {
            auto it = std::upper_bound(edges.begin(), edges.end(), v);
            ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
        }
    }
    return h;
}

double radial_distance(Vec3 const& origin, double x, double y)
{
    return std::hypot(x - origin.x, y - origin.y);
}

MetricsSummary summary_metrics(SimulationResult const& result,
                               std::span<double const> radial_bands)
{
    MetricsSummary m;
    m.band_edges.push_back(0.0);
    for (double b : radial_bands)
    {
        if (b > m.band_edges.back())
            m.band_edges.push_back(b);
    }
    m.band_edges.push_back(std::numeric_limits<double>::infinity());

    std::vector<double> radii;
    radii.reserve(result.depositions.size());
    for (auto const& d : result.depositions)
    {
        double r = radial_distance(d.origin, d.x, d.y);
        radii.push_back(r);
        m.max_particle_range = std::max(m.max_particle_range, r);
        if (d.infectious)
            m.infection_range = std::max(m.infection_range, r);
    }
    for (auto const& a : result.absorptions)
    {
        double r = radial_distance(a.origin, a.position.x, a.position.y);
        m.max_particle_range = std::max(m.max_particle_range, r);
        if (a.infectious)
            m.infection_range = std::max(m.infection_range, r);
    }

    Histogram bands = histogram(radii, m.band_edges);
    m.band_fractions.assign(bands.counts.size(), 0.0);
    if (!radii.empty())
    {
        for (std::size_t i = 0; i < bands.counts.size(); ++i)
        {
            m.band_fractions[i] = static_cast<double>(bands.counts[i])
                                  / static_cast<double>(radii.size());
        }
        m.modal_band = static_cast<std::size_t>(
            std::max_element(bands.counts.begin(), bands.counts.end())
            - bands.counts.begin());
    }

    for (auto const& a : result.agents)
    {
        m.doses.push_back({a.id, a.dose, a.infected});
        if (a.infected && a.infected_at >= 0.0)
            m.infected_receivers.push_back(a.id);
    }
    m.deposited = result.depositions.size();
    m.absorbed = result.absorptions.size();
    m.blocked_fraction = result.emitted > 0 ? static_cast<double>(result.blocked)
                                                  / static_cast<double>(result.emitted)
                                            : 0.0;
    return m;
}

double deposited_fraction_within(SimulationResult const& result, double lo, double hi)
{
    if (result.depositions.empty())
        return 0.0;
    std::size_t inside = 0;
    for (auto const& d : result.depositions)
    {
        double r = radial_distance(d.origin, d.x, d.y);
        inside += (r >= lo && r <= hi) ? 1 : 0;
    }
    return static_cast<double>(inside) / static_cast<double>(result.depositions.size());
}

}  // namespace aerocomm
