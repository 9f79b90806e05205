#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scenario.hpp"

namespace aerocomm
{
//! Floor deposition counts on a regular grid; row j spans y, column i spans x.
struct HeatmapGrid
{
    double origin_x{0};
    double origin_y{0};
    double cell{0.1};
    std::size_t nx{0};
    std::size_t ny{0};
    std::vector<std::uint64_t> counts;  //!< row-major, ny rows of nx
    std::uint64_t out_of_extent{0};

    std::uint64_t at(std::size_t i, std::size_t j) const { return counts[j * nx + i]; }
    std::uint64_t total() const;
};

HeatmapGrid deposition_heatmap(std::span<DepositionRecord const> records,
                               double x_min,
                               double y_min,
                               double x_max,
                               double y_max,
                               double cell);

struct Histogram
{
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;  //!< edges.size() - 1 bins
    std::uint64_t underflow{0};
    std::uint64_t overflow{0};

    std::uint64_t total() const;
};

//! Left-closed bins [edges[i], edges[i+1]); the last edge is exclusive too.
Histogram histogram(std::span<double const> values, std::span<double const> edges);

//! Horizontal distance of a floor or aperture hit from its emission point.
double radial_distance(Vec3 const& origin, double x, double y);

struct ReceiverDose
{
    std::uint32_t id;
    double dose;
    bool infected;
};

struct MetricsSummary
{
    double infection_range{0};     //!< [m]
    double max_particle_range{0};  //!< [m]
    std::vector<ReceiverDose> doses;
    std::vector<std::uint32_t> infected_receivers;
    //! Band edges 0, b_1, ..., b_n, +inf; fractions of deposits per band.
    std::vector<double> band_edges;
    std::vector<double> band_fractions;
    std::size_t modal_band{0};
    std::size_t deposited{0};
    std::size_t absorbed{0};
    double blocked_fraction{0};
};

MetricsSummary summary_metrics(SimulationResult const& result,
                               std::span<double const> radial_bands);

//! Fraction of deposits whose radial distance lies in [lo, hi].
double deposited_fraction_within(SimulationResult const& result, double lo, double hi);

}  // namespace aerocomm
