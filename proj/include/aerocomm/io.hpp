#pragma once

#include <filesystem>
#include <string>

#include "analysis.hpp"
#include "emission.hpp"
#include "scenario.hpp"

namespace aerocomm
{
enum class LengthUnit
{
    metres,
    micrometres,
};

/*!
 * Read a `value,count` CSV into a weighted sample in metres.
 *
 * Errors report the 1-based line number. A file without positive total
 * weight is rejected.
 */
WeightedSample load_empirical_csv(std::filesystem::path const& path, LengthUnit unit);

//! Parse a config file. Empirical CSV paths resolve relative to its directory.
ScenarioConfig load_config(std::filesystem::path const& path);
ScenarioConfig parse_config(std::string const& text,
                            std::filesystem::path const& base_dir = {});

//! Serialize with full double precision; parse_config reproduces the input.
std::string config_to_json(ScenarioConfig const& config);

//! `%.9g` formatting used by every output file.
std::string format_float(double v);

struct OutputBundle
{
    std::filesystem::path deposition_csv;
    std::filesystem::path absorption_csv;
    std::filesystem::path airborne_csv;
    std::filesystem::path heatmap_csv;
    std::filesystem::path symbols_csv;
    std::filesystem::path doses_csv;
    std::filesystem::path summary_json;
    std::filesystem::path ledger_json;
};

OutputBundle write_outputs(SimulationResult const& result,
                           AnalysisSettings const& analysis,
                           std::filesystem::path const& dir);

}  // namespace aerocomm
