#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "aerocomm/errors.hpp"
#include "aerocomm/io.hpp"

using namespace aerocomm;
namespace fs = std::filesystem;

namespace
{
fs::path scratch_root()
{
    return fs::temp_directory_path() / ("aerocomm_io_" + std::to_string(::getpid()));
}

struct CleanUp
{
    ~CleanUp() { fs::remove_all(scratch_root()); }
} const clean_up;

fs::path scratch(std::string const& name)
{
    fs::path p = scratch_root() / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

fs::path write_file(std::string const& name, std::string const& text)
{
    fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(fs::path const& p)
{
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line))
    {
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ','))
            cols.push_back(col);
        rows.push_back(cols);
    }
    return rows;
}

std::string config_error_path(std::string const& text)
{
    try
    {
        parse_config(text);
    }
    catch (ConfigError const& e)
    {
        return e.path();
    }
    return "<accepted>";
}

double at_precision(double v) { return std::stod(format_float(v)); }

char const* small_crowd = R"({
  "emission": {"particles_per_event": {"breath": 10, "speech_frame": 20, "cough": 800, "sneeze": 0}},
  "agents": [
    {"infected": true,
     "events": {"cough_probability": 0.05},
     "scheduled": [{"t": 0, "kind": "cough"}]},
    {"waypoints": [{"t": 0, "position": [0, 0.6, 1.6]}], "facing": [0, -1, 0],
     "events": {"breaths_per_minute": 0, "p_silence_to_talk": 0,
                "cough_probability": 0, "sneeze_probability": 0},
     "detection_threshold": 3},
    {"waypoints": [{"t": 0, "position": [-1, 1, 1.5]}, {"t": 3, "position": [1, 1, 1.5]}],
     "facing": [1, 0, 0]}
  ],
  "run": {"duration": 3, "seed": 7}
})";

}  // namespace

TEST_CASE("defaults from an almost empty config")
{
    ScenarioConfig c = parse_config(R"({"agents": [{}]})");
    CHECK(c.environment == Environment{});
    CHECK(c.environment.air_density == 1.2041);
    CHECK(c.environment.air_viscosity == 18.13e-6);
    REQUIRE(c.agents.size() == 1);
    CHECK(c.agents[0].waypoints.front().position.z == 1.64);
    CHECK(c.emission.opening_angle_std_deg == 6.25);
    CHECK(c.emission.count(EventKind::cough) == 5000);
    CHECK(c.emission.min_diameter_cutoff == 50e-6);
    CHECK_FALSE(c.run.seed.has_value());
    CHECK(c.agents[0].events == default_event_model(false));
    CHECK(parse_config(R"({"agents": [{"infected": true}]})").agents[0].events
          == default_event_model(true));
    CHECK(parse_config("{}").agents.empty());
}

TEST_CASE("out-of-domain fields are rejected by path")
{
    struct Case
    {
        char const* text;
        char const* path;
    };
    Case cases[] = {
        {R"({"environment": {"air_density": -1.2}})", "environment.air_density"},
        {R"({"environment": {"air_viscosity": 0}})", "environment.air_viscosity"},
        {R"({"environment": {"gravity": -9.81}})", "environment.gravity"},
        {R"({"environment": {"t_min": 40}})", "environment.t_max"},
        {R"({"environment": {"air_density": "dense"}})", "environment.air_density"},
        {R"({"environment": {"forces": {"lift": true}}})", "environment.forces.lift"},
        {R"({"emission": {"opening_angle_std_deg": 0}})", "emission.opening_angle_std_deg"},
        {R"({"emission": {"min_diameter_cutoff": -1e-6}})", "emission.min_diameter_cutoff"},
        {R"({"emission": {"particles_per_event": {"cough": -5}}})", "emission.particles_per_event.cough"},
        {R"({"emission": {"particles_per_event": {"yawn": 5}}})", "emission.particles_per_event.yawn"},
        {R"({"emission": {"diameters": {"type": "weibull"}}})", "emission.diameters.type"},
        {R"({"emission": {"speeds": {"type": "bimodal", "cloud_fraction": 2}}})", "emission.speeds.cloud_fraction"},
        {R"({"emission": {"jet": {"half_angle_deg": 95}}})", "emission.jet"},
        {R"({"agents": [{"apertures": [{"radius": -0.1}]}]})", "agents[0].apertures[0].radius"},
        {R"({"agents": [{"apertures": [{"gain": 1.5}]}]})", "agents[0].apertures[0].gain"},
        {R"({"agents": [{"apertures": [{"kind": "ear"}]}]})", "agents[0].apertures[0].kind"},
        {R"({"agents": [{"detection_threshold": 0}]})", "agents[0].detection_threshold"},
        {R"({"agents": [{"mask": {"efficiency": 1.2}}]})", "agents[0].mask.efficiency"},
        {R"({"agents": [{}, {"events": {"cough_probability": 2}}]})", "agents[1].events.cough_probability"},
        {R"({"agents": [{"scheduled": [{"t": 1, "kind": "yawn"}]}]})", "agents[0].scheduled[0].kind"},
        {R"({"agents": [{"waypoints": [{"t": 1, "position": [0,0,1]}, {"t": 0, "position": [0,0,1]}]}]})", "agents[0].waypoints"},
        {R"({"agents": [{"facing": [0, 0, 0]}]})", "agents[0].facing"},
        {R"({"agents": [{"nickname": "bob"}]})", "agents[0].nickname"},
        {R"({"run": {"duration": -1}})", "run.duration"},
        {R"({"run": {"dt_global": 0}})", "run.dt_global"},
        {R"({"run": {"tol": 0}})", "run.tol"},
        {R"({"run": {"seed": -3}})", "run.seed"},
        {R"({"run": {"seed": 1.5}})", "run.seed"},
        {R"({"run": {"threads": -2}})", "run.threads"},
        {R"({"analysis": {"heatmap_cell": 0}})", "analysis.heatmap_cell"},
        {R"({"analysis": {"radial_bands": [2, 1]}})", "analysis.radial_bands"},
        {R"({"analysis": {"level_thresholds": [1000, 100]}})", "analysis.level_thresholds"},
        {R"({"colour": "blue"})", "colour"},
    };
    for (auto const& c : cases)
    {
        CAPTURE(c.text);
        CHECK(config_error_path(c.text) == c.path);
    }
    CHECK(config_error_path("{ not json") == "");
}

TEST_CASE("config round trip")
{
    ScenarioConfig c = load_config(fs::path(AEROCOMM_DATA_DIR) / "table2_cough.json");
    CHECK(std::holds_alternative<EmpiricalCdf>(c.emission.diameters));
    CHECK(std::holds_alternative<EmpiricalCdf>(c.emission.speeds));
    std::string text = config_to_json(c);
    ScenarioConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(config_to_json(back) == text);

    ScenarioConfig rich = parse_config(small_crowd);
    rich.environment.evaporation_enabled = true;
    rich.environment.forces.eddy = false;
    rich.agents[0].mask = {true, 0.65, 0.5};
    rich.agents[2].apertures.push_back({ApertureKind::hand, {0.1, 0.2, -0.3}, 0.05, 0.123456789012345});
    rich.emission.speeds = BimodalSpeed{7.1, 4.3, 0.3, 80e-6, 0.05};
    rich.analysis.radial_bands = {0.25, 1.0 / 3.0, 4.0};
    rich.run.seed = 18446744073709551615ULL;
    CHECK(parse_config(config_to_json(rich)) == rich);
}

TEST_CASE("relative empirical CSV paths resolve against the config")
{
    ScenarioConfig c = load_config(fs::path(AEROCOMM_DATA_DIR) / "table2_cough.json");
    auto const& d = std::get<EmpiricalCdf>(c.emission.diameters);
    CHECK(d.min() > 1e-6);
    CHECK(d.max() < 300e-6);
    CHECK_THROWS_AS(parse_config(R"({"emission": {"diameters": {"type": "empirical", "csv": "nope.csv", "unit": "um"}}})",
                                 AEROCOMM_DATA_DIR),
                    ConfigError);
}

TEST_CASE("empirical CSV ingestion")
{
    SUBCASE("micrometres to metres")
    {
        auto p = write_file("d.csv", "value,count\n25,10\n85,2\n");
        auto s = load_empirical_csv(p, LengthUnit::micrometres);
        REQUIRE(s.values.size() == 2);
        CHECK(s.values[0] == doctest::Approx(2.5e-5).scale(0));
        CHECK(s.values[1] == doctest::Approx(8.5e-5).scale(0));
        CHECK(s.weights == std::vector<double>{10, 2});
    }
    SUBCASE("metres stay metres")
    {
        auto p = write_file("m.csv", "value,count\n1.5,3\n\n2.5,0\n");
        auto s = load_empirical_csv(p, LengthUnit::metres);
        CHECK(s.values == std::vector<double>{1.5, 2.5});
    }
    SUBCASE("header only")
    {
        auto p = write_file("h.csv", "value,count\n");
        CHECK_THROWS_AS(load_empirical_csv(p, LengthUnit::metres), ConfigError);
    }
    SUBCASE("all zero counts")
    {
        auto p = write_file("z.csv", "value,count\n1,0\n2,0\n");
        CHECK_THROWS_AS(load_empirical_csv(p, LengthUnit::metres), ConfigError);
    }
    SUBCASE("negative count names the line")
    {
        auto p = write_file("n.csv", "value,count\n1,4\n2,-1\n");
        try
        {
            load_empirical_csv(p, LengthUnit::metres);
            FAIL("expected a config error");
        }
        catch (ConfigError const& e)
        {
            CHECK(std::string(e.path()).ends_with(":3"));
        }
    }
    SUBCASE("malformed rows")
    {
        for (char const* text : {"value,count\nabc,1\n", "value,count\n1\n", "value,count\n1,2,3\n",
                                 "value,count\n1,2.5\n", "size,n\n1,2\n"})
        {
            auto p = write_file("bad.csv", text);
            CHECK_THROWS_AS(load_empirical_csv(p, LengthUnit::metres), ConfigError);
        }
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(load_empirical_csv(scratch("missing.csv"), LengthUnit::metres), ConfigError);
    }
}

TEST_CASE("float formatting")
{
    CHECK(format_float(2.891162) == "2.891162");
    CHECK(format_float(1.0 / 3.0) == "0.333333333");
    CHECK(format_float(2.5e-5) == "2.5e-05");
    CHECK(format_float(0.0) == "0");
}

TEST_CASE("empty result bundle")
{
    fs::path dir = scratch("empty");
    SimulationResult r;
    OutputBundle b = write_outputs(r, AnalysisSettings{}, dir);
    CHECK(slurp(b.deposition_csv) == "particle_id,x_m,y_m,t_s,diameter_m,infectious\n");
    CHECK(read_csv(b.absorption_csv).size() == 1);
    CHECK(read_csv(b.airborne_csv).size() == 1);
    CHECK(read_csv(b.symbols_csv).size() == 1);
    CHECK(read_csv(b.doses_csv).size() == 1);
    auto heat = read_csv(b.heatmap_csv);
    CHECK(heat.size() == 2 + 60);
    auto summary = nlohmann::json::parse(slurp(b.summary_json));
    CHECK(summary["infection_range_m"] == 0.0);
    CHECK(summary["max_particle_range_m"] == 0.0);
    CHECK(summary["ledger"]["emitted"] == 0);
    auto ledger = nlohmann::json::parse(slurp(b.ledger_json));
    CHECK(ledger["per_event"].empty());
}

TEST_CASE("bundles agree with the in-memory result")
{
    ScenarioConfig c = parse_config(small_crowd);
    SimulationResult r = run(c);
    REQUIRE(r.depositions.size() > 0);
    REQUIRE(r.absorptions.size() > 0);
    REQUIRE(r.airborne_at_end.size() > 0);
    OutputBundle b = write_outputs(r, c.analysis, scratch("crowd"));

    auto dep = read_csv(b.deposition_csv);
    REQUIRE(dep.size() == r.depositions.size() + 1);
    for (std::size_t i = 0; i < r.depositions.size(); ++i)
    {
        auto const& row = dep[i + 1];
        auto const& d = r.depositions[i];
        REQUIRE(row.size() == 6);
        CHECK(std::stoull(row[0]) == d.particle_id);
        CHECK(std::stod(row[1]) == at_precision(d.x));
        CHECK(std::stod(row[2]) == at_precision(d.y));
        CHECK(std::stod(row[3]) == at_precision(d.t));
        CHECK(std::stod(row[4]) == at_precision(d.diameter));
        CHECK((row[5] == "1") == d.infectious);
    }

    auto abs = read_csv(b.absorption_csv);
    REQUIRE(abs.size() == r.absorptions.size() + 1);
    for (std::size_t i = 0; i < r.absorptions.size(); ++i)
    {
        auto const& row = abs[i + 1];
        auto const& a = r.absorptions[i];
        REQUIRE(row.size() == 9);
        CHECK(std::stoull(row[0]) == a.particle_id);
        CHECK(std::stoul(row[1]) == a.receiver);
        CHECK(row[2] == to_string(a.aperture));
        CHECK(std::stod(row[3]) == at_precision(a.t));
        CHECK(std::stod(row[6]) == at_precision(a.position.z));
    }
    CHECK(read_csv(b.airborne_csv).size() == r.airborne_at_end.size() + 1);
    CHECK(read_csv(b.symbols_csv).size() == r.symbols.size() + 1);

    std::size_t trace_points = 0;
    for (auto const& a : r.agents)
        trace_points += a.trace.size();
    CHECK(read_csv(b.doses_csv).size() == trace_points + 1);

    auto heat = read_csv(b.heatmap_csv);
    std::uint64_t in_grid = 0;
    for (std::size_t j = 2; j < heat.size(); ++j)
    {
        for (auto const& v : heat[j])
            in_grid += std::stoull(v);
    }
    CHECK(in_grid + std::stoull(heat[1][5]) == r.depositions.size());

    auto ledger = nlohmann::json::parse(slurp(b.ledger_json));
    CHECK(ledger["total"]["emitted"] == r.emitted);
    CHECK(ledger["total"]["deposited"] == r.depositions.size());
    CHECK(ledger["total"]["absorbed"] == r.absorptions.size());
    CHECK(ledger["total"]["airborne_at_end"] == r.airborne_at_end.size());
    CHECK(ledger["per_event"].size() == r.events.size());

    OutputBundle again = write_outputs(r, c.analysis, scratch("crowd_again"));
    CHECK(slurp(again.deposition_csv) == slurp(b.deposition_csv));
    CHECK(slurp(again.summary_json) == slurp(b.summary_json));
}

TEST_CASE("fixed-seed runs give byte-identical bundles")
{
    ScenarioConfig c = parse_config(small_crowd);
    OutputBundle a = write_outputs(run(c), c.analysis, scratch("first"));
    OutputBundle b = write_outputs(run(c), c.analysis, scratch("second"));
    for (auto [x, y] : {std::pair{a.deposition_csv, b.deposition_csv},
                        std::pair{a.absorption_csv, b.absorption_csv},
                        std::pair{a.airborne_csv, b.airborne_csv},
                        std::pair{a.heatmap_csv, b.heatmap_csv},
                        std::pair{a.symbols_csv, b.symbols_csv},
                        std::pair{a.doses_csv, b.doses_csv},
                        std::pair{a.summary_json, b.summary_json},
                        std::pair{a.ledger_json, b.ledger_json}})
    {
        CAPTURE(x);
        CHECK(slurp(x) == slurp(y));
    }
}

TEST_CASE("unwritable output directory")
{
    fs::path file = write_file("plain_file", "x");
    CHECK_THROWS_AS(write_outputs(SimulationResult{}, AnalysisSettings{}, file / "sub"),
                    std::runtime_error);
}
