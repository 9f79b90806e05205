#include "aerocomm/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aerocomm/analysis.hpp"
#include "aerocomm/errors.hpp"
#include "aerocomm/io.hpp"
#include "aerocomm/scenario.hpp"

namespace aerocomm
{
namespace
{
constexpr int exit_ok = 0;
constexpr int exit_invalid = 1;
constexpr int exit_runtime = 2;

// AEROCOMM_THREADS caps the engine's thread count; 0 or unset means auto.
int thread_cap(int configured)
{
    char const* env = std::getenv("AEROCOMM_THREADS");
    if (!env || !*env)
        return configured;
    int cap = std::atoi(env);
    if (cap <= 0)
        return configured;
    return configured == 0 ? cap : std::min(configured, cap);
}

}  // namespace

int cli_main(int argc, char const* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Lagrangian Monte Carlo simulator of respiratory aerosol transmission",
                 "aerocomm"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    auto* simulate = app.add_subcommand("simulate", "run a scenario and write outputs");
    simulate->add_option("--config", config_path, "scenario JSON")->required();
    simulate->add_option("--out", out_dir, "output directory")->required();
    simulate->add_option("--seed", seed, "override run.seed");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a config file");
    validate->add_option("--config", validate_path, "scenario JSON")->required();

    double v = 0.0;
    double h0 = 0.0;
    double g = 9.81;
    auto* dmax = app.add_subcommand("dmax", "range of a frictionless horizontal throw");
    dmax->add_option("--v", v, "horizontal speed [m/s]")->required();
    dmax->add_option("--h0", h0, "release height [m]")->required();
    dmax->add_option("--g", g, "gravitational acceleration [m/s^2]");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::CallForHelp const&)
    {
        out << app.help();
        return exit_ok;
    }
    catch (CLI::ParseError const& e)
    {
        err << "error: " << e.what() << "\n" << app.help();
        return exit_invalid;
    }

    try
    {
        if (*dmax)
        {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.3f", max_throw_distance(v, h0, g));
            out << buf << "\n";
            return exit_ok;
        }
        if (*validate)
        {
            ScenarioConfig c = load_config(validate_path);
            out << "ok: " << c.agents.size() << " agent(s)";
            if (!c.run.seed)
                out << " (run.seed not set; pass --seed to simulate)";
            out << "\n";
            return exit_ok;
        }
        if (*simulate)
        {
            ScenarioConfig c = load_config(config_path);
            if (seed)
                c.run.seed = seed;
            c.run.threads = thread_cap(c.run.threads);
            c.validate();
            if (!c.run.seed)
                throw ConfigError("run.seed", "an explicit seed is required");
            // Fail before a long run rather than after it.
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            if (ec)
                throw std::runtime_error("cannot create " + out_dir + ": " + ec.message());
            SimulationResult r = run(c);
            OutputBundle b = write_outputs(r, c.analysis, out_dir);
            LedgerReport l = ledger_check(r);
            out << "emitted " << l.total.emitted << ", deposited " << l.total.deposited
                << ", absorbed " << l.total.absorbed << ", blocked " << l.total.blocked
                << ", airborne " << l.total.airborne << "\n"
                << "outputs in " << b.summary_json.parent_path().string() << "\n";
            return exit_ok;
        }
    }
    catch (ConfigError const& e)
    {
        err << "config error: " << e.what() << "\n";
        return exit_invalid;
    }
    catch (InvalidInput const& e)
    {
        err << "invalid input: " << e.what() << "\n";
        return exit_invalid;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_invalid;
}

}  // namespace aerocomm
