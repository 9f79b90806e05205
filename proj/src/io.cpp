#include "aerocomm/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "aerocomm/errors.hpp"

namespace aerocomm
{
namespace
{
using nlohmann::json;
namespace fs = std::filesystem;

std::string trim(std::string s)
{
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

//---------------------------------------------------------------------------//
// Strict JSON object reader: every key must be consumed.
class Reader
{
  public:
    Reader(json const& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_, "expected an object");
    }

    std::string key_path(std::string const& key) const
    {
        return path_.empty() ? key : path_ + "." + key;
    }

    bool has(char const* key) const { return j_.contains(key); }

    json const& raw(char const* key)
    {
        seen_.insert(key);
        return j_.at(key);
    }

    void read(char const* key, double& out)
    {
        if (!has(key))
            return;
        auto const& v = raw(key);
        if (!v.is_number())
            throw ConfigError(key_path(key), "expected a number");
        out = v.get<double>();
    }

    void read(char const* key, bool& out)
    {
        if (!has(key))
            return;
        auto const& v = raw(key);
        if (!v.is_boolean())
            throw ConfigError(key_path(key), "expected a boolean");
        out = v.get<bool>();
    }

    void read(char const* key, int& out)
    {
        if (!has(key))
            return;
        auto const& v = raw(key);
        if (!v.is_number_integer())
            throw ConfigError(key_path(key), "expected an integer");
        out = v.get<int>();
    }

    void read(char const* key, std::string& out)
    {
        if (!has(key))
            return;
        auto const& v = raw(key);
        if (!v.is_string())
            throw ConfigError(key_path(key), "expected a string");
        out = v.get<std::string>();
    }

    void read(char const* key, Vec3& out)
    {
        if (!has(key))
            return;
        out = to_vec3(raw(key), key_path(key));
    }

    void read(char const* key, std::vector<double>& out)
    {
        if (!has(key))
            return;
        out = to_doubles(raw(key), key_path(key));
    }

    void read(char const* key, std::optional<std::uint64_t>& out)
    {
        if (!has(key))
            return;
        auto const& v = raw(key);
        if (v.is_null())
        {
            out.reset();
            return;
        }
        if (!v.is_number_unsigned())
            throw ConfigError(key_path(key), "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }

    static Vec3 to_vec3(json const& v, std::string const& path)
    {
        if (!v.is_array() || v.size() != 3)
            throw ConfigError(path, "expected an array of three numbers");
        Vec3 r;
        double* dst[] = {&r.x, &r.y, &r.z};
        for (std::size_t i = 0; i < 3; ++i)
        {
            if (!v[i].is_number())
                throw ConfigError(path, "expected an array of three numbers");
            *dst[i] = v[i].get<double>();
        }
        return r;
    }

    static std::vector<double> to_doubles(json const& v, std::string const& path)
    {
        if (!v.is_array())
            throw ConfigError(path, "expected an array of numbers");
        std::vector<double> out;
        for (auto const& e : v)
        {
            if (!e.is_number())
                throw ConfigError(path, "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
        {
            if (!seen_.count(it.key()))
                throw ConfigError(key_path(it.key()), "unknown key");
        }
    }

  private:
    json const& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json vec_json(Vec3 const& v) { return json::array({v.x, v.y, v.z}); }

//---------------------------------------------------------------------------//
void read_environment(Reader r, Environment& env)
{
    r.read("air_density", env.air_density);
    r.read("air_viscosity", env.air_viscosity);
    r.read("gravity", env.gravity);
    r.read("t_min", env.t_min);
    r.read("t_max", env.t_max);
    r.read("eddy_diffusivity_scale", env.eddy_diffusivity_scale);
    r.read("mixing_length", env.mixing_length);
    r.read("evaporation_enabled", env.evaporation_enabled);
    r.read("evaporation_rate", env.evaporation_rate);
    r.read("residue_fraction", env.residue_fraction);
    if (r.has("forces"))
    {
        Reader f(r.raw("forces"), r.key_path("forces"));
        f.read("gravity", env.forces.gravity);
        f.read("buoyancy", env.forces.buoyancy);
        f.read("drag", env.forces.drag);
        f.read("advection", env.forces.advection);
        f.read("eddy", env.forces.eddy);
        f.finish();
    }
    r.finish();
}

LengthUnit parse_unit(std::string const& s, std::string const& path)
{
    if (s == "m")
        return LengthUnit::metres;
    if (s == "um")
        return LengthUnit::micrometres;
    throw ConfigError(path, "unit must be \"m\" or \"um\"");
}

// Empirical table given inline (SI values + cumulative) or as a CSV file.
WeightedSample read_sample(Reader& r, fs::path const& base_dir, char const* default_unit)
{
    std::string csv;
    std::string unit = default_unit;
    r.read("csv", csv);
    r.read("unit", unit);
    LengthUnit u = parse_unit(unit, r.key_path("unit"));
    if (csv.empty())
        throw ConfigError(r.key_path("csv"), "empirical source needs a csv path");
    fs::path p = fs::path(csv).is_absolute() ? fs::path(csv) : base_dir / csv;
    try
    {
        return load_empirical_csv(p, u);
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(r.key_path("csv"), e.what());
    }
}

EmpiricalCdf read_inline_cdf(Reader& r)
{
    std::vector<double> values;
    std::vector<double> cumulative;
    r.read("values", values);
    r.read("cumulative", cumulative);
    try
    {
        return EmpiricalCdf::from_cumulative(std::move(values), std::move(cumulative));
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(r.key_path("cumulative"), e.what());
    }
}

DiameterSource read_diameters(json const& j, std::string const& path, fs::path const& base)
{
    Reader r(j, path);
    std::string type;
    r.read("type", type);
    DiameterSource out;
    if (type == "lognormal")
    {
        LogNormalDiameter d;
        r.read("log_mean", d.log_mean);
        r.read("log_std", d.log_std);
        if (!(d.log_std > 0.0))
            throw ConfigError(r.key_path("log_std"), "must be positive");
        out = d;
    }
    else if (type == "empirical")
    {
        if (r.has("values") || r.has("cumulative"))
            out = read_inline_cdf(r);
        else
            out = EmpiricalCdf::from_weighted(read_sample(r, base, "um"));
    }
    else
    {
        throw ConfigError(r.key_path("type"), "expected \"lognormal\" or \"empirical\"");
    }
    r.finish();
    return out;
}

SpeedSource read_speeds(json const& j,
                        std::string const& path,
                        fs::path const& base,
                        double gravity)
{
    Reader r(j, path);
    std::string type;
    r.read("type", type);
    SpeedSource out;
    if (type == "bimodal")
    {
        BimodalSpeed b;
        r.read("cloud_speed", b.cloud_speed);
        r.read("droplet_speed", b.droplet_speed);
        r.read("cloud_fraction", b.cloud_fraction);
        r.read("split_diameter", b.split_diameter);
        r.read("relative_spread", b.relative_spread);
        out = b;
    }
    else if (type == "empirical")
    {
        out = read_inline_cdf(r);
    }
    else if (type == "throw_distances")
    {
        // Speeds of frictionless horizontal throws landing at the distances
        double h0 = 1.64;
        r.read("h0", h0);
        if (!(h0 > 0.0))
            throw ConfigError(r.key_path("h0"), "must be positive");
        WeightedSample s = read_sample(r, base, "m");
        double scale = std::sqrt(gravity / (2.0 * h0));
        for (double& v : s.values)
            v *= scale;
        out = EmpiricalCdf::from_weighted(s);
    }
    else
    {
        throw ConfigError(r.key_path("type"),
                          "expected \"bimodal\", \"empirical\" or \"throw_distances\"");
    }
    r.finish();
    return out;
}

void read_emission(Reader r, EmissionProfile& e, fs::path const& base, double gravity)
{
    if (r.has("diameters"))
        e.diameters = read_diameters(r.raw("diameters"), r.key_path("diameters"), base);
    if (r.has("speeds"))
        e.speeds = read_speeds(r.raw("speeds"), r.key_path("speeds"), base, gravity);
    r.read("opening_angle_std_deg", e.opening_angle_std_deg);
    r.read("min_diameter_cutoff", e.min_diameter_cutoff);
    r.read("mass_density", e.mass_density);
    if (r.has("particles_per_event"))
    {
        Reader c(r.raw("particles_per_event"), r.key_path("particles_per_event"));
        for (std::size_t k = 0; k < num_event_kinds; ++k)
            c.read(to_string(static_cast<EventKind>(k)), e.particles_per_event[k]);
        c.finish();
    }
    if (r.has("jet"))
    {
        Reader j(r.raw("jet"), r.key_path("jet"));
        j.read("exit_speed", e.jet.exit_speed);
        j.read("mouth_diameter", e.jet.mouth_diameter);
        j.read("half_angle_deg", e.jet.half_angle_deg);
        j.read("decay_constant", e.jet.decay_constant);
        j.read("buoyant_rise_rate", e.jet.buoyant_rise_rate);
        j.finish();
    }
    r.finish();
}

AgentConfig read_agent(json const& j, std::string const& path)
{
    Reader r(j, path);
    AgentConfig a;
    r.read("infected", a.infected);
    a.events = default_event_model(a.infected);
    if (r.has("waypoints"))
    {
        auto const& w = r.raw("waypoints");
        if (!w.is_array())
            throw ConfigError(r.key_path("waypoints"), "expected an array");
        a.waypoints.clear();
        for (std::size_t i = 0; i < w.size(); ++i)
        {
            Reader wr(w[i], r.key_path("waypoints") + "[" + std::to_string(i) + "]");
            Waypoint p;
            wr.read("t", p.t);
            wr.read("position", p.position);
            wr.finish();
            a.waypoints.push_back(p);
        }
    }
    r.read("facing", a.facing);
    if (r.has("apertures"))
    {
        auto const& list = r.raw("apertures");
        if (!list.is_array())
            throw ConfigError(r.key_path("apertures"), "expected an array");
        a.apertures.clear();
        for (std::size_t i = 0; i < list.size(); ++i)
        {
            Reader ar(list[i], r.key_path("apertures") + "[" + std::to_string(i) + "]");
            std::string kind = "face";
            ar.read("kind", kind);
            auto k = aperture_kind_from_string(kind);
            if (!k)
                throw ConfigError(ar.key_path("kind"), "expected \"face\" or \"hand\"");
            Aperture ap = *k == ApertureKind::face ? default_face_aperture()
                                                   : default_hand_aperture();
            ar.read("offset", ap.offset);
            ar.read("radius", ap.radius);
            ar.read("gain", ap.gain);
            ar.finish();
            a.apertures.push_back(ap);
        }
    }
    r.read("detection_threshold", a.detection_threshold);
    r.read("virion_concentration", a.virion_concentration);
    if (r.has("mask"))
    {
        Reader m(r.raw("mask"), r.key_path("mask"));
        m.read("enabled", a.mask.enabled);
        m.read("efficiency", a.mask.efficiency);
        m.read("jet_reduction", a.mask.jet_reduction);
        m.finish();
    }
    if (r.has("events"))
    {
        Reader e(r.raw("events"), r.key_path("events"));
        e.read("breaths_per_minute", a.events.breaths_per_minute);
        e.read("p_silence_to_talk", a.events.speaking.p_silence_to_talk);
        e.read("p_talk_to_silence", a.events.speaking.p_talk_to_silence);
        e.read("initially_talking", a.events.speaking.talking);
        e.read("speech_step", a.events.speaking.step);
        e.read("cough_probability", a.events.cough_probability);
        e.read("sneeze_probability", a.events.sneeze_probability);
        e.read("trial_step", a.events.trial_step);
        e.finish();
    }
    if (r.has("scheduled"))
    {
        auto const& list = r.raw("scheduled");
        if (!list.is_array())
            throw ConfigError(r.key_path("scheduled"), "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i)
        {
            Reader sr(list[i], r.key_path("scheduled") + "[" + std::to_string(i) + "]");
            ScheduledEvent s;
            std::string kind = "cough";
            sr.read("t", s.time);
            sr.read("kind", kind);
            auto k = event_kind_from_string(kind);
            if (!k)
                throw ConfigError(sr.key_path("kind"), "unknown event kind");
            s.kind = *k;
            sr.finish();
            a.scheduled.push_back(s);
        }
    }
    r.finish();
    return a;
}

void read_run(Reader r, RunSettings& run)
{
    r.read("duration", run.duration);
    r.read("dt_global", run.dt_global);
    r.read("seed", run.seed);
    r.read("tol", run.control.tol);
    r.read("dt_max", run.control.dt_max);
    r.read("dt_min", run.control.dt_min);
    r.read("threads", run.threads);
    r.read("geometric_prefilter", run.geometric_prefilter);
    r.read("output_dir", run.output_dir);
    r.finish();
}

void read_analysis(Reader r, AnalysisSettings& a)
{
    r.read("heatmap_cell", a.heatmap_cell);
    r.read("heatmap_x_min", a.heatmap_x_min);
    r.read("heatmap_x_max", a.heatmap_x_max);
    r.read("heatmap_y_min", a.heatmap_y_min);
    r.read("heatmap_y_max", a.heatmap_y_max);
    r.read("radial_bands", a.radial_bands);
    r.read("level_thresholds", a.level_thresholds);
    r.finish();
}

json cdf_json(EmpiricalCdf const& c)
{
    return {{"type", "empirical"},
            {"values", std::vector<double>(c.values().begin(), c.values().end())},
            {"cumulative",
             std::vector<double>(c.cumulative().begin(), c.cumulative().end())}};
}

//---------------------------------------------------------------------------//
// Output helpers

class CsvFile
{
  public:
    explicit CsvFile(fs::path path) : path_(std::move(path)), out_(path_)
    {
        if (!out_)
            throw std::runtime_error("cannot open " + path_.string() + " for writing");
    }

    CsvFile& line(std::string const& s)
    {
        out_ << s << '\n';
        return *this;
    }

    void close()
    {
        out_.close();
        if (!out_)
            throw std::runtime_error("failed writing " + path_.string());
    }

  private:
    fs::path path_;
    std::ofstream out_;
};

template<class... Ts>
std::string row(Ts const&... cols)
{
    std::string s;
    auto add = [&s](auto const& v) {
        if (!s.empty())
            s += ',';
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_floating_point_v<T>)
            s += format_float(v);
        else if constexpr (std::is_same_v<T, bool>)
            s += v ? '1' : '0';
        else if constexpr (std::is_arithmetic_v<T>)
            s += std::to_string(v);
        else
            s += v;
    };
    (add(cols), ...);
    return s;
}

// Round to the output precision so JSON numbers match the CSV text.
double rounded(double v)
{
    if (!std::isfinite(v))
        return v;
    return std::stod(format_float(v));
}

json rounded_json(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return rounded(v);
}

json ledger_entry_json(LedgerEntry const& e)
{
    return {{"emitted", e.emitted},
            {"deposited", e.deposited},
            {"absorbed", e.absorbed},
            {"blocked", e.blocked},
            {"airborne_at_end", e.airborne}};
}

void write_text(fs::path const& path, std::string const& text)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

//---------------------------------------------------------------------------//
WeightedSample load_empirical_csv(fs::path const& path, LengthUnit unit)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string(), "cannot open empirical CSV");
    double scale = unit == LengthUnit::micrometres ? 1e-6 : 1.0;

    WeightedSample s;
    std::string text;
    std::size_t line_no = 0;
    bool header = false;
    double total = 0.0;
    while (std::getline(in, text))
    {
        ++line_no;
        text = trim(text);
        if (text.empty())
            continue;
        if (!header)
        {
            if (text != "value,count")
            {
                throw ConfigError(path.string() + ":" + std::to_string(line_no),
                                  "expected header 'value,count'");
            }
            header = true;
            continue;
        }
        auto bad = [&](char const* why) {
            return ConfigError(path.string() + ":" + std::to_string(line_no),
                               std::string("malformed row: ") + why);
        };
        auto comma = text.find(',');
        if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos)
            throw bad("expected two columns");
        std::string vs = trim(text.substr(0, comma));
        std::string cs = trim(text.substr(comma + 1));

        double value = 0.0;
        auto [vp, vec] = std::from_chars(vs.data(), vs.data() + vs.size(), value);
        if (vec != std::errc{} || vp != vs.data() + vs.size() || !std::isfinite(value))
            throw bad("value is not a number");
        long long count = 0;
        auto [cp, cec] = std::from_chars(cs.data(), cs.data() + cs.size(), count);
        if (cec != std::errc{} || cp != cs.data() + cs.size())
            throw bad("count is not an integer");
        if (count < 0)
            throw bad("count is negative");

        s.values.push_back(value * scale);
        s.weights.push_back(static_cast<double>(count));
        total += static_cast<double>(count);
    }
    if (!header)
        throw ConfigError(path.string(), "missing header 'value,count'");
    if (!(total > 0.0))
        throw ConfigError(path.string(), "zero total weight");
    return s;
}

ScenarioConfig parse_config(std::string const& text, fs::path const& base_dir)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError("", std::string("JSON parse error: ") + e.what());
    }

    ScenarioConfig c;
    Reader root(j, "");
    if (root.has("environment"))
        read_environment(Reader(root.raw("environment"), "environment"), c.environment);
    if (root.has("emission"))
    {
        read_emission(Reader(root.raw("emission"), "emission"),
                      c.emission,
                      base_dir,
                      c.environment.gravity);
    }
    if (root.has("agents"))
    {
        auto const& list = root.raw("agents");
        if (!list.is_array())
            throw ConfigError("agents", "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i)
            c.agents.push_back(read_agent(list[i], "agents[" + std::to_string(i) + "]"));
    }
    if (root.has("run"))
        read_run(Reader(root.raw("run"), "run"), c.run);
    if (root.has("analysis"))
        read_analysis(Reader(root.raw("analysis"), "analysis"), c.analysis);
    root.finish();

    c.validate();
    return c;
}

ScenarioConfig load_config(fs::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(ScenarioConfig const& c)
{
    json j;
    auto const& env = c.environment;
    j["environment"] = {
        {"air_density", env.air_density},
        {"air_viscosity", env.air_viscosity},
        {"gravity", env.gravity},
        {"t_min", env.t_min},
        {"t_max", env.t_max},
        {"eddy_diffusivity_scale", env.eddy_diffusivity_scale},
        {"mixing_length", env.mixing_length},
        {"evaporation_enabled", env.evaporation_enabled},
        {"evaporation_rate", env.evaporation_rate},
        {"residue_fraction", env.residue_fraction},
        {"forces",
         {{"gravity", env.forces.gravity},
          {"buoyancy", env.forces.buoyancy},
          {"drag", env.forces.drag},
          {"advection", env.forces.advection},
          {"eddy", env.forces.eddy}}},
    };

    auto const& e = c.emission;
    json emission;
    if (auto const* ln = std::get_if<LogNormalDiameter>(&e.diameters))
    {
        emission["diameters"]
            = {{"type", "lognormal"}, {"log_mean", ln->log_mean}, {"log_std", ln->log_std}};
    }
    else
    {
        emission["diameters"] = cdf_json(std::get<EmpiricalCdf>(e.diameters));
    }
    if (auto const* b = std::get_if<BimodalSpeed>(&e.speeds))
    {
        emission["speeds"] = {{"type", "bimodal"},
                              {"cloud_speed", b->cloud_speed},
                              {"droplet_speed", b->droplet_speed},
                              {"cloud_fraction", b->cloud_fraction},
                              {"split_diameter", b->split_diameter},
                              {"relative_spread", b->relative_spread}};
    }
    else
    {
        emission["speeds"] = cdf_json(std::get<EmpiricalCdf>(e.speeds));
    }
    emission["opening_angle_std_deg"] = e.opening_angle_std_deg;
    emission["min_diameter_cutoff"] = e.min_diameter_cutoff;
    emission["mass_density"] = e.mass_density;
    json counts;
    for (std::size_t k = 0; k < num_event_kinds; ++k)
        counts[to_string(static_cast<EventKind>(k))] = e.particles_per_event[k];
    emission["particles_per_event"] = counts;
    emission["jet"] = {{"exit_speed", e.jet.exit_speed},
                       {"mouth_diameter", e.jet.mouth_diameter},
                       {"half_angle_deg", e.jet.half_angle_deg},
                       {"decay_constant", e.jet.decay_constant},
                       {"buoyant_rise_rate", e.jet.buoyant_rise_rate}};
    j["emission"] = emission;

    json agents = json::array();
    for (auto const& a : c.agents)
    {
        json aj;
        aj["infected"] = a.infected;
        json wps = json::array();
        for (auto const& w : a.waypoints)
            wps.push_back({{"t", w.t}, {"position", vec_json(w.position)}});
        aj["waypoints"] = wps;
        aj["facing"] = vec_json(a.facing);
        json aps = json::array();
        for (auto const& ap : a.apertures)
        {
            aps.push_back({{"kind", to_string(ap.kind)},
                           {"offset", vec_json(ap.offset)},
                           {"radius", ap.radius},
                           {"gain", ap.gain}});
        }
        aj["apertures"] = aps;
        aj["detection_threshold"] = a.detection_threshold;
        aj["virion_concentration"] = a.virion_concentration;
        aj["mask"] = {{"enabled", a.mask.enabled},
                      {"efficiency", a.mask.efficiency},
                      {"jet_reduction", a.mask.jet_reduction}};
        aj["events"] = {{"breaths_per_minute", a.events.breaths_per_minute},
                        {"p_silence_to_talk", a.events.speaking.p_silence_to_talk},
                        {"p_talk_to_silence", a.events.speaking.p_talk_to_silence},
                        {"initially_talking", a.events.speaking.talking},
                        {"speech_step", a.events.speaking.step},
                        {"cough_probability", a.events.cough_probability},
                        {"sneeze_probability", a.events.sneeze_probability},
                        {"trial_step", a.events.trial_step}};
        json sched = json::array();
        for (auto const& s : a.scheduled)
            sched.push_back({{"t", s.time}, {"kind", to_string(s.kind)}});
        aj["scheduled"] = sched;
        agents.push_back(aj);
    }
    j["agents"] = agents;

    auto const& run = c.run;
    j["run"] = {{"duration", run.duration},
                {"dt_global", run.dt_global},
                {"tol", run.control.tol},
                {"dt_max", run.control.dt_max},
                {"dt_min", run.control.dt_min},
                {"threads", run.threads},
                {"geometric_prefilter", run.geometric_prefilter},
                {"output_dir", run.output_dir}};
    if (run.seed)
        j["run"]["seed"] = *run.seed;

    auto const& an = c.analysis;
    j["analysis"] = {{"heatmap_cell", an.heatmap_cell},
                     {"heatmap_x_min", an.heatmap_x_min},
                     {"heatmap_x_max", an.heatmap_x_max},
                     {"heatmap_y_min", an.heatmap_y_min},
                     {"heatmap_y_max", an.heatmap_y_max},
                     {"radial_bands", an.radial_bands},
                     {"level_thresholds", an.level_thresholds}};
    return j.dump(2) + "\n";
}

std::string format_float(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

OutputBundle write_outputs(SimulationResult const& result,
                           AnalysisSettings const& analysis,
                           fs::path const& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    LedgerReport ledger = ledger_check(result);
    OutputBundle b{dir / "deposition.csv",
                   dir / "absorption.csv",
                   dir / "airborne.csv",
                   dir / "heatmap.csv",
                   dir / "symbols.csv",
                   dir / "doses.csv",
                   dir / "summary.json",
                   dir / "ledger.json"};

    {
        CsvFile f(b.deposition_csv);
        f.line("particle_id,x_m,y_m,t_s,diameter_m,infectious");
        for (auto const& d : result.depositions)
            f.line(row(d.particle_id, d.x, d.y, d.t, d.diameter, d.infectious));
        f.close();
    }
    {
        CsvFile f(b.absorption_csv);
        f.line("particle_id,receiver_id,aperture,t_s,x_m,y_m,z_m,diameter_m,infectious");
        for (auto const& a : result.absorptions)
        {
            f.line(row(a.particle_id,
                       a.receiver,
                       std::string(to_string(a.aperture)),
                       a.t,
                       a.position.x,
                       a.position.y,
                       a.position.z,
                       a.diameter,
                       a.infectious));
        }
        f.close();
    }
    {
        CsvFile f(b.airborne_csv);
        f.line("particle_id,x_m,y_m,z_m,diameter_m,infectious");
        for (auto const& a : result.airborne_at_end)
        {
            f.line(row(a.particle_id,
                       a.position.x,
                       a.position.y,
                       a.position.z,
                       a.diameter,
                       a.infectious));
        }
        f.close();
    }
    HeatmapGrid grid = deposition_heatmap(result.depositions,
                                          analysis.heatmap_x_min,
                                          analysis.heatmap_y_min,
                                          analysis.heatmap_x_max,
                                          analysis.heatmap_y_max,
                                          analysis.heatmap_cell);
    {
        CsvFile f(b.heatmap_csv);
        f.line("origin_x_m,origin_y_m,cell_m,nx,ny,out_of_extent");
        f.line(row(grid.origin_x, grid.origin_y, grid.cell, grid.nx, grid.ny,
                   grid.out_of_extent));
        for (std::size_t jy = 0; jy < grid.ny; ++jy)
        {
            std::string s;
            for (std::size_t ix = 0; ix < grid.nx; ++ix)
            {
                if (ix)
                    s += ',';
                s += std::to_string(grid.at(ix, jy));
            }
            f.line(s);
        }
        f.close();
    }
    {
        CsvFile f(b.symbols_csv);
        f.line("timestamp_s,emitter,event_kind,level,particle_count,infectious_count");
        for (auto const& s : result.symbols)
        {
            f.line(row(s.timestamp,
                       s.emitter,
                       std::string(to_string(s.kind)),
                       s.level,
                       s.particle_count,
                       s.infectious_count));
        }
        f.close();
    }
    {
        CsvFile f(b.doses_csv);
        f.line("receiver_id,t_s,dose");
        for (auto const& a : result.agents)
        {
            for (auto const& p : a.trace)
                f.line(row(a.id, p.t, p.dose));
        }
        f.close();
    }

    MetricsSummary m = summary_metrics(result, analysis.radial_bands);
    json ledger_json = {{"total", ledger_entry_json(ledger.total)}};
    json per_event = json::array();
    for (auto const& e : ledger.per_event)
    {
        json ej = ledger_entry_json(e);
        ej["event"] = e.event;
        ej["kind"] = to_string(result.events[e.event].kind);
        ej["emitter"] = result.events[e.event].emitter;
        ej["t_s"] = rounded(result.events[e.event].time);
        per_event.push_back(ej);
    }
    ledger_json["per_event"] = per_event;
    write_text(b.ledger_json, ledger_json.dump(2) + "\n");

    json summary;
    summary["infection_range_m"] = rounded(m.infection_range);
    summary["max_particle_range_m"] = rounded(m.max_particle_range);
    json doses = json::array();
    for (auto const& d : m.doses)
        doses.push_back({{"receiver_id", d.id}, {"dose", rounded(d.dose)}, {"infected", d.infected}});
    summary["doses"] = doses;
    summary["infected_receivers"] = m.infected_receivers;
    json bands = json::array();
    for (std::size_t i = 0; i < m.band_fractions.size(); ++i)
    {
        bands.push_back({{"lower_m", rounded_json(m.band_edges[i])},
                         {"upper_m", rounded_json(m.band_edges[i + 1])},
                         {"fraction", rounded(m.band_fractions[i])}});
    }
    summary["radial_bands"] = bands;
    summary["modal_band"] = m.modal_band;
    summary["blocked_fraction"] = rounded(m.blocked_fraction);
    summary["end_time_s"] = rounded(result.end_time);
    summary["ledger"] = ledger_entry_json(ledger.total);
    write_text(b.summary_json, summary.dump(2) + "\n");
    return b;
}

}  // namespace aerocomm
