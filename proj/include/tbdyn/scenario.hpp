//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/scenario.hpp
//! Scenario documents (JSON, schema 1), figure presets, dispatch to the
//! analysis modules and CSV output.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bifurcation.hpp"
#include "ensemble.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "ode.hpp"
#include "sde.hpp"

namespace tbdyn
{
//! Invalid scenario document; `key_path` locates the offending entry.
class ConfigError : public DomainError
{
  public:
    ConfigError(std::string key_path, std::string const& message)
        : DomainError(key_path + ": " + message), key_path_(std::move(key_path))
    {
    }
    std::string const& key_path() const { return key_path_; }

  private:
    std::string key_path_;
};

//---------------------------------------------------------------------------//
// SCENARIO
//---------------------------------------------------------------------------//
enum class Mode
{
    ode,
    sde_demographic,
    sde_environmental,
    equilibria,
    scan1d,
    scan2d,
    contour,
    rankdiff,
};

inline constexpr std::array<std::pair<Mode, std::string_view>, 8> mode_names{{
    {Mode::ode, "ode"},
    {Mode::sde_demographic, "sde-demographic"},
    {Mode::sde_environmental, "sde-environmental"},
    {Mode::equilibria, "equilibria"},
    {Mode::scan1d, "scan1d"},
    {Mode::scan2d, "scan2d"},
    {Mode::contour, "contour"},
    {Mode::rankdiff, "rankdiff"},
}};

inline std::string_view to_string(Mode m)
{
    for (auto [k, v] : mode_names)
    {
        if (k == m)
            return v;
    }
    return "?";
}

using ParamOverrides = std::map<std::string, double>;

struct SimSpec
{
    double dt = 0.01;
    double t_end = 100.0;
    std::size_t record_stride = 100;
    std::uint64_t seed = 20260101;
    std::size_t n_paths = 1000;
    std::size_t sample_paths = 4;
    std::vector<double> snapshot_times;

    friend bool operator==(SimSpec const&, SimSpec const&) = default;
};

struct OdeSpec
{
    double t_end = 500.0;
    StepControl control{};
    //! Window for the B log-slope table.
    std::array<double, 2> slope_window{10.0, 40.0};

    friend bool operator==(OdeSpec const&, OdeSpec const&) = default;
};

struct OdeRun
{
    std::string label;
    StateVec init;
    ParamOverrides params;

    friend bool operator==(OdeRun const&, OdeRun const&) = default;
};

struct ScanSpec
{
    std::string param = "delta";
    double lo = 0.0;
    double hi = 0.35;
    std::size_t points = 200;
    std::size_t eq_grid_points = 2000;

    friend bool operator==(ScanSpec const&, ScanSpec const&) = default;
};

struct Scan2dSpec
{
    std::string second_param = "b";
    double lo = 0.05;
    double hi = 0.5;
    std::size_t slices = 16;
    std::size_t delta_points = 200;

    friend bool operator==(Scan2dSpec const&, Scan2dSpec const&) = default;
};

struct ContourSpec
{
    double b_lo = 0.05, b_hi = 0.5;
    std::size_t b_points = 46;
    double gamma_lo = 0.1, gamma_hi = 2.0;
    std::size_t gamma_points = 39;

    friend bool operator==(ContourSpec const&, ContourSpec const&) = default;
};

struct RankDiffSpec
{
    double t1 = 0;
    double t2 = 0;

    friend bool operator==(RankDiffSpec const&, RankDiffSpec const&) = default;
};

struct Scenario
{
    std::string name;
    Mode mode = Mode::ode;
    ParamOverrides params;
    bool range_check = true;
    StateVec init;
    std::optional<SimSpec> sim;
    std::optional<EnvProcessParams> env;
    std::optional<OdeSpec> ode;
    std::vector<OdeRun> runs;
    std::optional<ScanSpec> scan;
    std::optional<Scan2dSpec> scan2d;
    std::optional<ContourSpec> contour;
    std::optional<RankDiffSpec> rankdiff;
    std::vector<std::string> outputs;

    //! Baseline parameters with the overrides applied.
    ModelParams model_params() const
    {
        ModelParams p;
        for (auto const& [k, v] : params)
            p.at(k) = v;
        return p;
    }

    friend bool operator==(Scenario const&, Scenario const&) = default;
};

//! Tables each mode can emit; the first entries are the defaults.
inline std::vector<std::string> available_outputs(Mode m)
{
    switch (m)
    {
        case Mode::ode: return {"trajectories", "outcomes", "slopes"};
        case Mode::sde_demographic:
        case Mode::sde_environmental:
            return {"timeseries", "histograms", "paths", "ode_reference",
                    "summary", "end_samples"};
        case Mode::equilibria: return {"equilibria"};
        case Mode::scan1d: return {"branch", "bifpoints"};
        case Mode::scan2d: return {"boundaries", "slices"};
        case Mode::contour: return {"lambda1"};
        case Mode::rankdiff: return {"rankdiff", "timeseries", "summary"};
    }
    return {};
}

//---------------------------------------------------------------------------//
// VALIDATION
//---------------------------------------------------------------------------//
namespace detail
{
inline void validate_overrides(ParamOverrides const& ov,
                               bool range_check,
                               std::string const& path)
{
    for (auto const& [k, v] : ov)
    {
        std::string key = path + "." + k;
        if (!ModelParams::is_name(k))
            throw ConfigError(key, "unknown model parameter");
        if (!std::isfinite(v) || !(v > 0))
            throw ConfigError(key, "must be finite and > 0");
        if (k == "K" && v < 1)
            throw ConfigError(key, "must be >= 1");
        if (range_check)
        {
            if (auto b = sweep_bounds(k); b && (v < b->lo || v > b->hi))
            {
                char buf[96];
                std::snprintf(buf, sizeof buf, "outside [%g, %g]", b->lo,
                              b->hi);
                throw ConfigError(key, buf);
            }
        }
    }
}

inline void validate_state(StateVec const& s, std::string const& path)
{
    for (std::size_t i = 0; i < 4; ++i)
    {
        if (!std::isfinite(s[i]) || s[i] < 0)
        {
            throw ConfigError(path + "." + std::string(state_names[i]),
                              "must be finite and >= 0");
        }
    }
}
}  // namespace detail

/*!
 * Check mode-required blocks, parameter overrides and value ranges.
 *
 * Throws ConfigError naming the first offending key.
 */
inline void validate(Scenario const& s)
{
    detail::validate_overrides(s.params, s.range_check, "params");
    detail::validate_state(s.init, "init");
    for (std::size_t i = 0; i < s.runs.size(); ++i)
    {
        std::string path = "runs[" + std::to_string(i) + "]";
        detail::validate_overrides(s.runs[i].params, s.range_check,
                                   path + ".params");
        detail::validate_state(s.runs[i].init, path + ".init");
    }

    auto require = [&](bool present, char const* key) {
        if (!present)
        {
            throw ConfigError(key, "required for mode '"
                                       + std::string(to_string(s.mode)) + "'");
        }
    };
    switch (s.mode)
    {
        case Mode::ode: require(s.ode.has_value(), "ode"); break;
        case Mode::sde_environmental:
            require(s.env.has_value(), "env");
            [[fallthrough]];
        case Mode::sde_demographic: require(s.sim.has_value(), "sim"); break;
        case Mode::scan1d: require(s.scan.has_value(), "scan"); break;
        case Mode::scan2d: require(s.scan2d.has_value(), "scan2d"); break;
        case Mode::contour: require(s.contour.has_value(), "contour"); break;
        case Mode::rankdiff:
            require(s.sim.has_value(), "sim");
            require(s.rankdiff.has_value(), "rankdiff");
            break;
        case Mode::equilibria: break;
    }

    if (s.sim)
    {
        auto const& m = *s.sim;
        if (!(m.dt > 0) || !std::isfinite(m.dt))
            throw ConfigError("sim.dt", "must be > 0");
        if (!(m.t_end >= m.dt) || !std::isfinite(m.t_end))
            throw ConfigError("sim.t_end", "must be >= dt");
        if (m.record_stride < 1)
            throw ConfigError("sim.record_stride", "must be >= 1");
        if (m.n_paths < 2)
            throw ConfigError("sim.n_paths", "must be >= 2");
        for (std::size_t i = 0; i < m.snapshot_times.size(); ++i)
        {
            double t = m.snapshot_times[i];
            if (!(t >= 0) || t > m.t_end)
            {
                throw ConfigError("sim.snapshot_times["
                                      + std::to_string(i) + "]",
                                  "must lie in [0, t_end]");
            }
        }
    }
    if (s.env)
    {
        for (std::size_t i = 0; i < 4; ++i)
        {
            auto const& pr = s.env->process[i];
            if (!pr)
                continue;
            std::string path = "env." + std::string(env_target_names[i]);
            if (!(pr->alpha > 0) || !std::isfinite(pr->alpha))
                throw ConfigError(path + ".alpha", "must be > 0");
            if (!(pr->sigma >= 0) || !std::isfinite(pr->sigma))
                throw ConfigError(path + ".sigma", "must be >= 0");
            if (!(pr->C_s > 0) || !std::isfinite(pr->C_s))
                throw ConfigError(path + ".C_s", "must be > 0");
            if (!(pr->C_0 > 0) || !std::isfinite(pr->C_0))
                throw ConfigError(path + ".C_0", "must be > 0");
        }
    }
    if (s.ode)
    {
        if (!(s.ode->t_end > 0))
            throw ConfigError("ode.t_end", "must be > 0");
        if (!(s.ode->control.rel_tol > 0))
            throw ConfigError("ode.rel_tol", "must be > 0");
        if (!(s.ode->control.abs_tol > 0))
            throw ConfigError("ode.abs_tol", "must be > 0");
        if (!(s.ode->control.max_step > 0))
            throw ConfigError("ode.max_step", "must be > 0");
        auto const& w = s.ode->slope_window;
        if (!(w[0] >= 0) || !(w[1] > w[0]) || w[1] > s.ode->t_end)
            throw ConfigError("ode.slope_window", "need 0 <= t0 < t1 <= t_end");
    }
    if (s.scan)
    {
        auto b = sweep_bounds(s.scan->param);
        if (!b)
            throw ConfigError("scan.param", "must be delta, b, gamma or eta");
        if (!(s.scan->lo < s.scan->hi) || s.scan->lo < b->lo
            || s.scan->hi > b->hi)
        {
            throw ConfigError("scan.lo", "range must lie inside the sweep"
                                         " bounds with lo < hi");
        }
        if (s.scan->points < 200)
            throw ConfigError("scan.points", "must be >= 200");
        if (s.scan->eq_grid_points < 100)
            throw ConfigError("scan.eq_grid_points", "must be >= 100");
    }
    if (s.scan2d)
    {
        auto const& q = *s.scan2d;
        if (q.second_param != "b" && q.second_param != "gamma"
            && q.second_param != "eta")
        {
            throw ConfigError("scan2d.second_param", "must be b, gamma or eta");
        }
        auto b = sweep_bounds(q.second_param);
        if (!(q.lo < q.hi) || q.lo < b->lo || q.hi > b->hi)
            throw ConfigError("scan2d.lo", "range outside the sweep bounds");
        if (q.slices < 1)
            throw ConfigError("scan2d.slices", "must be >= 1");
        if (q.delta_points < 200)
            throw ConfigError("scan2d.delta_points", "must be >= 200");
    }
    if (s.contour)
    {
        auto const& c = *s.contour;
        if (!(c.b_lo > 0) || !(c.b_lo <= c.b_hi) || c.b_points < 1)
            throw ConfigError("contour.b_lo", "need 0 < b_lo <= b_hi");
        if (!(c.gamma_lo > 0) || !(c.gamma_lo <= c.gamma_hi)
            || c.gamma_points < 1)
        {
            throw ConfigError("contour.gamma_lo",
                              "need 0 < gamma_lo <= gamma_hi");
        }
    }
    if (s.rankdiff && s.sim)
    {
        for (double t : {s.rankdiff->t1, s.rankdiff->t2})
        {
            if (!(t >= 0) || t > s.sim->t_end)
                throw ConfigError("rankdiff", "times must lie in [0, t_end]");
        }
    }
    auto const allowed = available_outputs(s.mode);
    for (std::size_t i = 0; i < s.outputs.size(); ++i)
    {
        if (std::find(allowed.begin(), allowed.end(), s.outputs[i])
            == allowed.end())
        {
            throw ConfigError("outputs[" + std::to_string(i) + "]",
                              "unknown table '" + s.outputs[i]
                                  + "' for this mode");
        }
    }
}

//---------------------------------------------------------------------------//
// JSON
//---------------------------------------------------------------------------//
namespace detail
{
using Json = nlohmann::json;

class Reader
{
  public:
    Reader(Json const& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_.empty() ? "<root>" : path_,
                              "must be an object");
    }

    void allow(std::initializer_list<std::string_view> keys) const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
        {
            if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
                throw ConfigError(sub(it.key()), "unknown key");
        }
    }

    bool has(std::string const& key) const { return j_.contains(key); }
    Json const& raw(std::string const& key) const { return j_.at(key); }
    std::string sub(std::string const& key) const
    {
        return path_.empty() ? key : path_ + "." + key;
    }

    double number(std::string const& key, double fallback) const
    {
        if (!has(key))
            return fallback;
        return as_number(j_.at(key), sub(key));
    }
    double number(std::string const& key) const
    {
        if (!has(key))
            throw ConfigError(sub(key), "missing required field");
        return as_number(j_.at(key), sub(key));
    }
    std::uint64_t count(std::string const& key, std::uint64_t fallback) const
    {
        if (!has(key))
            return fallback;
        auto const& v = j_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned()))
            throw ConfigError(sub(key), "must be a non-negative integer");
        return v.get<std::uint64_t>();
    }
    std::string text(std::string const& key,
                     std::optional<std::string> fallback = {}) const
    {
        if (!has(key))
        {
            if (!fallback)
                throw ConfigError(sub(key), "missing required field");
            return *fallback;
        }
        if (!j_.at(key).is_string())
            throw ConfigError(sub(key), "must be a string");
        return j_.at(key).get<std::string>();
    }
    bool flag(std::string const& key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        if (!j_.at(key).is_boolean())
            throw ConfigError(sub(key), "must be a boolean");
        return j_.at(key).get<bool>();
    }

    static double as_number(Json const& v, std::string const& path)
    {
        if (!v.is_number())
            throw ConfigError(path, "must be a number");
        return v.get<double>();
    }

  private:
    Json const& j_;
    std::string path_;
};

inline ParamOverrides read_overrides(Json const& j, std::string const& path)
{
    if (!j.is_object())
        throw ConfigError(path, "must be an object");
    ParamOverrides out;
    for (auto it = j.begin(); it != j.end(); ++it)
    {
        std::string key = path + "." + it.key();
        if (!ModelParams::is_name(it.key()))
            throw ConfigError(key, "unknown model parameter");
        out[it.key()] = Reader::as_number(it.value(), key);
    }
    return out;
}

inline StateVec read_state(Json const& j, std::string const& path)
{
    Reader r(j, path);
    r.allow({"M_u", "M_i", "B", "T"});
    StateVec s;
    for (std::size_t i = 0; i < 4; ++i)
        s[i] = r.number(std::string(state_names[i]));
    return s;
}

inline Json write_state(StateVec const& s)
{
    Json j = Json::object();
    for (std::size_t i = 0; i < 4; ++i)
        j[std::string(state_names[i])] = s[i];
    return j;
}

inline Json write_overrides(ParamOverrides const& p)
{
    Json j = Json::object();
    for (auto const& [k, v] : p)
        j[k] = v;
    return j;
}
}  // namespace detail

/*!
 * Parse and validate a schema-1 scenario document.
 *
 * Unspecified parameters keep their baseline values; unknown keys are errors.
 */
inline Scenario parse_config(std::string_view text)
{
    using detail::Json;
    using detail::Reader;
    Json root;
    try
    {
        root = Json::parse(text.begin(), text.end());
    }
    catch (Json::parse_error const& e)
    {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    Reader r(root, "");
    r.allow({"schema", "name", "mode", "params", "range_check", "init", "sim",
             "env", "ode", "runs", "scan", "scan2d", "contour", "rankdiff",
             "outputs"});

    if (!r.has("schema") || !root.at("schema").is_number_integer()
        || root.at("schema").get<int>() != 1)
    {
        throw ConfigError("schema", "must be 1");
    }

    Scenario s;
    s.name = r.text("name", std::string("scenario"));
    std::string mode = r.text("mode");
    bool found = false;
    for (auto [k, v] : mode_names)
    {
        if (v == mode)
        {
            s.mode = k;
            found = true;
        }
    }
    if (!found)
        throw ConfigError("mode", "unknown mode '" + mode + "'");

    s.range_check = r.flag("range_check", true);
    if (r.has("params"))
        s.params = detail::read_overrides(root.at("params"), "params");
    if (r.has("init"))
        s.init = detail::read_state(root.at("init"), "init");

    if (r.has("sim"))
    {
        Reader q(root.at("sim"), "sim");
        q.allow({"dt", "t_end", "record_stride", "seed", "n_paths",
                 "sample_paths", "snapshot_times"});
        SimSpec m;
        m.dt = q.number("dt", m.dt);
        m.t_end = q.number("t_end", m.t_end);
        m.record_stride = q.count("record_stride", m.record_stride);
        m.seed = q.count("seed", m.seed);
        m.n_paths = q.count("n_paths", m.n_paths);
        m.sample_paths = q.count("sample_paths", m.sample_paths);
        if (q.has("snapshot_times"))
        {
            auto const& arr = root.at("sim").at("snapshot_times");
            if (!arr.is_array())
                throw ConfigError("sim.snapshot_times", "must be an array");
            for (std::size_t i = 0; i < arr.size(); ++i)
            {
                m.snapshot_times.push_back(Reader::as_number(
                    arr[i], "sim.snapshot_times[" + std::to_string(i) + "]"));
            }
        }
        s.sim = m;
    }

    if (r.has("env"))
    {
        Reader q(root.at("env"), "env");
        q.allow({"delta", "b", "gamma", "eta"});
        EnvProcessParams env;
        for (std::size_t i = 0; i < 4; ++i)
        {
            std::string key(env_target_names[i]);
            if (!q.has(key))
                continue;
            Reader e(root.at("env").at(key), "env." + key);
            e.allow({"alpha", "sigma", "C_s", "C_0"});
            OuProcess pr;
            pr.alpha = e.number("alpha");
            pr.sigma = e.number("sigma");
            pr.C_s = e.number("C_s");
            pr.C_0 = e.number("C_0", pr.C_s);
            env.process[i] = pr;
        }
        s.env = env;
    }

    if (r.has("ode"))
    {
        Reader q(root.at("ode"), "ode");
        q.allow({"t_end", "rel_tol", "abs_tol", "max_step", "slope_window"});
        OdeSpec o;
        o.t_end = q.number("t_end", o.t_end);
        o.control.rel_tol = q.number("rel_tol", o.control.rel_tol);
        o.control.abs_tol = q.number("abs_tol", o.control.abs_tol);
        o.control.max_step = q.number("max_step", o.control.max_step);
        if (q.has("slope_window"))
        {
            auto const& w = root.at("ode").at("slope_window");
            if (!w.is_array() || w.size() != 2)
                throw ConfigError("ode.slope_window", "must be [t0, t1]");
            o.slope_window = {Reader::as_number(w[0], "ode.slope_window[0]"),
                              Reader::as_number(w[1], "ode.slope_window[1]")};
        }
        s.ode = o;
    }

    if (r.has("runs"))
    {
        auto const& arr = root.at("runs");
        if (!arr.is_array())
            throw ConfigError("runs", "must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            std::string path = "runs[" + std::to_string(i) + "]";
            Reader q(arr[i], path);
            q.allow({"label", "init", "params"});
            OdeRun run;
            run.label = q.text("label", "run" + std::to_string(i));
            if (!q.has("init"))
                throw ConfigError(path + ".init", "missing required field");
            run.init = detail::read_state(arr[i].at("init"), path + ".init");
            if (q.has("params"))
                run.params = detail::read_overrides(arr[i].at("params"),
                                                    path + ".params");
            s.runs.push_back(std::move(run));
        }
    }

    if (r.has("scan"))
    {
        Reader q(root.at("scan"), "scan");
        q.allow({"param", "lo", "hi", "points", "eq_grid_points"});
        ScanSpec c;
        c.param = q.text("param");
        c.lo = q.number("lo");
        c.hi = q.number("hi");
        c.points = q.count("points", c.points);
        c.eq_grid_points = q.count("eq_grid_points", c.eq_grid_points);
        s.scan = c;
    }
    if (r.has("scan2d"))
    {
        Reader q(root.at("scan2d"), "scan2d");
        q.allow({"second_param", "lo", "hi", "slices", "delta_points"});
        Scan2dSpec c;
        c.second_param = q.text("second_param");
        c.lo = q.number("lo");
        c.hi = q.number("hi");
        c.slices = q.count("slices", c.slices);
        c.delta_points = q.count("delta_points", c.delta_points);
        s.scan2d = c;
    }
    if (r.has("contour"))
    {
        Reader q(root.at("contour"), "contour");
        q.allow({"b_lo", "b_hi", "b_points", "gamma_lo", "gamma_hi",
                 "gamma_points"});
        ContourSpec c;
        c.b_lo = q.number("b_lo", c.b_lo);
        c.b_hi = q.number("b_hi", c.b_hi);
        c.b_points = q.count("b_points", c.b_points);
        c.gamma_lo = q.number("gamma_lo", c.gamma_lo);
        c.gamma_hi = q.number("gamma_hi", c.gamma_hi);
        c.gamma_points = q.count("gamma_points", c.gamma_points);
        s.contour = c;
    }
    if (r.has("rankdiff"))
    {
        Reader q(root.at("rankdiff"), "rankdiff");
        q.allow({"t1", "t2"});
        s.rankdiff = RankDiffSpec{q.number("t1"), q.number("t2")};
    }
    if (r.has("outputs"))
    {
        auto const& arr = root.at("outputs");
        if (!arr.is_array())
            throw ConfigError("outputs", "must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            if (!arr[i].is_string())
            {
                throw ConfigError("outputs[" + std::to_string(i) + "]",
                                  "must be a string");
            }
            s.outputs.push_back(arr[i].get<std::string>());
        }
    }

    validate(s);
    return s;
}

//! Canonical schema-1 document; parse_config(serialize(s)) == s.
inline std::string serialize(Scenario const& s)
{
    using detail::Json;
    Json j = Json::object();
    j["schema"] = 1;
    j["name"] = s.name;
    j["mode"] = std::string(to_string(s.mode));
    j["range_check"] = s.range_check;
    j["params"] = detail::write_overrides(s.params);
    j["init"] = detail::write_state(s.init);
    if (s.sim)
    {
        auto const& m = *s.sim;
        j["sim"] = {{"dt", m.dt},
                    {"t_end", m.t_end},
                    {"record_stride", m.record_stride},
                    {"seed", m.seed},
                    {"n_paths", m.n_paths},
                    {"sample_paths", m.sample_paths},
                    {"snapshot_times", m.snapshot_times}};
    }
    if (s.env)
    {
        Json e = Json::object();
        for (std::size_t i = 0; i < 4; ++i)
        {
            if (auto const& pr = s.env->process[i])
            {
                e[std::string(env_target_names[i])] = {{"alpha", pr->alpha},
                                                       {"sigma", pr->sigma},
                                                       {"C_s", pr->C_s},
                                                       {"C_0", pr->C_0}};
            }
        }
        j["env"] = e;
    }
    if (s.ode)
    {
        j["ode"] = {{"t_end", s.ode->t_end},
                    {"rel_tol", s.ode->control.rel_tol},
                    {"abs_tol", s.ode->control.abs_tol},
                    {"max_step", s.ode->control.max_step},
                    {"slope_window", s.ode->slope_window}};
    }
    if (!s.runs.empty())
    {
        Json arr = Json::array();
        for (auto const& r : s.runs)
        {
            arr.push_back({{"label", r.label},
                           {"init", detail::write_state(r.init)},
                           {"params", detail::write_overrides(r.params)}});
        }
        j["runs"] = arr;
    }
    if (s.scan)
    {
        j["scan"] = {{"param", s.scan->param},
                     {"lo", s.scan->lo},
                     {"hi", s.scan->hi},
                     {"points", s.scan->points},
                     {"eq_grid_points", s.scan->eq_grid_points}};
    }
    if (s.scan2d)
    {
        j["scan2d"] = {{"second_param", s.scan2d->second_param},
                       {"lo", s.scan2d->lo},
                       {"hi", s.scan2d->hi},
                       {"slices", s.scan2d->slices},
                       {"delta_points", s.scan2d->delta_points}};
    }
    if (s.contour)
    {
        auto const& c = *s.contour;
        j["contour"] = {{"b_lo", c.b_lo},
                        {"b_hi", c.b_hi},
                        {"b_points", c.b_points},
                        {"gamma_lo", c.gamma_lo},
                        {"gamma_hi", c.gamma_hi},
                        {"gamma_points", c.gamma_points}};
    }
    if (s.rankdiff)
        j["rankdiff"] = {{"t1", s.rankdiff->t1}, {"t2", s.rankdiff->t2}};
    j["outputs"] = s.outputs;
    return j.dump(2) + "\n";
}

//---------------------------------------------------------------------------//
// PRESETS
//---------------------------------------------------------------------------//
namespace detail
{
inline constexpr double calibrated_eta = 1.25e-9;
inline constexpr std::uint64_t preset_seed = 20240917;

inline Scenario sde_preset(std::string name,
                           StateVec init,
                           double delta,
                           double t_end,
                           std::vector<double> snapshots = {})
{
    Scenario s;
    s.name = std::move(name);
    s.mode = Mode::sde_demographic;
    s.params = {{"delta", delta}, {"eta", calibrated_eta}};
    s.init = init;
    SimSpec m;
    m.t_end = t_end;
    m.seed = preset_seed;
    m.n_paths = 10000;
    m.sample_paths = 4;
    m.snapshot_times = std::move(snapshots);
    s.sim = m;
    s.ode = OdeSpec{t_end, {}, {0.0, std::min(40.0, t_end)}};
    return s;
}

inline Scenario ode_preset(std::string name, double t_end)
{
    Scenario s;
    s.name = std::move(name);
    s.mode = Mode::ode;
    s.params = {{"eta", calibrated_eta}};
    s.ode = OdeSpec{t_end, {}, {10.0, 40.0}};
    return s;
}

inline double calibrated_delta0()
{
    return delta_threshold(ModelParams::calibrated());
}

struct Fig7Panel
{
    char const* row;  // therapy-targeted host parameter
    char const* region;
    ParamOverrides values;
};

inline std::vector<Fig7Panel> fig7_panels()
{
    return {
        {"b", "region2", {{"delta", 0.2}, {"b", 0.1}}},
        {"b", "region3", {{"delta", 0.2}, {"b", 0.17}}},
        {"gamma", "region2", {{"delta", 0.2}, {"gamma", 1.5}}},
        {"gamma", "region3", {{"delta", 0.2}, {"gamma", 1.05}}},
        {"eta", "region2", {{"eta", 0.5e-7}, {"delta", 0.1}}},
        {"eta", "region3", {{"eta", 0.5e-7}, {"delta", 0.285}}},
    };
}
}  // namespace detail

inline std::vector<std::string> preset_names()
{
    std::vector<std::string> names{"fig1a", "fig1bc", "fig2",  "fig3",
                                   "fig4",  "fig5",   "fig-order",
                                   "fig6a", "fig6b",  "fig6c"};
    for (auto const& p : detail::fig7_panels())
    {
        for (char const* speed : {"fast", "slow"})
        {
            names.push_back(std::string("fig7-") + p.row + "-" + p.region
                            + "-" + speed);
        }
    }
    for (char const* n : {"fig8a", "fig8b", "fig-eta-a", "fig-eta-b",
                          "fig-lam1-a", "fig-lam1-b"})
    {
        names.emplace_back(n);
    }
    return names;
}

//! Scenario reproducing one figure; unknown names list the valid ones.
inline Scenario preset(std::string const& name)
{
    using namespace detail;
    if (name == "fig1a")
    {
        Scenario s;
        s.name = name;
        s.mode = Mode::scan1d;
        s.params = {{"eta", calibrated_eta}};
        s.scan = ScanSpec{"delta", 0.0, 0.35, 200, 2000};
        return s;
    }
    if (name == "fig1bc")
    {
        Scenario s = ode_preset(name, 2000.0);
        s.runs = {
            {"region1-clearance", {1e6, 1, 15, 40}, {{"delta", 0.05}}},
            {"region2-clearance", {1e6, 1, 1, 40}, {{"delta", 0.2}}},
            {"region2-active", {3e6, 2e3, 2.5e4, 3.7e6}, {{"delta", 0.2}}},
            {"region3-clearance", {6e5, 1, 8, 90}, {{"delta", 0.27}}},
            {"region3-ltbi", {4.5e6, 270, 4.2e3, 7e6}, {{"delta", 0.27}}},
            {"region3-active", {4.5e6, 270, 4.8e3, 7e6}, {{"delta", 0.27}}},
            {"region4-active", {1e6, 1, 1, 40}, {{"delta", 0.35}}},
        };
        return s;
    }
    if (name == "fig2")
        return sde_preset(name, {4.99e5, 1, 10, 1000}, 0.2, 300.0);
    if (name == "fig3")
        return sde_preset(name, {2e4, 1e3, 1e5, 1e3}, 0.2, 100.0);
    if (name == "fig4")
        return sde_preset(name, {4.99e5, 4, 4, 75}, 0.27, 300.0);
    if (name == "fig5")
        return sde_preset(name, {4.99e5, 4, 4, 75}, 0.35, 1300.0);
    if (name == "fig-order")
    {
        Scenario s = sde_preset(name, {4.99e5, 4, 4, 75}, 0.35, 1400.0,
                                {1246.0, 1327.0});
        s.mode = Mode::rankdiff;
        s.rankdiff = RankDiffSpec{1246.0, 1327.0};
        s.ode.reset();
        return s;
    }
    if (name == "fig6a" || name == "fig6b" || name == "fig6c")
    {
        Scenario s;
        s.name = name;
        s.mode = Mode::scan2d;
        s.params = {{"eta", calibrated_eta}};
        if (name == "fig6a")
            s.scan2d = Scan2dSpec{"b", 0.05, 0.5, 16, 200};
        else if (name == "fig6b")
            s.scan2d = Scan2dSpec{"gamma", 0.1, 2.0, 16, 200};
        else
            s.scan2d = Scan2dSpec{"eta", 1.25e-9, 1.25e-7, 16, 200};
        return s;
    }
    if (name.rfind("fig7-", 0) == 0)
    {
        for (auto const& p : fig7_panels())
        {
            for (char const* speed : {"fast", "slow"})
            {
                if (name
                    != std::string("fig7-") + p.row + "-" + p.region + "-"
                           + speed)
                {
                    continue;
                }
                Scenario s;
                s.name = name;
                s.mode = Mode::sde_environmental;
                s.params = {{"eta", calibrated_eta}};
                for (auto const& [k, v] : p.values)
                    s.params[k] = v;
                s.init = {4.99e5, 1, 10, 1000};
                SimSpec m;
                m.t_end = 500.0;
                m.seed = preset_seed;
                m.n_paths = 200;
                m.sample_paths = 4;
                s.sim = m;
                double const alpha = std::string(speed) == "fast" ? 0.5 : 0.05;
                ModelParams const mp = s.model_params();
                EnvProcessParams env;
                auto const live = live_from(mp);
                for (std::size_t i = 0; i < 4; ++i)
                {
                    env.process[i] = OuProcess{alpha, std::sqrt(alpha / 2),
                                               live[i], live[i]};
                }
                s.env = env;
                s.ode = OdeSpec{m.t_end, {}, {0.0, 40.0}};
                return s;
            }
        }
    }
    if (name == "fig8a" || name == "fig8b")
    {
        Scenario s = ode_preset(name, 100.0);
        double const d0 = calibrated_delta0();
        std::vector<double> deltas = name == "fig8a"
                                         ? std::vector<double>{0.25, 0.28, d0}
                                         : std::vector<double>{d0, 0.31, 0.34};
        for (double d : deltas)
        {
            char label[32];
            std::snprintf(label, sizeof label, "delta=%.4f", d);
            s.runs.push_back({label, {5e5, 1, 10, 1000}, {{"delta", d}}});
        }
        return s;
    }
    if (name == "fig-eta-a" || name == "fig-eta-b")
    {
        Scenario s = ode_preset(name, 100.0);
        s.params.erase("eta");
        if (name == "fig-eta-a")
        {
            s.runs = {{"eta-boosted", {5e5, 1, 10, 1000},
                       {{"delta", 0.25}, {"eta", 1.25e-7}}},
                      {"eta-baseline", {5e5, 1, 10, 1000},
                       {{"delta", 0.25}, {"eta", 1.25e-9}}}};
        }
        else
        {
            s.runs = {{"vitamin-d", {5e5, 1, 10, 1000},
                       {{"delta", 0.25}, {"eta", 1.25e-7}}},
                      {"vitamin-d-antibiotic", {5e5, 1, 10, 1000},
                       {{"delta", 0.1}, {"eta", 1.25e-7}}}};
        }
        return s;
    }
    if (name == "fig-lam1-a" || name == "fig-lam1-b")
    {
        Scenario s;
        s.name = name;
        s.mode = Mode::contour;
        s.params = {{"eta", calibrated_eta}};
        if (name == "fig-lam1-a")
            s.params["N2"] = 30;
        else
            s.params.insert({{"N1", 10}, {"N2", 20}, {"N3", 25}});
        s.contour = ContourSpec{};
        return s;
    }

    std::string list;
    for (auto const& n : preset_names())
        list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("preset", "unknown preset '" + name
                                    + "'; available: " + list);
}

//---------------------------------------------------------------------------//
// TABLES AND CSV
//---------------------------------------------------------------------------//
struct Table
{
    std::string name;  //!< file stem
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

//! Shortest text that reads back to the same double (17 digits).
inline std::string csv_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(std::string const& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

//! RFC 4180 text: CRLF record separators, quoted fields where needed.
inline std::string to_csv(Table const& t)
{
    std::string out;
    auto line = [&](std::vector<std::string> const& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
        {
            if (i)
                out += ',';
            out += csv_field(cells[i]);
        }
        out += "\r\n";
    };
    line(t.header);
    for (auto const& r : t.rows)
        line(r);
    return out;
}

namespace detail
{
inline std::vector<std::string> state_cells(StateVec const& s)
{
    return {csv_number(s.uninfected), csv_number(s.infected),
            csv_number(s.bacteria), csv_number(s.tcells)};
}

template<class... Ts>
std::vector<std::string> row(Ts const&... cells)
{
    std::vector<std::string> r;
    auto add = [&](auto const& c) {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_arithmetic_v<C>)
            r.push_back(csv_number(static_cast<double>(c)));
        else if constexpr (std::is_same_v<C, std::vector<std::string>>)
            r.insert(r.end(), c.begin(), c.end());
        else
            r.push_back(std::string(c));
    };
    (add(cells), ...);
    return r;
}

inline bool wants(Scenario const& s, std::string const& table)
{
    if (s.outputs.empty())
        return true;
    return std::find(s.outputs.begin(), s.outputs.end(), table)
           != s.outputs.end();
}

inline std::vector<std::string> with_prefix(char const* prefix)
{
    std::vector<std::string> h;
    for (auto n : state_names)
        h.push_back(prefix + std::string(n));
    return h;
}

inline void ode_tables(Scenario const& s,
                       ModelParams const& base,
                       std::vector<Table>& out)
{
    std::vector<OdeRun> runs = s.runs;
    if (runs.empty())
        runs.push_back({"run0", s.init, {}});

    Table traj{"trajectories", {"run", "t", "M_u", "M_i", "B", "T"}, {}};
    Table outc{"outcomes", {"run", "delta", "label", "M_u", "M_i", "B", "T"},
               {}};
    Table slopes{"slopes",
                 {"run", "delta", "t0", "t1", "log_slope_B", "lambda1"},
                 {}};
    for (auto const& run : runs)
    {
        ModelParams p = base;
        for (auto const& [k, v] : run.params)
            p.at(k) = v;
        auto tr = integrate(run.init, p, s.ode->t_end, s.ode->control);
        for (std::size_t i = 0; i < tr.size(); ++i)
            traj.rows.push_back(row(run.label, tr.times[i],
                                    state_cells(tr.states[i])));
        OutcomeLabel lab;
        lab.terminal_state = tr.back();
        if (s.ode->t_end >= OutcomeThresholds{}.settle_window)
            lab = classify_outcome(tr);
        outc.rows.push_back(row(run.label, p.delta,
                                std::string(to_string(lab.label)),
                                state_cells(lab.terminal_state)));
        auto [t0, t1] = s.ode->slope_window;
        double slope = NAN;
        if (tr.at(t0).bacteria > 0 && tr.at(t1).bacteria > 0)
            slope = log_slope(tr, 2, t0, t1);
        slopes.rows.push_back(row(run.label, p.delta, t0, t1, slope,
                                  eigen_closed_form(p)[0].real()));
    }
    for (auto* t : {&traj, &outc, &slopes})
    {
        if (wants(s, t->name))
            out.push_back(std::move(*t));
    }
}

inline void ensemble_tables(Scenario const& s,
                            ModelParams const& p,
                            unsigned threads,
                            std::vector<Table>& out)
{
    SimSpec const& m = *s.sim;
    SimConfig cfg;
    cfg.dt = m.dt;
    cfg.t_end = m.t_end;
    cfg.record_stride = m.record_stride;
    cfg.seed = m.seed;
    cfg.snapshot_times = m.snapshot_times;
    if (s.mode == Mode::sde_environmental)
    {
        cfg.model = NoiseModel::environmental;
        cfg.env = s.env;
    }
    if (s.rankdiff)
    {
        for (double t : {s.rankdiff->t1, s.rankdiff->t2})
            cfg.snapshot_times.push_back(t);
    }
    EnsembleOptions opt;
    opt.threads = threads;
    opt.keep_paths = m.sample_paths;
    auto sum = run_ensemble(s.init, p, cfg, m.n_paths, opt);

    if (wants(s, "timeseries"))
    {
        Table t{"timeseries", {"t"}, {}};
        auto mh = with_prefix("mean_"), sh = with_prefix("std_");
        t.header.insert(t.header.end(), mh.begin(), mh.end());
        t.header.insert(t.header.end(), sh.begin(), sh.end());
        for (std::size_t k = 0; k < sum.times.size(); ++k)
        {
            auto r = row(sum.times[k]);
            for (int v = 0; v < 4; ++v)
                r.push_back(csv_number(sum.mean_ts[k][v]));
            for (int v = 0; v < 4; ++v)
                r.push_back(csv_number(sum.std_ts[k][v]));
            t.rows.push_back(std::move(r));
        }
        out.push_back(std::move(t));
    }
    if (s.mode != Mode::rankdiff && wants(s, "histograms"))
    {
        for (std::size_t v = 0; v < 4; ++v)
        {
            auto h = histogram(sum.end_column(v), 100,
                               std::string(state_names[v]));
            Table t{"histogram_" + std::string(state_names[v]),
                    {"bin_lo", "bin_hi", "count"},
                    {}};
            for (std::size_t i = 0; i < h.counts.size(); ++i)
            {
                t.rows.push_back(row(h.bin_edges[i], h.bin_edges[i + 1],
                                     static_cast<double>(h.counts[i])));
            }
            out.push_back(std::move(t));
        }
    }
    if (wants(s, "summary"))
    {
        Table t{"summary", {"time", "variable", "mean", "std", "median", "n"},
                {}};
        auto add = [&](double time, std::vector<StateVec> const& samples) {
            for (std::size_t v = 0; v < 4; ++v)
            {
                std::vector<double> col;
                for (auto const& x : samples)
                    col.push_back(x[v]);
                auto st = summary_stats(col);
                t.rows.push_back(row(time, std::string(state_names[v]),
                                     st.mean, st.std, st.median,
                                     static_cast<double>(col.size())));
            }
        };
        for (std::size_t k = 0; k < cfg.snapshot_times.size(); ++k)
            add(cfg.snapshot_times[k], sum.snapshot_samples[k]);
        add(m.t_end, sum.end_samples);
        t.rows.push_back(row(m.t_end, "n_absorbed", NAN, NAN, NAN,
                             static_cast<double>(sum.n_absorbed)));
        t.rows.push_back(row(m.t_end, "n_bacteria_zero", NAN, NAN, NAN,
                             static_cast<double>(sum.n_bacteria_zero)));
        t.rows.push_back(row(m.t_end, "n_failed", NAN, NAN, NAN,
                             static_cast<double>(sum.n_failed)));
        out.push_back(std::move(t));
    }
    if (s.mode != Mode::rankdiff && wants(s, "end_samples"))
    {
        Table t{"end_samples", {"path", "M_u", "M_i", "B", "T"}, {}};
        for (std::size_t i = 0; i < sum.end_samples.size(); ++i)
        {
            t.rows.push_back(row(static_cast<double>(sum.path_index[i]),
                                 state_cells(sum.end_samples[i])));
        }
        out.push_back(std::move(t));
    }
    if (s.mode != Mode::rankdiff && wants(s, "paths"))
    {
        bool const env = s.mode == Mode::sde_environmental;
        for (std::size_t i = 0; i < sum.sample_paths.size(); ++i)
        {
            Table t{"path_" + std::to_string(i),
                    {"t", "M_u", "M_i", "B", "T"},
                    {}};
            if (env)
            {
                for (auto n : env_target_names)
                    t.header.emplace_back(n);
            }
            auto const& path = sum.sample_paths[i];
            for (std::size_t k = 0; k < path.times.size(); ++k)
            {
                auto r = row(path.times[k], state_cells(path.states[k]));
                if (env)
                {
                    for (double v : path.env_values[k])
                        r.push_back(csv_number(v));
                }
                t.rows.push_back(std::move(r));
            }
            out.push_back(std::move(t));
        }
    }
    if (s.mode != Mode::rankdiff && wants(s, "ode_reference"))
    {
        Table t{"ode_reference", {"t", "M_u", "M_i", "B", "T"}, {}};
        auto tr = integrate(s.init, p, m.t_end);
        for (std::size_t i = 0; i < tr.size(); ++i)
            t.rows.push_back(row(tr.times[i], state_cells(tr.states[i])));
        out.push_back(std::move(t));
    }
    if (s.mode == Mode::rankdiff && wants(s, "rankdiff"))
    {
        std::size_t const k1 = cfg.snapshot_times.size() - 2;
        std::vector<double> a, b;
        for (auto const& x : sum.snapshot_samples[k1])
            a.push_back(x.bacteria);
        for (auto const& x : sum.snapshot_samples[k1 + 1])
            b.push_back(x.bacteria);
        Table t{"rankdiff", {"rank", "B_t1", "B_t2", "diff"}, {}};
        for (auto const& rr : rank_diff(a, b))
        {
            t.rows.push_back(row(static_cast<double>(rr.rank), rr.value_t1,
                                 rr.value_t2, rr.diff));
        }
        out.push_back(std::move(t));
    }
}

inline std::vector<std::string> record_cells(EquilibriumRecord const& e)
{
    auto r = row(std::string(to_string(e.branch)), state_cells(e.state),
                 std::string(to_string(e.stability)));
    for (auto z : e.eigenvalues)
    {
        r.push_back(csv_number(z.real()));
        r.push_back(csv_number(z.imag()));
    }
    return r;
}

inline std::vector<std::string> record_header()
{
    std::vector<std::string> h{"branch_tag", "M_u", "M_i", "B", "T",
                               "stability"};
    for (int i = 1; i <= 4; ++i)
    {
        h.push_back("lambda" + std::to_string(i) + "_re");
        h.push_back("lambda" + std::to_string(i) + "_im");
    }
    return h;
}
}  // namespace detail

/*!
 * Evaluate a validated scenario into its output tables.
 *
 * `threads` = 0 uses every hardware thread.
 */
inline std::vector<Table> compute_tables(Scenario const& s,
                                         unsigned threads = 0)
{
    using namespace detail;
    validate(s);
    ModelParams const p = s.model_params();
    std::vector<Table> out;
    switch (s.mode)
    {
        case Mode::ode: ode_tables(s, p, out); break;
        case Mode::sde_demographic:
        case Mode::sde_environmental:
        case Mode::rankdiff: ensemble_tables(s, p, threads, out); break;
        case Mode::equilibria:
        {
            Table t{"equilibria", record_header(), {}};
            for (auto const& e : all_equilibria(p))
                t.rows.push_back(record_cells(e));
            out.push_back(std::move(t));
            break;
        }
        case Mode::scan1d:
        {
            ScanOptions opt;
            opt.threads = threads;
            opt.eq_grid_points = s.scan->eq_grid_points;
            auto d = branch_scan(p, s.scan->param, s.scan->lo, s.scan->hi,
                                 s.scan->points, opt);
            if (wants(s, "branch"))
            {
                Table t{"branch",
                        {s.scan->param, "branch_tag", "M_u", "M_i", "B", "T",
                         "stability"},
                        {}};
                for (std::size_t i = 0; i < d.parameter_values.size(); ++i)
                {
                    for (auto const& e : d.equilibria_per_value[i])
                    {
                        t.rows.push_back(
                            row(d.parameter_values[i],
                                std::string(to_string(e.branch)),
                                state_cells(e.state),
                                std::string(to_string(e.stability))));
                    }
                }
                out.push_back(std::move(t));
            }
            if (wants(s, "bifpoints"))
            {
                Table t{"bifpoints",
                        {"kind", s.scan->param, "M_u", "M_i", "B", "T"},
                        {}};
                for (auto const& f : detect_folds(d))
                {
                    t.rows.push_back(row("LP", f.parameter_value,
                                         state_cells(f.state)));
                }
                if (s.scan->param == "delta")
                {
                    auto bp = detect_branch_point(p);
                    t.rows.push_back(row("BP", bp.parameter_value,
                                         state_cells(bp.state)));
                }
                out.push_back(std::move(t));
            }
            break;
        }
        case Mode::scan2d:
        {
            RegionOptions opt;
            opt.grid_points = s.scan2d->delta_points;
            opt.scan.threads = threads;
            auto b = boundary_trace_2d(p, s.scan2d->second_param,
                                       s.scan2d->lo, s.scan2d->hi,
                                       s.scan2d->slices, opt);
            auto const& second = s.scan2d->second_param;
            if (wants(s, "boundaries"))
            {
                Table t{"boundaries",
                        {"curve", "kind", "point", "delta", second, "gap"},
                        {}};
                auto emit = [&](Polyline const& pl, std::size_t id,
                                char const* kind) {
                    for (std::size_t i = 0; i < pl.points.size(); ++i)
                    {
                        t.rows.push_back(row(static_cast<double>(id), kind,
                                             static_cast<double>(i),
                                             pl.points[i][0], pl.points[i][1],
                                             pl.has_gap ? 1.0 : 0.0));
                    }
                };
                for (std::size_t i = 0; i < b.lp_curves.size(); ++i)
                    emit(b.lp_curves[i], i, "LP");
                emit(b.bp_curve, b.lp_curves.size(), "BP");
                out.push_back(std::move(t));
            }
            if (wants(s, "slices"))
            {
                Table t{"slices",
                        {second, "delta_h", "delta_l", "delta_m", "delta_bp",
                         "ok", "message"},
                        {}};
                for (auto const& sl : b.slices)
                {
                    auto lp = [&](std::size_t i) {
                        return i < sl.lp_deltas.size() ? sl.lp_deltas[i] : NAN;
                    };
                    t.rows.push_back(row(sl.value, lp(0), lp(1), lp(2),
                                         sl.bp_delta.value_or(NAN),
                                         sl.ok ? 1.0 : 0.0, sl.message));
                }
                out.push_back(std::move(t));
            }
            break;
        }
        case Mode::contour:
        {
            auto const& c = *s.contour;
            auto grid = [](double lo, double hi, std::size_t n) {
                std::vector<double> g(n);
                for (std::size_t i = 0; i < n; ++i)
                {
                    g[i] = n == 1 ? lo
                                  : lo + (hi - lo) * static_cast<double>(i)
                                             / (n - 1);
                }
                return g;
            };
            auto bg = grid(c.b_lo, c.b_hi, c.b_points);
            auto gg = grid(c.gamma_lo, c.gamma_hi, c.gamma_points);
            auto m = lambda1_contour(p, bg, gg);
            Table t{"lambda1", {"b", "gamma", "lambda1"}, {}};
            for (std::size_t i = 0; i < bg.size(); ++i)
            {
                for (std::size_t j = 0; j < gg.size(); ++j)
                    t.rows.push_back(row(bg[i], gg[j], m(i, j)));
            }
            out.push_back(std::move(t));
            break;
        }
    }
    return out;
}

//! Write each table as <dir>/<name>.csv; returns the paths written.
inline std::vector<std::filesystem::path>
write_tables(std::vector<Table> const& tables,
             std::filesystem::path const& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (auto const& t : tables)
    {
        auto path = dir / (t.name + ".csv");
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot open " + path.string());
        os << to_csv(t);
        if (!os)
            throw std::runtime_error("write failed: " + path.string());
        written.push_back(path);
    }
    return written;
}

inline std::vector<std::filesystem::path>
run_scenario(Scenario const& s,
             std::filesystem::path const& dir,
             unsigned threads = 0)
{
    return write_tables(compute_tables(s, threads), dir);
}

}  // namespace tbdyn
