//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tools/tbdyn.cpp
//! Command-line front end: run, preset, list-presets, validate.
//!
//! Exit status: 0 success, 2 configuration error, 3 numeric failure.
//---------------------------------------------------------------------------//
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tbdyn/scenario.hpp"

namespace
{
constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

void report(char const* kind, std::exception const& e, std::string key = {})
{
    nlohmann::json rec = {{"error", {{"kind", kind}, {"message", e.what()}}}};
    if (!key.empty())
        rec["error"]["key"] = key;
    std::cerr << rec.dump() << '\n';
}

std::string read_file(std::string const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw tbdyn::ConfigError("<file>", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

unsigned env_threads()
{
    char const* v = std::getenv("TBDYN_THREADS");
    if (!v || !*v)
        return 0;
    char* end = nullptr;
    unsigned long n = std::strtoul(v, &end, 10);
    if (*end != '\0')
        throw tbdyn::ConfigError("TBDYN_THREADS", "must be an integer");
    return static_cast<unsigned>(n);
}

std::filesystem::path out_dir(std::string const& flag, std::string const& name)
{
    if (!flag.empty())
        return flag;
    if (char const* v = std::getenv("TBDYN_OUT_DIR"); v && *v)
        return std::filesystem::path(v) / name;
    return std::filesystem::path("out") / name;
}

int execute(tbdyn::Scenario const& s, std::string const& out_flag)
{
    auto dir = out_dir(out_flag, s.name);
    auto files = tbdyn::run_scenario(s, dir, env_threads());
    // Keep the exact scenario next to its outputs.
    std::ofstream(dir / "scenario.json", std::ios::binary) << tbdyn::serialize(s);
    for (auto const& f : files)
        std::cout << f.string() << '\n';
    return 0;
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Within-host tuberculosis dynamics: ODE, SDE and bifurcation "
                 "analysis"};
    app.require_subcommand(1);

    std::string config_path, out_flag, preset_name;
    auto* run = app.add_subcommand("run", "Run a scenario document");
    run->add_option("config", config_path, "Scenario JSON file")->required();
    run->add_option("--out", out_flag, "Output directory");

    std::size_t paths = 0;
    double dt = 0;
    std::uint64_t seed = 0;
    auto* pre = app.add_subcommand("preset", "Run a figure preset");
    pre->add_option("name", preset_name, "Preset name")->required();
    auto* paths_opt = pre->add_option("--paths", paths, "Number of sample paths");
    auto* dt_opt = pre->add_option("--dt", dt, "SDE time step (days)");
    auto* seed_opt = pre->add_option("--seed", seed, "Random seed");
    pre->add_option("--out", out_flag, "Output directory");
    bool print_only = false;
    pre->add_flag("--print", print_only, "Print the scenario JSON and exit");

    auto* list = app.add_subcommand("list-presets", "List preset names");
    auto* val = app.add_subcommand("validate", "Validate a scenario document");
    val->add_option("config", config_path, "Scenario JSON file")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try
    {
        if (*list)
        {
            for (auto const& n : tbdyn::preset_names())
                std::cout << n << '\n';
            return 0;
        }
        if (*val)
        {
            auto s = tbdyn::parse_config(read_file(config_path));
            std::cout << "ok: " << s.name << " ("
                      << tbdyn::to_string(s.mode) << ")\n";
            return 0;
        }
        if (*run)
            return execute(tbdyn::parse_config(read_file(config_path)),
                           out_flag);

        auto s = tbdyn::preset(preset_name);
        bool const stochastic = s.sim.has_value();
        if ((*paths_opt || *dt_opt || *seed_opt) && !stochastic)
        {
            throw tbdyn::ConfigError(
                "preset", "--paths/--dt/--seed apply only to SDE presets");
        }
        if (*paths_opt)
            s.sim->n_paths = paths;
        if (*dt_opt)
            s.sim->dt = dt;
        if (*seed_opt)
            s.sim->seed = seed;
        tbdyn::validate(s);
        if (print_only)
        {
            std::cout << tbdyn::serialize(s);
            return 0;
        }
        return execute(s, out_flag);
    }
    catch (tbdyn::ConfigError const& e)
    {
        report("config", e, e.key_path());
        return exit_config;
    }
    catch (tbdyn::DomainError const& e)
    {
        report("domain", e);
        return exit_config;
    }
    catch (tbdyn::NumericError const& e)
    {
        report("numeric", e);
        return exit_numeric;
    }
    catch (std::exception const& e)
    {
        report("runtime", e);
        return exit_numeric;
    }
}
