//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace
{
struct Result
{
    int status;
    std::string out;
};

Result run(std::string const& args)
{
    std::string cmd = std::string(TBDYN_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe))
        out.append(buf, n);
    int raw = pclose(pipe);
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

fs::path scratch(std::string const& name)
{
    auto d = fs::temp_directory_path() / ("tbdyn_cli_" + name);
    fs::remove_all(d);
    return d;
}
}  // namespace

TEST(Cli, ListPresets)
{
    auto r = run("list-presets");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("fig7-eta-region3-slow"), std::string::npos);
}

TEST(Cli, PresetWithOverrides)
{
    auto dir = scratch("fig3");
    auto r = run("preset fig3 --paths 4 --dt 0.02 --seed 9 --out "
                 + dir.string());
    ASSERT_EQ(r.status, 0) << r.out;
    for (char const* f : {"timeseries.csv", "histogram_B.csv", "path_0.csv",
                          "ode_reference.csv", "scenario.json"})
    {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    std::ifstream is(dir / "scenario.json");
    std::string json((std::istreambuf_iterator<char>(is)), {});
    EXPECT_NE(json.find("\"n_paths\": 4"), std::string::npos);
    EXPECT_NE(json.find("\"seed\": 9"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, RunAndValidate)
{
    auto dir = scratch("run");
    fs::create_directories(dir);
    auto cfg = dir / "eq.json";
    std::ofstream(cfg) << R"({"schema": 1, "name": "eq", "mode": "equilibria",
                              "params": {"delta": 0.35, "eta": 1.25e-9}})";
    EXPECT_EQ(run("validate " + cfg.string()).status, 0);
    auto r = run("run " + cfg.string() + " --out " + (dir / "out").string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "out" / "equilibria.csv"));
    fs::remove_all(dir);
}

TEST(Cli, OutputDirectoryFromEnvironment)
{
    auto dir = scratch("env");
    std::string cmd = "TBDYN_OUT_DIR=" + dir.string() + " TBDYN_THREADS=1 ";
    std::string full = cmd + TBDYN_CLI_PATH + " preset fig-lam1-b > /dev/null";
    EXPECT_EQ(std::system(full.c_str()), 0);
    EXPECT_TRUE(fs::exists(dir / "fig-lam1-b" / "lambda1.csv"));
    fs::remove_all(dir);
}

TEST(Cli, ConfigErrorsExitTwo)
{
    auto dir = scratch("bad");
    fs::create_directories(dir);
    auto cfg = dir / "bad.json";
    std::ofstream(cfg) << R"({"schema": 1, "mode": "equilibria",
                              "params": {"delta": -1}})";
    auto r = run("validate " + cfg.string());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("\"key\":\"params.delta\""), std::string::npos)
        << r.out;
    EXPECT_EQ(run("preset nope").status, 2);
    EXPECT_EQ(run("preset fig1a --paths 10").status, 2);
    EXPECT_EQ(run("frobnicate").status, 2);
    EXPECT_EQ(run("validate " + (dir / "missing.json").string()).status, 2);
    fs::remove_all(dir);
}

TEST(Cli, NumericFailureExitsThree)
{
    // Tolerances far below double resolution force step-size underflow.
    auto dir = scratch("num");
    fs::create_directories(dir);
    auto cfg = dir / "tight.json";
    std::ofstream(cfg) << R"({"schema": 1, "name": "tight", "mode": "ode",
        "init": {"M_u": 4.99e5, "M_i": 4, "B": 4, "T": 75},
        "ode": {"t_end": 100, "rel_tol": 1e-300, "abs_tol": 1e-300}})";
    auto r = run("run " + cfg.string() + " --out " + (dir / "out").string());
    EXPECT_EQ(r.status, 3) << r.out;
    EXPECT_NE(r.out.find("\"kind\":\"numeric\""), std::string::npos);
    fs::remove_all(dir);
}
