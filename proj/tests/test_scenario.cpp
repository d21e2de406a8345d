//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "tbdyn/scenario.hpp"

using namespace tbdyn;

namespace
{
std::string key_of(std::string const& doc)
{
    try
    {
        parse_config(doc);
    }
    catch (ConfigError const& e)
    {
        return e.key_path();
    }
    return "<accepted>";
}

Table const& table(std::vector<Table> const& ts, std::string const& name)
{
    for (auto const& t : ts)
    {
        if (t.name == name)
            return t;
    }
    throw std::runtime_error("no table " + name);
}
}  // namespace

TEST(Config, EmptyParamsAreTableValues)
{
    auto s = parse_config(R"({"schema": 1, "mode": "equilibria", "params": {}})");
    EXPECT_EQ(s.model_params(), ModelParams::table1());
    EXPECT_EQ(s.mode, Mode::equilibria);
}

TEST(Config, SingleOverride)
{
    auto s = parse_config(
        R"({"schema": 1, "mode": "equilibria", "params": {"delta": 0.27}})");
    ModelParams expect;
    expect.delta = 0.27;
    EXPECT_EQ(s.model_params(), expect);
}

TEST(Config, ErrorsNameTheKey)
{
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "equilibria",
                        "params": {"delta": -1}})"),
              "params.delta");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "equilibria",
                        "params": {"delta": 0.5}})"),
              "params.delta");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "equilibria",
                        "range_check": false, "params": {"delta": 0.5}})"),
              "<accepted>");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "equilibria",
                        "params": {"zeta": 1}})"),
              "params.zeta");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "equilibria", "colour": 1})"),
              "colour");
    EXPECT_EQ(key_of(R"({"schema": 2, "mode": "equilibria"})"), "schema");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "warp"})"), "mode");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "sde-demographic"})"), "sim");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "sde-environmental",
                        "sim": {}})"),
              "env");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "sde-demographic",
                        "sim": {"dt": "fast"}})"),
              "sim.dt");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "sde-environmental", "sim": {},
                        "env": {"b": {"alpha": 0.5}}})"),
              "env.b.sigma");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "ode", "ode": {},
                        "runs": [{"label": "x"}]})"),
              "runs[0].init");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "ode", "ode": {},
                        "init": {"M_u": 1, "M_i": 1, "B": -1, "T": 1}})"),
              "init.B");
    EXPECT_EQ(key_of(R"({"schema": 1, "mode": "contour", "contour": {},
                        "outputs": ["histograms"]})"),
              "outputs[0]");
    EXPECT_EQ(key_of("{not json"), "<root>");
}

TEST(Presets, RoundTripAll)
{
    for (auto const& name : preset_names())
    {
        Scenario s = preset(name);
        EXPECT_EQ(s.name, name);
        EXPECT_NO_THROW(validate(s)) << name;
        Scenario back = parse_config(serialize(s));
        EXPECT_EQ(back, s) << name;
        EXPECT_EQ(serialize(back), serialize(s)) << name;
    }
}

TEST(Presets, Catalogue)
{
    auto names = preset_names();
    EXPECT_EQ(std::count_if(names.begin(), names.end(),
                            [](auto const& n) { return n.rfind("fig7-", 0) == 0; }),
              12);
    for (char const* n : {"fig1a", "fig1bc", "fig2", "fig3", "fig4", "fig5",
                          "fig-order", "fig6a", "fig6b", "fig6c", "fig8a",
                          "fig8b", "fig-eta-a", "fig-eta-b", "fig-lam1-a",
                          "fig-lam1-b", "fig7-b-region2-fast"})
    {
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
    }
    try
    {
        preset("fig99");
        FAIL();
    }
    catch (ConfigError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("fig-lam1-b"), std::string::npos);
    }
}

TEST(Presets, CaptionValues)
{
    auto f4 = preset("fig4");
    EXPECT_EQ(f4.init, (StateVec{4.99e5, 4, 4, 75}));
    EXPECT_EQ(f4.model_params().delta, 0.27);
    EXPECT_EQ(f4.sim->t_end, 300.0);
    EXPECT_EQ(preset("fig5").sim->t_end, 1300.0);
    auto lam = preset("fig-lam1-b").model_params();
    EXPECT_EQ(lam.N1, 10.0);
    EXPECT_EQ(lam.N2, 20.0);
    EXPECT_EQ(lam.N3, 25.0);
    auto f7 = preset("fig7-b-region2-fast");
    EXPECT_EQ(f7.mode, Mode::sde_environmental);
    EXPECT_EQ(f7.model_params().b, 0.1);
    EXPECT_EQ(f7.model_params().delta, 0.2);
    for (auto const& pr : f7.env->process)
    {
        ASSERT_TRUE(pr.has_value());
        EXPECT_EQ(pr->alpha, 0.5);
        EXPECT_DOUBLE_EQ(pr->sigma, std::sqrt(0.25));
    }
    EXPECT_EQ(preset("fig7-gamma-region3-slow").env->process[0]->alpha, 0.05);
    EXPECT_EQ(preset("fig1bc").runs.size(), 7u);
    for (auto const& n : preset_names())
    {
        auto s = preset(n);
        if (s.sim)
            EXPECT_EQ(s.sim->seed, preset("fig2").sim->seed);
    }
}

TEST(Csv, NumberFormatRoundTrips)
{
    for (double v : {0.1, 1.0 / 3.0, 9.9957e7, 1.5145e10, 5e-324, -2.5})
    {
        std::string s = csv_number(v);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
    }
}

TEST(Csv, QuotingAndLineEndings)
{
    Table t{"x", {"a", "b"}, {{"1", "has,comma"}, {"say \"hi\"", "line\nbreak"}}};
    EXPECT_EQ(to_csv(t),
              "a,b\r\n1,\"has,comma\"\r\n\"say \"\"hi\"\"\",\"line\nbreak\"\r\n");
}

TEST(Run, BranchDiagramColumns)
{
    auto tables = compute_tables(preset("fig1a"), 1);
    auto const& br = table(tables, "branch");
    EXPECT_EQ(br.header,
              (std::vector<std::string>{"delta", "branch_tag", "M_u", "M_i",
                                        "B", "T", "stability"}));
    EXPECT_GE(br.rows.size(), 200u);
    auto const& bp = table(tables, "bifpoints");
    EXPECT_EQ(bp.rows.size(), 4u);  // three folds and the BP point
}

TEST(Run, EnsembleTables)
{
    Scenario s = preset("fig2");
    s.sim->n_paths = 8;
    s.sim->t_end = 2.0;
    auto tables = compute_tables(s, 1);
    auto const& ts = table(tables, "timeseries");
    EXPECT_EQ(ts.header.size(), 9u);
    EXPECT_EQ(ts.header[1], "mean_M_u");
    EXPECT_EQ(ts.header[8], "std_T");
    for (char const* v : {"M_u", "M_i", "B", "T"})
        EXPECT_EQ(table(tables, std::string("histogram_") + v).header.size(), 3u);
    for (int i = 0; i < 4; ++i)
        EXPECT_EQ(table(tables, "path_" + std::to_string(i)).header.size(), 5u);
    EXPECT_NO_THROW(table(tables, "ode_reference"));
    EXPECT_NO_THROW(table(tables, "summary"));
}

TEST(Run, EnvironmentalPathsCarryParameters)
{
    Scenario s = preset("fig7-b-region2-fast");
    s.sim->n_paths = 4;
    s.sim->t_end = 1.0;
    s.outputs = {"paths"};
    auto tables = compute_tables(s, 1);
    ASSERT_EQ(tables.size(), 4u);
    EXPECT_EQ(tables[0].header.back(), "eta");
}

TEST(Run, OdeAndContourAndRankDiff)
{
    auto f8 = compute_tables(preset("fig8a"), 1);
    auto const& sl = table(f8, "slopes");
    ASSERT_EQ(sl.rows.size(), 3u);
    double prev = -INFINITY;
    for (auto const& r : sl.rows)
    {
        double v = std::stod(r[4]);
        EXPECT_GT(v, prev);
        prev = v;
    }

    auto lam = compute_tables(preset("fig-lam1-a"), 1);
    EXPECT_EQ(table(lam, "lambda1").rows.size(), 46u * 39u);

    Scenario rd = preset("fig-order");
    rd.sim->n_paths = 6;
    rd.sim->t_end = 2.0;
    rd.rankdiff = RankDiffSpec{1.0, 2.0};
    rd.sim->snapshot_times = {1.0, 2.0};
    auto r = compute_tables(rd, 1);
    EXPECT_EQ(table(r, "rankdiff").rows.size(), 6u);
}

TEST(Run, WritesFiles)
{
    auto dir = std::filesystem::temp_directory_path() / "tbdyn_scenario_test";
    std::filesystem::remove_all(dir);
    Scenario s = parse_config(
        R"({"schema": 1, "name": "eq", "mode": "equilibria",
            "params": {"delta": 0.27, "eta": 1.25e-9}})");
    auto files = run_scenario(s, dir, 1);
    ASSERT_EQ(files.size(), 1u);
    std::ifstream is(files[0], std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    std::string text = ss.str();
    EXPECT_EQ(text.rfind("branch_tag,M_u,M_i,B,T,stability", 0), 0u);
    EXPECT_NE(text.find("\r\n"), std::string::npos);
    EXPECT_NE(text.find("LowInfected"), std::string::npos);
    std::filesystem::remove_all(dir);
}
