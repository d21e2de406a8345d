//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
#include <cmath>

#include <gtest/gtest.h>

#include "tbdyn/bifurcation.hpp"

using namespace tbdyn;

namespace
{
class DeltaScan : public ::testing::Test
{
  protected:
    static void SetUpTestSuite()
    {
        diagram_ = new BranchDiagram(
            branch_scan(ModelParams::calibrated(), "delta", 0.0, 0.35, 200));
        folds_ = new std::vector<BifPoint>(detect_folds(*diagram_));
    }
    static void TearDownTestSuite()
    {
        delete folds_;
        delete diagram_;
    }

    static BifPoint const& fold_near(double delta)
    {
        for (auto const& f : *folds_)
        {
            if (std::fabs(f.parameter_value - delta) < 0.1 * delta)
                return f;
        }
        throw std::runtime_error("fold not found");
    }

    static BranchDiagram* diagram_;
    static std::vector<BifPoint>* folds_;
};
BranchDiagram* DeltaScan::diagram_ = nullptr;
std::vector<BifPoint>* DeltaScan::folds_ = nullptr;

void expect_state_near(StateVec const& s,
                       std::array<double, 4> ref,
                       double tol)
{
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_NEAR(s[i] / ref[i], 1.0, tol) << state_names[i];
}
}  // namespace

TEST_F(DeltaScan, ThreeFolds)
{
    ASSERT_EQ(folds_->size(), 3u);
    EXPECT_EQ(diagram_->parameter_values.size(), 200u);
    EXPECT_EQ(diagram_->parameter_values.front(), 0.0);
    EXPECT_EQ(diagram_->parameter_values.back(), 0.35);
    for (auto const& f : *folds_)
        EXPECT_EQ(f.kind, BifKind::LP);
}

TEST_F(DeltaScan, LowerFold)
{
    auto const& f = fold_near(0.2621);
    EXPECT_NEAR(f.parameter_value / 0.2621, 1, 0.02);
    expect_state_near(f.state, {4.99672e5, 2.366, 32.78, 40.16}, 0.02);
}

TEST_F(DeltaScan, MiddleFold)
{
    auto const& f = fold_near(0.2945);
    EXPECT_NEAR(f.parameter_value / 0.2945, 1, 0.02);
    expect_state_near(f.state, {4.98848e5, 7.171, 115.4, 7751}, 0.02);
}

TEST_F(DeltaScan, HighFold)
{
    auto const& f = fold_near(0.00059);
    EXPECT_NEAR(f.parameter_value / 0.00059, 1, 0.02);
    expect_state_near(f.state, {499.7, 3102, 4.997e7, 0.7572e10}, 0.02);
}

TEST_F(DeltaScan, InfectedCountsChangeOnlyAtFolds)
{
    for (std::size_t i = 0; i + 1 < diagram_->parameter_values.size(); ++i)
    {
        double lo = diagram_->parameter_values[i];
        double hi = diagram_->parameter_values[i + 1];
        bool fold_inside = false;
        for (auto const& f : *folds_)
            fold_inside |= f.parameter_value > lo && f.parameter_value < hi;
        bool bp_inside = delta_threshold(diagram_->base) > lo
                         && delta_threshold(diagram_->base) < hi;
        if (!fold_inside && !bp_inside)
        {
            EXPECT_EQ(diagram_->infected_count(i),
                      diagram_->infected_count(i + 1))
                << lo;
        }
    }
}

TEST(BranchPoint, ClosedFormAndNumericAgree)
{
    for (auto p : {ModelParams::table1(), ModelParams::calibrated()})
    {
        auto bp = detect_branch_point(p);
        EXPECT_EQ(bp.kind, BifKind::BP);
        EXPECT_NEAR(bp.parameter_value, branch_point_numeric(p),
                    1e-8 * bp.parameter_value);
        EXPECT_EQ(bp.state.infected, 0.0);
    }
    EXPECT_NEAR(detect_branch_point(ModelParams::calibrated()).parameter_value
                    / 0.2956,
                1, 0.03);
}

TEST(Regions, FourRegions)
{
    struct Case
    {
        double delta;
        int region;
    };
    for (auto c : {Case{0.0003, 1}, Case{0.2, 2}, Case{0.27, 3},
                   Case{0.35, 4}})
    {
        ModelParams p = ModelParams::calibrated();
        p.delta = c.delta;
        auto r = classify_region(p);
        EXPECT_EQ(r.region, c.region) << c.delta;
        EXPECT_FALSE(r.degenerate);
        EXPECT_LE(r.lower, c.delta);
        EXPECT_GE(r.upper, c.delta);
    }
}

TEST(Sweep, BoundsEnforced)
{
    ModelParams p;
    EXPECT_THROW(branch_scan(p, "delta", 0.0, 0.5, 200), DomainError);
    EXPECT_THROW(branch_scan(p, "K", 1.0, 2.0, 200), DomainError);
    EXPECT_THROW(branch_scan(p, "b", 0.05, 0.5, 50), DomainError);
    EXPECT_THROW(boundary_trace_2d(p, "delta", 0.0, 0.3, 3), DomainError);
    EXPECT_FALSE(sweep_bounds("c").has_value());
    EXPECT_EQ(sweep_bounds("gamma")->hi, 2.0);
}

TEST(Boundary2D, BranchPointCurveFollowsThreshold)
{
    ModelParams p = ModelParams::calibrated();
    auto b = boundary_trace_2d(p, "b", 0.05, 0.5, 3);
    ASSERT_EQ(b.slices.size(), 3u);
    for (auto const& s : b.slices)
    {
        EXPECT_TRUE(s.ok) << s.message;
        ModelParams q = p;
        q.b = s.value;
        double d0 = delta_threshold(q);
        if (d0 >= 0 && d0 <= 0.35)
        {
            ASSERT_TRUE(s.bp_delta.has_value());
            EXPECT_NEAR(*s.bp_delta, d0, 1e-12);
        }
        for (std::size_t i = 1; i < s.lp_deltas.size(); ++i)
            EXPECT_LT(s.lp_deltas[i - 1], s.lp_deltas[i]);
    }
}
