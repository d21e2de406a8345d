//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "tbdyn/ensemble.hpp"

using namespace tbdyn;

namespace
{
SimConfig short_config()
{
    SimConfig cfg;
    cfg.t_end = 3.0;
    cfg.record_stride = 50;
    cfg.seed = 5;
    cfg.snapshot_times = {1.0};
    return cfg;
}

ModelParams latent_params()
{
    ModelParams p = ModelParams::calibrated();
    p.delta = 0.27;
    return p;
}
}  // namespace

TEST(RunningMoments, MergeEqualsSinglePass)
{
    std::mt19937_64 rng(1);
    std::lognormal_distribution<double> d(3.0, 2.0);
    std::vector<double> x(1001);
    for (auto& v : x)
        v = d(rng);
    RunningMoments all, left, right;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        all.push(x[i]);
        (i < 333 ? left : right).push(x[i]);
    }
    left.merge(right);
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    double ss = 0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / (x.size() - 1));
    EXPECT_NEAR(all.mean, mean, 1e-12 * mean);
    EXPECT_NEAR(left.mean, mean, 1e-12 * mean);
    EXPECT_NEAR(all.stddev(), sd, 1e-10 * sd);
    EXPECT_NEAR(left.stddev(), sd, 1e-10 * sd);
    RunningMoments one;
    one.push(4);
    EXPECT_EQ(one.stddev(), 0.0);
}

TEST(Ensemble, IndependentOfThreadCount)
{
    auto cfg = short_config();
    EnsembleOptions one{1, 16, 2};
    EnsembleOptions four{4, 16, 2};
    auto a = run_ensemble({4.99e5, 4, 4, 75}, latent_params(), cfg, 50, one);
    auto b = run_ensemble({4.99e5, 4, 4, 75}, latent_params(), cfg, 50, four);
    ASSERT_EQ(a.times.size(), b.times.size());
    for (std::size_t k = 0; k < a.times.size(); ++k)
    {
        EXPECT_EQ(a.mean_ts[k], b.mean_ts[k]);
        EXPECT_EQ(a.std_ts[k], b.std_ts[k]);
    }
    EXPECT_EQ(a.end_samples, b.end_samples);
    EXPECT_EQ(a.path_index, b.path_index);
    EXPECT_EQ(a.sample_paths.size(), 2u);
    EXPECT_EQ(a.snapshot_samples.size(), 1u);
    EXPECT_EQ(a.snapshot_samples[0].size(), 50u);
}

TEST(Ensemble, MomentsMatchPaths)
{
    auto cfg = short_config();
    auto params = latent_params();
    auto sum = run_ensemble({4.99e5, 4, 4, 75}, params, cfg, 20, {1, 7});
    RunningMoments m;
    for (std::uint64_t i = 0; i < 20; ++i)
        m.push(simulate_path({4.99e5, 4, 4, 75}, params, cfg, i)
                   .states.back()
                   .bacteria);
    EXPECT_NEAR(sum.mean_ts.back()[2], m.mean, 1e-9 * std::fabs(m.mean));
    EXPECT_NEAR(sum.std_ts.back()[2], m.stddev(), 1e-9 * m.stddev());
    EXPECT_EQ(sum.n_contributing(), 20u);
    EXPECT_EQ(sum.end_column(2).size(), 20u);
}

TEST(Ensemble, TooFewPaths)
{
    EXPECT_THROW(run_ensemble({1, 1, 1, 1}, ModelParams{}, short_config(), 1),
                 DomainError);
}

TEST(Histogram, BinsAndEdges)
{
    std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    auto h = histogram(x, 5, "B");
    ASSERT_EQ(h.bin_edges.size(), 6u);
    EXPECT_EQ(h.bin_edges.front(), 0.0);
    EXPECT_EQ(h.bin_edges.back(), 10.0);
    EXPECT_EQ(h.total(), 11u);
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 2, 2, 2, 3}));
    EXPECT_EQ(h.variable, "B");
    EXPECT_EQ(h.mode_bin(), 4u);
}

TEST(Histogram, DegenerateAndInvalid)
{
    std::vector<double> same(10, 3.5);
    auto h = histogram(same, 100);
    ASSERT_EQ(h.counts.size(), 1u);
    EXPECT_EQ(h.counts[0], 10u);
    EXPECT_EQ(h.bin_edges[0], 3.5);
    EXPECT_GT(h.bin_edges[1], 3.5);
    std::vector<double> empty;
    EXPECT_THROW(histogram(empty), DomainError);
    std::vector<double> bad{1, NAN};
    EXPECT_THROW(histogram(bad), DomainError);
}

TEST(Histogram, EveryBinSampleInside)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d(5e5, 700);
    std::vector<double> x(10000);
    for (auto& v : x)
        v = d(rng);
    auto h = histogram(x, 100);
    EXPECT_EQ(h.total(), x.size());
    std::vector<std::size_t> recount(100, 0);
    for (double v : x)
    {
        auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), v);
        auto i = std::min<std::size_t>(it - h.bin_edges.begin() - 1, 99);
        ++recount[i];
    }
    EXPECT_EQ(recount, h.counts);
}

TEST(Summary, MeanStdMedian)
{
    std::vector<double> odd{5, 1, 3}, even{4, 1, 3, 2};
    auto a = summary_stats(odd);
    EXPECT_DOUBLE_EQ(a.mean, 3.0);
    EXPECT_DOUBLE_EQ(a.std, 2.0);
    EXPECT_DOUBLE_EQ(a.median, 3.0);
    auto b = summary_stats(even);
    EXPECT_DOUBLE_EQ(b.median, 2.5);
    std::vector<double> one{7};
    EXPECT_EQ(summary_stats(one).std, 0.0);
}

TEST(RankDiff, SortedDifferences)
{
    std::vector<double> t1{3, 1, 2}, t2{10, 30, 20};
    auto r = rank_diff(t1, t2);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].rank, 1u);
    EXPECT_EQ(r[0].value_t1, 1.0);
    EXPECT_EQ(r[0].value_t2, 10.0);
    EXPECT_EQ(r[2].diff, 27.0);
    std::vector<double> shorter{1};
    EXPECT_THROW(rank_diff(t1, shorter), DomainError);
}
