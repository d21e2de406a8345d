//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/ensemble.hpp
//! Monte Carlo ensembles: per-time moments, end-time samples, histograms,
//! order statistics.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "sde.hpp"

namespace tbdyn
{
//! The ensemble had too many failed paths to be trusted.
class EnsembleError : public NumericError
{
  public:
    using NumericError::NumericError;
};

//---------------------------------------------------------------------------//
//! Running mean and sum of squared deviations (Welford), mergeable (Chan).
struct RunningMoments
{
    double n = 0;
    double mean = 0;
    double m2 = 0;

    void push(double x)
    {
        n += 1;
        double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }

    void merge(RunningMoments const& o)
    {
        if (o.n == 0)
            return;
        if (n == 0)
        {
            *this = o;
            return;
        }
        double tot = n + o.n;
        double d = o.mean - mean;
        mean += d * (o.n / tot);
        m2 += o.m2 + d * d * (n * o.n / tot);
        n = tot;
    }

    //! Sample standard deviation (n - 1); zero below two samples.
    double stddev() const
    {
        return n > 1 ? std::sqrt(std::fmax(m2, 0.0) / (n - 1)) : 0.0;
    }
};

struct EnsembleSummary
{
    std::vector<double> times;
    std::vector<Vec4> mean_ts;
    std::vector<Vec4> std_ts;
    std::vector<StateVec> end_samples;  //!< contributing paths, index order
    //! [snapshot][path], contributing paths only
    std::vector<std::vector<StateVec>> snapshot_samples;
    std::vector<std::uint64_t> path_index;  //!< source index of each sample
    std::size_t n_paths = 0;
    std::size_t n_failed = 0;
    std::size_t n_absorbed = 0;  //!< joint M_i = B = 0 by t_end
    std::size_t n_bacteria_zero = 0;  //!< B hit zero at least once
    std::vector<PathResult> sample_paths;  //!< first few, verbatim
    SimConfig config;

    std::size_t n_contributing() const { return end_samples.size(); }

    //! One state variable across contributing paths.
    std::vector<double> end_column(std::size_t var) const
    {
        return column(end_samples, var);
    }
    std::vector<double> snapshot_column(std::size_t snap, std::size_t var) const
    {
        return column(snapshot_samples.at(snap), var);
    }

  private:
    static std::vector<double>
    column(std::vector<StateVec> const& s, std::size_t var)
    {
        std::vector<double> out;
        out.reserve(s.size());
        for (auto const& x : s)
            out.push_back(x[var]);
        return out;
    }
};

struct EnsembleOptions
{
    unsigned threads = 0;
    std::size_t chunk_size = 64;  //!< paths per reduction unit
    std::size_t keep_paths = 0;  //!< leading paths kept verbatim
    double max_failure_fraction = 0.01;
};

/*!
 * Run paths 0..n_paths-1 and reduce them.
 *
 * Paths are grouped in fixed chunks reduced in index order and merged in
 * chunk order, so results do not depend on the thread count. Failed paths
 * are excluded from every statistic.
 */
inline EnsembleSummary run_ensemble(StateVec const& init,
                                    ModelParams const& params,
                                    SimConfig const& config,
                                    std::size_t n_paths,
                                    EnsembleOptions const& opt = {})
{
    if (n_paths < 2)
        throw DomainError("run_ensemble: n_paths must be >= 2");
    config.validate();
    if (opt.chunk_size < 1)
        throw DomainError("run_ensemble: chunk_size must be >= 1");

    std::size_t const n_chunks = (n_paths + opt.chunk_size - 1)
                                 / opt.chunk_size;
    std::size_t const n_snap = config.snapshot_times.size();

    struct Chunk
    {
        std::vector<std::array<RunningMoments, 4>> acc;
        std::vector<double> times;
        std::vector<StateVec> ends;
        std::vector<std::vector<StateVec>> snaps;
        std::vector<std::uint64_t> index;
        std::vector<PathResult> kept;
        std::size_t failed = 0, absorbed = 0, bzero = 0;
    };
    std::vector<Chunk> chunks(n_chunks);

    parallel_for(n_chunks, opt.threads, [&](std::size_t c) {
        Chunk& ch = chunks[c];
        ch.snaps.resize(n_snap);
        std::size_t const lo = c * opt.chunk_size;
        std::size_t const hi = std::min(n_paths, lo + opt.chunk_size);
        for (std::size_t i = lo; i < hi; ++i)
        {
            PathResult path = simulate_path(init, params, config, i);
            if (path.failed)
            {
                ++ch.failed;
                continue;
            }
            if (ch.acc.empty())
            {
                ch.acc.resize(path.times.size());
                ch.times = path.times;
            }
            for (std::size_t k = 0; k < path.states.size(); ++k)
            {
                for (std::size_t v = 0; v < 4; ++v)
                    ch.acc[k][v].push(path.states[k][v]);
            }
            ch.ends.push_back(path.states.back());
            for (std::size_t s = 0; s < n_snap; ++s)
                ch.snaps[s].push_back(path.snapshots[s]);
            ch.index.push_back(i);
            if (path.absorbed_at && path.states.back().bacteria == 0.0
                && path.states.back().infected == 0.0)
            {
                ++ch.absorbed;
            }
            if (path.bacteria_zero_at)
                ++ch.bzero;
            if (i < opt.keep_paths)
                ch.kept.push_back(std::move(path));
        }
    });

    EnsembleSummary out;
    out.config = config;
    out.n_paths = n_paths;
    out.snapshot_samples.resize(n_snap);
    std::vector<std::array<RunningMoments, 4>> total;
    for (auto& ch : chunks)
    {
        out.n_failed += ch.failed;
        out.n_absorbed += ch.absorbed;
        out.n_bacteria_zero += ch.bzero;
        if (!ch.acc.empty())
        {
            if (total.empty())
            {
                total.resize(ch.acc.size());
                out.times = ch.times;
            }
            for (std::size_t k = 0; k < total.size(); ++k)
            {
                for (std::size_t v = 0; v < 4; ++v)
                    total[k][v].merge(ch.acc[k][v]);
            }
        }
        out.end_samples.insert(out.end_samples.end(), ch.ends.begin(),
                               ch.ends.end());
        for (std::size_t s = 0; s < n_snap; ++s)
        {
            out.snapshot_samples[s].insert(out.snapshot_samples[s].end(),
                                           ch.snaps[s].begin(),
                                           ch.snaps[s].end());
        }
        out.path_index.insert(out.path_index.end(), ch.index.begin(),
                              ch.index.end());
        for (auto& p : ch.kept)
            out.sample_paths.push_back(std::move(p));
    }

    if (static_cast<double>(out.n_failed)
        > opt.max_failure_fraction * static_cast<double>(n_paths))
    {
        throw EnsembleError("run_ensemble: " + std::to_string(out.n_failed)
                            + " of " + std::to_string(n_paths)
                            + " paths failed");
    }

    out.mean_ts.reserve(total.size());
    out.std_ts.reserve(total.size());
    for (auto const& row : total)
    {
        Vec4 m, s;
        for (std::size_t v = 0; v < 4; ++v)
        {
            m[v] = row[v].mean;
            s[v] = row[v].stddev();
        }
        out.mean_ts.push_back(m);
        out.std_ts.push_back(s);
    }
    return out;
}

//---------------------------------------------------------------------------//
// SAMPLE STATISTICS
//---------------------------------------------------------------------------//
struct Histogram
{
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    std::string variable;

    std::size_t total() const
    {
        std::size_t n = 0;
        for (auto c : counts)
            n += c;
        return n;
    }
    //! Index of the most populated bin (first on ties).
    std::size_t mode_bin() const
    {
        return static_cast<std::size_t>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
};

/*!
 * Equal-width bins on [min, max]; the maximum falls in the last bin.
 *
 * Identical samples give one bin [v, nextafter(v)].
 */
inline Histogram histogram(std::span<double const> samples,
                           std::size_t bins = 100,
                           std::string variable = {})
{
    if (samples.empty())
        throw DomainError("histogram: no samples");
    if (bins < 1)
        throw DomainError("histogram: bins must be >= 1");
    for (double v : samples)
    {
        if (!std::isfinite(v))
            throw DomainError("histogram: non-finite sample");
    }
    auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    double const lo = *lo_it, hi = *hi_it;

    Histogram h;
    h.variable = std::move(variable);
    if (lo == hi)
    {
        h.bin_edges = {lo, std::nextafter(lo, INFINITY)};
        h.counts = {samples.size()};
        return h;
    }
    double const width = (hi - lo) / static_cast<double>(bins);
    h.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.bin_edges[i] = lo + width * static_cast<double>(i);
    h.bin_edges.back() = hi;
    h.counts.assign(bins, 0);
    for (double v : samples)
    {
        auto i = static_cast<std::size_t>((v - lo) / width);
        i = std::min(i, bins - 1);
        // Guard rounding at interior edges
        while (i > 0 && v < h.bin_edges[i])
            --i;
        while (i + 1 < bins && v >= h.bin_edges[i + 1])
            ++i;
        ++h.counts[i];
    }
    return h;
}

struct SummaryStats
{
    double mean;
    double std;  //!< n - 1 denominator; 0 for one sample
    double median;
};

inline SummaryStats summary_stats(std::span<double const> samples)
{
    if (samples.empty())
        throw DomainError("summary_stats: no samples");
    RunningMoments m;
    for (double v : samples)
        m.push(v);
    std::vector<double> s(samples.begin(), samples.end());
    std::size_t const n = s.size();
    std::size_t const mid = n / 2;
    std::nth_element(s.begin(), s.begin() + mid, s.end());
    double med = s[mid];
    if (n % 2 == 0)
    {
        double below = *std::max_element(s.begin(), s.begin() + mid);
        med = 0.5 * (below + med);
    }
    return {m.mean, m.stddev(), med};
}

struct RankRow
{
    std::size_t rank;  //!< 1-based, ascending
    double value_t1;
    double value_t2;
    double diff;  //!< value_t2 - value_t1
};

inline std::vector<RankRow> rank_diff(std::span<double const> samples_t1,
                                      std::span<double const> samples_t2)
{
    if (samples_t1.size() != samples_t2.size())
        throw DomainError("rank_diff: sample sets differ in length");
    std::vector<double> a(samples_t1.begin(), samples_t1.end());
    std::vector<double> b(samples_t2.begin(), samples_t2.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<RankRow> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = {i + 1, a[i], b[i], b[i] - a[i]};
    return out;
}

}  // namespace tbdyn
