//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/bifurcation.hpp
//! One- and two-parameter sweeps: fold (LP) and transcritical (BP) points
//! and the outcome regions they delimit in delta.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "equilibrium.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace tbdyn
{
//! A count change that cannot be attributed to a fold or the BP crossing.
class GridTooCoarse : public NumericError
{
  public:
    GridTooCoarse(std::string const& what, double lo, double hi)
        : NumericError(what), lo_(lo), hi_(hi)
    {
    }
    double cell_lo() const { return lo_; }
    double cell_hi() const { return hi_; }

  private:
    double lo_;
    double hi_;
};

//---------------------------------------------------------------------------//
struct ParamBounds
{
    double lo;
    double hi;
};

//! Admissible sweep ranges, closed.
inline std::optional<ParamBounds> sweep_bounds(std::string_view name)
{
    if (name == "delta")
        return ParamBounds{0.0, 0.35};
    if (name == "b")
        return ParamBounds{0.05, 0.5};
    if (name == "gamma")
        return ParamBounds{0.1, 2.0};
    if (name == "eta")
        return ParamBounds{1.25e-9, 1.25e-7};
    return std::nullopt;
}

struct ScanOptions
{
    BRange b_range{};
    std::size_t eq_grid_points = 2000;
    unsigned threads = 0;

    friend bool operator==(ScanOptions const&, ScanOptions const&) = default;
};

struct BranchDiagram
{
    std::string parameter_name;
    std::vector<double> parameter_values;
    std::vector<std::vector<EquilibriumRecord>> equilibria_per_value;
    std::vector<std::string> diagnostics;
    ModelParams base;
    ScanOptions options;

    //! Infected equilibria only (the trivial record is always first).
    std::size_t infected_count(std::size_t i) const
    {
        return equilibria_per_value[i].size() - 1;
    }
};

namespace detail
{
inline void check_sweep(std::string_view name, double lo, double hi)
{
    auto bounds = sweep_bounds(name);
    if (!bounds)
    {
        throw DomainError("sweep parameter must be one of delta, b, gamma,"
                          " eta; got '"
                          + std::string(name) + "'");
    }
    if (!(lo < hi) || lo < bounds->lo || hi > bounds->hi)
    {
        throw DomainError("sweep range for '" + std::string(name)
                          + "' must satisfy " + std::to_string(bounds->lo)
                          + " <= lo < hi <= " + std::to_string(bounds->hi));
    }
}

inline std::vector<EquilibriumRecord>
equilibria_at(ModelParams p,
              std::string_view name,
              double value,
              ScanOptions const& opt,
              EquilibriumScanLog* log = nullptr)
{
    p.at(name) = value;
    return all_equilibria(p, opt.b_range, opt.eq_grid_points, log);
}
}  // namespace detail

/*!
 * Equilibria on an even grid of one parameter.
 *
 * Grid points are solved independently; solver diagnostics are collected
 * and the scan continues.
 */
inline BranchDiagram branch_scan(ModelParams const& params,
                                 std::string const& name,
                                 double lo,
                                 double hi,
                                 std::size_t grid_points,
                                 ScanOptions const& opt = {})
{
    detail::check_sweep(name, lo, hi);
    if (grid_points < 200)
        throw DomainError("branch_scan: grid_points must be >= 200");

    BranchDiagram d;
    d.parameter_name = name;
    d.base = params;
    d.options = opt;
    d.parameter_values.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
    {
        d.parameter_values[i]
            = lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
    }
    d.parameter_values.back() = hi;
    d.equilibria_per_value.resize(grid_points);
    std::vector<EquilibriumScanLog> logs(grid_points);
    parallel_for(grid_points, opt.threads, [&](std::size_t i) {
        d.equilibria_per_value[i] = detail::equilibria_at(
            params, name, d.parameter_values[i], opt, &logs[i]);
    });
    for (std::size_t i = 0; i < grid_points; ++i)
    {
        for (auto& m : logs[i].messages)
        {
            d.diagnostics.push_back(name + "="
                                    + std::to_string(d.parameter_values[i])
                                    + ": " + m);
        }
    }
    return d;
}

//---------------------------------------------------------------------------//
enum class BifKind
{
    LP,
    BP,
};

inline std::string_view to_string(BifKind k)
{
    return k == BifKind::LP ? "LP" : "BP";
}

struct BifPoint
{
    BifKind kind;
    double parameter_value;
    StateVec state;
};

namespace detail
{
struct CountEvent
{
    double lo, hi;
    std::vector<EquilibriumRecord> eq_lo, eq_hi;
};

// Split [lo, hi] until each piece with a count change is narrower than tol.
inline void refine_count_change(ModelParams const& base,
                                std::string_view name,
                                ScanOptions const& opt,
                                double tol,
                                double lo,
                                double hi,
                                std::vector<EquilibriumRecord> eq_lo,
                                std::vector<EquilibriumRecord> eq_hi,
                                std::vector<CountEvent>& out)
{
    if (eq_lo.size() == eq_hi.size())
        return;
    if (hi - lo <= tol)
    {
        out.push_back({lo, hi, std::move(eq_lo), std::move(eq_hi)});
        return;
    }
    double mid = 0.5 * (lo + hi);
    auto eq_mid = equilibria_at(base, name, mid, opt);
    refine_count_change(base, name, opt, tol, lo, mid, std::move(eq_lo),
                        eq_mid, out);
    refine_count_change(base, name, opt, tol, mid, hi, eq_mid,
                        std::move(eq_hi), out);
}

// The two records of `more` left without a nearest partner in `fewer`.
inline StateVec merging_state(std::vector<EquilibriumRecord> const& more,
                              std::vector<EquilibriumRecord> const& fewer)
{
    std::vector<bool> used(more.size(), false);
    for (auto const& f : fewer)
    {
        if (f.branch == BranchTag::trivial)
            continue;
        double best = INFINITY;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < more.size(); ++i)
        {
            if (used[i] || more[i].branch == BranchTag::trivial)
                continue;
            double dist = std::fabs(std::log(more[i].state.bacteria)
                                    - std::log(f.state.bacteria));
            if (dist < best)
            {
                best = dist;
                best_i = i;
            }
        }
        used[best_i] = true;
    }
    Vec4 sum = Vec4::Zero();
    int n = 0;
    for (std::size_t i = 0; i < more.size(); ++i)
    {
        if (!used[i] && more[i].branch != BranchTag::trivial)
        {
            sum += more[i].state.vec();
            ++n;
        }
    }
    if (n == 0)
        throw NumericError("fold refinement lost the merging pair");
    return StateVec::from(sum / n);
}

inline bool c2_changes_sign(ModelParams p,
                            std::string_view name,
                            double lo,
                            double hi)
{
    p.at(name) = lo;
    double a = char_coeffs(p).c2;
    p.at(name) = hi;
    double b = char_coeffs(p).c2;
    return (a <= 0) != (b <= 0) || a == 0.0 || b == 0.0;
}
}  // namespace detail

/*!
 * Fold points from changes of the infected-equilibrium count.
 *
 * Each changing grid cell is bisected on the parameter (not on a test
 * function) to 1e-9 relative. A change by two is a fold; a change by one is
 * accepted only as the BP crossing, i.e. where c2 changes sign within the
 * cell or its neighbours.
 */
inline std::vector<BifPoint> detect_folds(BranchDiagram const& d)
{
    std::vector<BifPoint> folds;
    auto const& v = d.parameter_values;
    std::size_t const n = v.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
    {
        if (d.infected_count(i) == d.infected_count(i + 1))
            continue;
        double const tol = 1e-9 * std::max(std::fabs(v[i + 1]), 1e-3);
        std::vector<detail::CountEvent> events;
        detail::refine_count_change(d.base, d.parameter_name, d.options, tol,
                                    v[i], v[i + 1],
                                    d.equilibria_per_value[i],
                                    d.equilibria_per_value[i + 1], events);
        for (auto const& ev : events)
        {
            auto const n_lo = ev.eq_lo.size(), n_hi = ev.eq_hi.size();
            auto const change = n_lo > n_hi ? n_lo - n_hi : n_hi - n_lo;
            if (change == 2)
            {
                bool const grow = n_hi > n_lo;
                BifPoint bp{BifKind::LP, grow ? ev.hi : ev.lo,
                            grow ? detail::merging_state(ev.eq_hi, ev.eq_lo)
                                 : detail::merging_state(ev.eq_lo, ev.eq_hi)};
                bp.parameter_value = 0.5 * (ev.lo + ev.hi);
                folds.push_back(bp);
                continue;
            }
            double const wlo = v[i > 0 ? i - 1 : 0];
            double const whi = v[std::min(i + 2, n - 1)];
            if (change == 1
                && detail::c2_changes_sign(d.base, d.parameter_name, wlo, whi))
            {
                continue;
            }
            throw GridTooCoarse(
                "equilibrium count changes by " + std::to_string(change)
                    + " in cell [" + std::to_string(v[i]) + ", "
                    + std::to_string(v[i + 1]) + "] of "
                    + d.parameter_name,
                v[i],
                v[i + 1]);
        }
    }
    return folds;
}

/*!
 * Transcritical point of the trivial state in delta.
 *
 * The closed-form threshold is cross-checked against bisection on the sign
 * of the largest real part of the numeric Jacobian spectrum.
 */
inline BifPoint detect_branch_point(ModelParams const& params)
{
    double const d0 = delta_threshold(params);
    auto top = [&](double delta) {
        ModelParams p = params;
        p.delta = delta;
        auto ev = numeric_eigenvalues(jacobian(trivial_equilibrium(p).state,
                                               p));
        return ev[0].real();
    };
    double const span = 1.0 + std::fabs(d0);
    double lo = d0 - span, hi = d0 + span;
    if (!(top(lo) < 0) || !(top(hi) > 0))
    {
        throw ConsistencyError("detect_branch_point: spectrum does not change"
                               " sign around the closed-form threshold");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * span; ++it)
    {
        double mid = 0.5 * (lo + hi);
        (top(mid) < 0 ? lo : hi) = mid;
    }
    double const numeric = 0.5 * (lo + hi);
    if (std::fabs(numeric - d0) > 1e-6 * std::max(std::fabs(d0), 1e-300))
    {
        throw ConsistencyError("detect_branch_point: closed form "
                               + std::to_string(d0) + " vs numeric "
                               + std::to_string(numeric));
    }
    ModelParams p = params;
    p.delta = d0;
    return {BifKind::BP, d0, trivial_equilibrium(p).state};
}

//! Numeric eigenvalue-sign estimate alone, for consistency reporting.
inline double branch_point_numeric(ModelParams const& params)
{
    double const d0 = delta_threshold(params);
    auto top = [&](double delta) {
        ModelParams p = params;
        p.delta = delta;
        return numeric_eigenvalues(jacobian(trivial_equilibrium(p).state, p))[0]
            .real();
    };
    double const span = 1.0 + std::fabs(d0);
    double lo = d0 - span, hi = d0 + span;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * span; ++it)
    {
        double mid = 0.5 * (lo + hi);
        (top(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

//---------------------------------------------------------------------------//
struct RegionLabel
{
    int region = 0;  //!< 1..4
    double lower = 0;
    double upper = INFINITY;
    //! Fold deltas in increasing order (delta_h, delta_l, delta_m).
    std::vector<double> boundaries;
    std::vector<BifPoint> folds;
    bool degenerate = false;  //!< fewer than three folds found
};

struct RegionOptions
{
    std::size_t grid_points = 200;
    ScanOptions scan{};
};

/*!
 * Region of params.delta from a delta scan over [0, 0.35].
 *
 * Regions are [0, d_h], [d_h, d_l], [d_l, d_m], [d_m, inf). With fewer than
 * three folds the boundaries found still partition the axis and
 * `degenerate` is set.
 */
inline RegionLabel classify_region(ModelParams const& params,
                                   RegionOptions const& opt = {})
{
    auto diag = branch_scan(params, "delta", 0.0, 0.35, opt.grid_points,
                            opt.scan);
    RegionLabel out;
    out.folds = detect_folds(diag);
    for (auto const& f : out.folds)
        out.boundaries.push_back(f.parameter_value);
    std::sort(out.boundaries.begin(), out.boundaries.end());
    out.degenerate = out.boundaries.size() < 3;

    std::size_t below = 0;
    while (below < out.boundaries.size()
           && out.boundaries[below] <= params.delta)
    {
        ++below;
    }
    out.region = static_cast<int>(below) + 1;
    out.lower = below == 0 ? 0.0 : out.boundaries[below - 1];
    out.upper = below < out.boundaries.size() ? out.boundaries[below]
                                              : INFINITY;
    return out;
}

//---------------------------------------------------------------------------//
// TWO-PARAMETER BOUNDARIES
//---------------------------------------------------------------------------//
struct Polyline
{
    //! (delta, second parameter)
    std::vector<std::array<double, 2>> points;
    bool has_gap = false;
};

struct SliceResult
{
    double value;
    std::vector<double> lp_deltas;  //!< increasing
    std::optional<double> bp_delta;  //!< when inside [0, 0.35]
    bool ok = true;
    std::string message;

    //! Region 1 (only the trivial state, stable): [0, smallest fold].
    std::optional<double> region1_extent() const
    {
        if (lp_deltas.empty())
            return std::nullopt;
        return lp_deltas.front();
    }
    //! Upper delta of the side where clearance is reachable.
    std::optional<double> clearance_extent() const
    {
        std::optional<double> out;
        if (lp_deltas.size() >= 2)
            out = lp_deltas[1];
        if (bp_delta)
            out = out ? std::min(*out, *bp_delta) : *bp_delta;
        return out;
    }
};

struct Boundary2D
{
    std::string second_param;
    std::vector<SliceResult> slices;
    std::vector<Polyline> lp_curves;
    Polyline bp_curve;
};

namespace detail
{
// Greedy nearest-neighbour continuation in delta across slices.
inline std::vector<Polyline>
assemble_polylines(std::vector<SliceResult> const& slices, bool use_bp)
{
    std::vector<Polyline> lines;
    std::vector<std::size_t> open;  // lines continued on the previous slice
    for (std::size_t s = 0; s < slices.size(); ++s)
    {
        auto const& sl = slices[s];
        std::vector<double> pts;
        if (use_bp)
        {
            if (sl.bp_delta)
                pts.push_back(*sl.bp_delta);
        }
        else
        {
            pts = sl.lp_deltas;
        }
        std::vector<std::size_t> next_open;
        std::vector<bool> taken(lines.size(), false);
        for (double dlt : pts)
        {
            double best = INFINITY;
            std::size_t best_line = lines.size();
            for (std::size_t li : open)
            {
                if (taken[li])
                    continue;
                double dist = std::fabs(lines[li].points.back()[0] - dlt);
                if (dist < best)
                {
                    best = dist;
                    best_line = li;
                }
            }
            if (best_line == lines.size())
            {
                lines.push_back({});
                taken.push_back(false);
                if (s > 0)
                    lines.back().has_gap = true;
            }
            taken[best_line] = true;
            lines[best_line].points.push_back({dlt, sl.value});
            next_open.push_back(best_line);
        }
        for (std::size_t li : open)
        {
            if (std::find(next_open.begin(), next_open.end(), li)
                == next_open.end())
            {
                lines[li].has_gap = lines[li].has_gap || s + 1 < slices.size();
            }
        }
        if (!sl.ok)
        {
            for (std::size_t li : open)
                lines[li].has_gap = true;
        }
        open = std::move(next_open);
    }
    return lines;
}
}  // namespace detail

/*!
 * Fold and BP curves in the (delta, second parameter) plane.
 *
 * Each slice fixes the second parameter, scans delta over [0, 0.35] and
 * detects folds and the BP point; slice failures are recorded and leave a
 * gap flag on the affected curves.
 */
inline Boundary2D boundary_trace_2d(ModelParams const& params,
                                    std::string const& second_param,
                                    double lo,
                                    double hi,
                                    std::size_t slices,
                                    RegionOptions const& opt = {})
{
    if (second_param != "b" && second_param != "gamma"
        && second_param != "eta")
    {
        throw DomainError("boundary_trace_2d: second parameter must be b,"
                          " gamma or eta");
    }
    detail::check_sweep(second_param, lo, hi);
    if (slices < 1)
        throw DomainError("boundary_trace_2d: slices must be >= 1");

    Boundary2D out;
    out.second_param = second_param;
    out.slices.resize(slices);
    // Slices run serially; each delta scan is parallel inside.
    for (std::size_t s = 0; s < slices; ++s)
    {
        double v = slices == 1 ? lo
                               : lo + (hi - lo) * static_cast<double>(s)
                                          / (slices - 1);
        SliceResult& sr = out.slices[s];
        sr.value = v;
        ModelParams p = params;
        p.at(second_param) = v;
        try
        {
            auto diag = branch_scan(p, "delta", 0.0, 0.35, opt.grid_points,
                                    opt.scan);
            for (auto const& f : detect_folds(diag))
                sr.lp_deltas.push_back(f.parameter_value);
            std::sort(sr.lp_deltas.begin(), sr.lp_deltas.end());
        }
        catch (NumericError const& e)
        {
            sr.ok = false;
            sr.message = e.what();
        }
        try
        {
            double bp = detect_branch_point(p).parameter_value;
            if (bp >= 0.0 && bp <= 0.35)
                sr.bp_delta = bp;
        }
        catch (NumericError const& e)
        {
            sr.ok = false;
            sr.message += std::string(sr.message.empty() ? "" : "; ")
                          + e.what();
        }
    }
    out.lp_curves = detail::assemble_polylines(out.slices, false);
    auto bp = detail::assemble_polylines(out.slices, true);
    if (!bp.empty())
    {
        out.bp_curve = bp.front();
        out.bp_curve.has_gap = bp.size() > 1 || bp.front().has_gap;
        for (std::size_t i = 1; i < bp.size(); ++i)
        {
            out.bp_curve.points.insert(out.bp_curve.points.end(),
                                       bp[i].points.begin(),
                                       bp[i].points.end());
        }
    }
    return out;
}

}  // namespace tbdyn
