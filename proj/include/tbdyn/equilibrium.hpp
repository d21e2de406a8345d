//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/equilibrium.hpp
//! Trivial and infected steady states, Jacobian, spectra and the closed-form
//! characteristic quantities at the infection-free state.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "model.hpp"

namespace tbdyn
{
using Complex = std::complex<double>;
//! Eigenvalues ordered by decreasing real part.
using Spectrum = std::array<Complex, 4>;

enum class Stability
{
    stable,
    saddle,
    unstable,
    marginal,
};

enum class BranchTag
{
    trivial,
    low_infected,
    mid_infected,
    high_infected,
};

inline std::string_view to_string(Stability s)
{
    switch (s)
    {
        case Stability::stable: return "Stable";
        case Stability::saddle: return "Saddle";
        case Stability::unstable: return "Unstable";
        case Stability::marginal: return "Marginal";
    }
    return "?";
}

inline std::string_view to_string(BranchTag b)
{
    switch (b)
    {
        case BranchTag::trivial: return "Trivial";
        case BranchTag::low_infected: return "LowInfected";
        case BranchTag::mid_infected: return "MidInfected";
        case BranchTag::high_infected: return "HighInfected";
    }
    return "?";
}

struct EquilibriumRecord
{
    StateVec state;
    Spectrum eigenvalues;
    Stability stability = Stability::marginal;
    BranchTag branch = BranchTag::trivial;
};

//! Coefficients of the quadratic factor lambda^2 + c1 lambda + c2.
struct CharCoeffs
{
    double c1;
    double c2;
};

//---------------------------------------------------------------------------//
// SPECTRA
//---------------------------------------------------------------------------//
//! Real parts within this band of zero are treated as zero.
inline constexpr double marginal_band = 1e-7;

inline void sort_spectrum(Spectrum& ev)
{
    std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) {
        if (a.real() != b.real())
            return a.real() > b.real();
        return a.imag() > b.imag();
    });
}

inline Stability classify_stability(Spectrum const& ev)
{
    double max_re = -INFINITY, min_re = INFINITY;
    for (auto z : ev)
    {
        max_re = std::max(max_re, z.real());
        min_re = std::min(min_re, z.real());
    }
    if (std::fabs(max_re) <= marginal_band)
        return Stability::marginal;
    if (max_re < 0)
        return Stability::stable;
    if (min_re < -marginal_band)
        return Stability::saddle;
    return Stability::unstable;
}

inline Spectrum numeric_eigenvalues(Mat4 const& jac)
{
    Eigen::EigenSolver<Mat4> solver(jac, /* computeEigenvectors = */ false);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigenvalue iteration did not converge");
    auto const& v = solver.eigenvalues();
    Spectrum ev{v[0], v[1], v[2], v[3]};
    sort_spectrum(ev);
    return ev;
}

/*!
 * Analytic Jacobian of the drift.
 *
 * The killing term is differentiated in the form gamma*T*M_i/(T + c*M_i); at
 * M_i = 0 its partials are taken as (gamma, 0), the limit along T > 0.
 */
inline Mat4 jacobian(StateVec const& x, ModelParams const& p)
{
    detail::require_finite(x, "jacobian");
    double const mu = x.uninfected, mi = x.infected, bac = x.bacteria,
                 t = x.tcells;

    double k_mi = p.gamma;
    double k_t = 0.0;
    if (mi != 0.0)
    {
        double d = t + p.c * mi;
        if (d == 0.0)
        {
            throw DomainError("jacobian: killing term undefined at T + c M_i"
                              " = 0");
        }
        k_mi = p.gamma * t * t / (d * d);
        k_t = p.gamma * p.c * mi * mi / (d * d);
    }
    double const phago = p.eta + p.N3 * p.beta;
    double const sm = p.e_M * t + 1.0;
    double const sb = p.e_B * t + 1.0;

    Mat4 j;
    j(0, 0) = -p.mu_M - p.beta * bac;
    j(0, 1) = 0.0;
    j(0, 2) = -p.beta * mu;
    j(0, 3) = 0.0;

    j(1, 0) = p.beta * bac;
    j(1, 1) = -p.b - k_mi;
    j(1, 2) = p.beta * mu;
    j(1, 3) = -k_t;

    j(2, 0) = -bac * phago;
    j(2, 1) = p.N1 * p.b + p.N2 * k_mi;
    j(2, 2) = p.delta * (1.0 - 2.0 * bac / p.K) - mu * phago;
    j(2, 3) = p.N2 * k_t;

    j(3, 0) = 0.0;
    j(3, 1) = p.c_M * t / sm;
    j(3, 2) = p.c_B * t / sb;
    j(3, 3) = p.c_M * mi / (sm * sm) + p.c_B * bac / (sb * sb) - p.mu_T;
    return j;
}

//---------------------------------------------------------------------------//
// INFECTION-FREE STATE
//---------------------------------------------------------------------------//
namespace detail
{
// eta*M0 - beta*M0*[(N2-N3) gamma + (N1-N3) b]/(b+gamma), M0 = s_M/mu_M
inline double threshold_expr(ModelParams const& p)
{
    double const m0 = p.s_M / p.mu_M;
    double const lysis = p.b + p.gamma;
    return p.eta * m0 - (p.N2 - p.N3) * p.gamma / lysis * p.beta * m0
           - (p.N1 - p.N3) * p.b / lysis * p.beta * m0;
}

// Roots of z^2 + c1 z + c2 ordered by decreasing real part, without
// cancellation in the small root.
inline std::array<Complex, 2> stable_quadratic_roots(double c1, double c2)
{
    double disc = c1 * c1 - 4.0 * c2;
    if (disc >= 0)
    {
        double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
        double r1, r2;
        if (q == 0.0)
        {
            r1 = r2 = 0.0;
        }
        else
        {
            r1 = q;
            r2 = c2 / q;
        }
        if (r1 < r2)
            std::swap(r1, r2);
        return {Complex(r1, 0.0), Complex(r2, 0.0)};
    }
    double re = -0.5 * c1;
    double im = 0.5 * std::sqrt(-disc);
    return {Complex(re, im), Complex(re, -im)};
}
}  // namespace detail

inline CharCoeffs char_coeffs(ModelParams const& p)
{
    double const m0 = p.s_M / p.mu_M;
    double const lysis = p.b + p.gamma;
    double c1 = lysis + m0 * (p.N3 * p.beta + p.eta) - p.delta;
    double c2 = (detail::threshold_expr(p) - p.delta) * lysis;
    return {c1, c2};
}

//! Proliferation rate at which the infection-free state changes stability.
inline double delta_threshold(ModelParams const& p)
{
    return detail::threshold_expr(p);
}

/*!
 * Closed-form spectrum at the infection-free state.
 *
 * Returns (lambda_1, lambda_2, -mu_T, -mu_M) with lambda_1,2 the roots of
 * lambda^2 + c1 lambda + c2 (lambda_1 the larger); the four are not
 * re-sorted.
 */
inline Spectrum eigen_closed_form(ModelParams const& p)
{
    auto cc = char_coeffs(p);
    auto q = detail::stable_quadratic_roots(cc.c1, cc.c2);
    return {q[0], q[1], Complex(-p.mu_T, 0.0), Complex(-p.mu_M, 0.0)};
}

inline EquilibriumRecord trivial_equilibrium(ModelParams const& p)
{
    EquilibriumRecord rec;
    rec.state = {p.s_M / p.mu_M, 0.0, 0.0, p.s_T / p.mu_T};
    rec.eigenvalues = eigen_closed_form(p);
    rec.stability = classify_stability(rec.eigenvalues);
    rec.branch = BranchTag::trivial;
    return rec;
}

enum class Lambda1Approx
{
    //! (b+gamma) * c1(delta)/c1(delta_0) * (delta - delta_0)
    scaled_expansion,
    //! -c2(delta)/c1(delta), first order in c2 of the exact root
    linearized_root,
};

inline double lambda1_approx(ModelParams p, double delta, Lambda1Approx variant)
{
    double const d0 = delta_threshold(p);
    p.delta = delta;
    auto cc = char_coeffs(p);
    if (cc.c1 == 0.0)
        throw SingularityError("lambda1_approx: c1(delta) = 0");
    if (variant == Lambda1Approx::linearized_root)
        return -cc.c2 / cc.c1;

    ModelParams p0 = p;
    p0.delta = d0;
    double c1_0 = char_coeffs(p0).c1;
    if (c1_0 == 0.0)
        throw SingularityError("lambda1_approx: c1(delta_0) = 0");
    return (p.b + p.gamma) * (cc.c1 / c1_0) * (delta - d0);
}

//! Real part of the dominant eigenvalue over a (b, gamma) grid.
inline Eigen::MatrixXd lambda1_contour(ModelParams p,
                                       std::span<double const> b_grid,
                                       std::span<double const> gamma_grid)
{
    Eigen::MatrixXd out(b_grid.size(), gamma_grid.size());
    for (std::size_t i = 0; i < b_grid.size(); ++i)
    {
        for (std::size_t j = 0; j < gamma_grid.size(); ++j)
        {
            p.b = b_grid[i];
            p.gamma = gamma_grid[j];
            out(i, j) = eigen_closed_form(p)[0].real();
        }
    }
    return out;
}

//---------------------------------------------------------------------------//
// INFECTED STATES
//---------------------------------------------------------------------------//
struct BRange
{
    double min = 1e-6;
    double max = 1e8;

    friend bool operator==(BRange const&, BRange const&) = default;
};

//! Steady-state reduction to a single unknown B.
struct ReducedState
{
    StateVec state;
    double residual;  //!< M_i balance at the reduced state
};

//! Real roots of a3 z^3 + a2 z^2 + a1 z + a0 (a3 != 0), trigonometric form.
inline std::vector<double> real_cubic_roots(double a3, double a2, double a1,
                                            double a0)
{
    double const a = a2 / a3, b = a1 / a3, c = a0 / a3;
    double const q = (a * a - 3.0 * b) / 9.0;
    double const r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    double const shift = a / 3.0;
    std::vector<double> roots;
    if (r * r < q * q * q)
    {
        double const th = std::acos(std::clamp(r / std::sqrt(q * q * q), -1.0,
                                               1.0));
        double const m = -2.0 * std::sqrt(q);
        double const two_pi = 6.283185307179586;
        roots = {m * std::cos(th / 3.0) - shift,
                 m * std::cos((th + two_pi) / 3.0) - shift,
                 m * std::cos((th - two_pi) / 3.0) - shift};
    }
    else
    {
        double big = -std::copysign(
            std::cbrt(std::fabs(r) + std::sqrt(r * r - q * q * q)), r);
        double small = (big == 0.0) ? 0.0 : q / big;
        roots = {big + small - shift};
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

/*!
 * Reduce the steady-state equations to a function of B.
 *
 * M_u and M_i follow from the M_u and B balances, T is the positive root of
 * the cubic obtained by clearing denominators in the T balance, and the
 * residual is the remaining M_i balance. Returns nothing where M_i <= 0 or
 * no admissible T exists.
 */
inline std::optional<ReducedState> reduce_steady_state(double bac,
                                                       ModelParams const& p)
{
    if (p.N1 == p.N2)
        throw DomainError("steady-state reduction needs N1 != N2");

    double const mu = p.s_M / (p.mu_M + p.beta * bac);
    double const mi = bac / (p.b * (p.N1 - p.N2))
                      * (p.delta * bac / p.K - p.delta
                         - mu * ((p.N2 - p.N3) * p.beta - p.eta));
    if (!(mi > 0) || !std::isfinite(mi))
        return std::nullopt;

    double const a3 = -p.e_B * p.e_M * p.mu_T;
    double const a2 = (p.c_M * mi + p.e_M * p.s_T - p.mu_T) * p.e_B
                      + p.e_M * (p.c_B * bac - p.mu_T);
    double const a1 = p.c_B * bac + p.c_M * mi + (p.e_B + p.e_M) * p.s_T
                      - p.mu_T;
    double const a0 = p.s_T;

    // T balance itself; concave in T with value s_T at 0, so exactly one
    // positive root. The cubic gives the starting point, Newton polishes it.
    auto balance = [&](double t) {
        double sm = p.e_M * t + 1.0, sb = p.e_B * t + 1.0;
        double f = p.s_T + p.c_M * mi * t / sm + p.c_B * bac * t / sb
                   - p.mu_T * t;
        double df = p.c_M * mi / (sm * sm) + p.c_B * bac / (sb * sb) - p.mu_T;
        return std::pair{f, df};
    };

    double t = -1.0;
    for (double z : real_cubic_roots(a3, a2, a1, a0))
    {
        if (z > 0)
            t = std::max(t, z);
    }
    if (!(t > 0))
        return std::nullopt;
    for (int it = 0; it < 50; ++it)
    {
        auto [f, df] = balance(t);
        if (df >= 0)
            break;
        double step = f / df;
        double next = t - step;
        if (!(next > 0))
            next = 0.5 * t;
        bool done = std::fabs(next - t) <= 1e-15 * t;
        t = next;
        if (done)
            break;
    }

    StateVec x{mu, mi, bac, t};
    double const kill = saturating_kill_rate(x, p);
    double const res = p.beta * mu * bac - p.b * mi - kill;
    return ReducedState{x, res};
}

struct EquilibriumScanLog
{
    std::vector<std::string> messages;
};

namespace detail
{
inline std::vector<double>
b_scan_grid(BRange range, std::size_t grid_points, double K)
{
    std::vector<double> g;
    g.reserve(2 * grid_points);
    double const l0 = std::log(range.min), l1 = std::log(range.max);
    for (std::size_t i = 0; i < grid_points; ++i)
    {
        double w = static_cast<double>(i) / (grid_points - 1);
        g.push_back(std::exp(l0 + w * (l1 - l0)));
    }
    g.back() = range.max;
    // States close to the carrying capacity sit between log-spaced points;
    // resolve K - B on a log scale as well.
    double const half = 0.5 * K;
    if (range.max > half)
    {
        double const d_hi = std::log(K - std::max(half, range.min));
        double const d_lo = std::log(K * 1e-13);
        for (std::size_t i = 0; i < grid_points; ++i)
        {
            double w = static_cast<double>(i) / (grid_points - 1);
            double bval = K - std::exp(d_hi + w * (d_lo - d_hi));
            if (bval >= range.min && bval <= range.max)
                g.push_back(bval);
        }
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

struct Sample
{
    double b;
    double r;
};

// Polish a sign-changing bracket by Illinois false position with bisection
// safeguard; returns the endpoint with smaller |r|.
inline std::optional<double>
polish_root(std::function<std::optional<double>(double)> const& resid,
            Sample lo,
            Sample hi)
{
    int side = 0;
    for (int it = 0; it < 300; ++it)
    {
        if (lo.r == 0.0)
            return lo.b;
        if (hi.r == 0.0)
            return hi.b;
        double width = hi.b - lo.b;
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * hi.b)
            break;
        double m = (lo.b * hi.r - hi.b * lo.r) / (hi.r - lo.r);
        // Fall back to bisection when false position stalls near an end
        if (!(m > lo.b + 0.01 * width && m < hi.b - 0.01 * width)
            || it % 8 == 7)
        {
            m = 0.5 * (lo.b + hi.b);
        }
        auto rm = resid(m);
        if (!rm)
            return std::nullopt;
        if ((*rm < 0) == (lo.r < 0))
        {
            lo = {m, *rm};
            if (side == -1)
                hi.r *= 0.5;
            side = -1;
        }
        else
        {
            hi = {m, *rm};
            if (side == 1)
                lo.r *= 0.5;
            side = 1;
        }
    }
    // The halved Illinois weights are not true residuals; re-evaluate.
    auto rl = resid(lo.b), rh = resid(hi.b);
    if (!rl || !rh)
        return std::nullopt;
    return std::fabs(*rl) <= std::fabs(*rh) ? lo.b : hi.b;
}

// Minimize sign*r over [a, c] (log scale) by golden section.
inline std::optional<Sample>
golden_min(std::function<std::optional<double>(double)> const& resid,
           double a,
           double c,
           double sign)
{
    double la = std::log(a), lc = std::log(c);
    double const g = 0.3819660112501051;
    double lb = la + g * (lc - la), ld = lc - g * (lc - la);
    auto fb = resid(std::exp(lb)), fd = resid(std::exp(ld));
    if (!fb || !fd)
        return std::nullopt;
    for (int it = 0; it < 80; ++it)
    {
        if (sign * *fb < 0 || sign * *fd < 0)
            break;
        if (sign * *fb < sign * *fd)
        {
            lc = ld;
            ld = lb;
            fd = fb;
            lb = la + g * (lc - la);
            fb = resid(std::exp(lb));
        }
        else
        {
            la = lb;
            lb = ld;
            fb = fd;
            ld = lc - g * (lc - la);
            fd = resid(std::exp(ld));
        }
        if (!fb || !fd)
            return std::nullopt;
    }
    if (sign * *fb <= sign * *fd)
        return Sample{std::exp(lb), *fb};
    return Sample{std::exp(ld), *fd};
}

inline BranchTag tag_for_bacteria(double bac)
{
    if (bac <= 1e3)
        return BranchTag::low_infected;
    if (bac >= 1e6)
        return BranchTag::high_infected;
    return BranchTag::mid_infected;
}
}  // namespace detail

inline constexpr double equilibrium_residual_tol = 1e-8;

/*!
 * All equilibria with B > 0 in the given range.
 *
 * The reduced residual is sampled on a log grid in B (refined in K - B near
 * the carrying capacity). Sign changes are isolated by recursive subdivision
 * and polished; grid-level local minima of |residual| that do not change
 * sign are probed for a hidden close pair of roots, which is how pairs near
 * a fold are caught. Each root is verified against the full drift.
 */
inline std::vector<EquilibriumRecord>
infected_equilibria(ModelParams const& p,
                    BRange range = {},
                    std::size_t grid_points = 2000,
                    EquilibriumScanLog* log = nullptr)
{
    if (!(range.min > 0) || !(range.min < range.max) || range.max > p.K)
        throw DomainError("infected_equilibria: need 0 < B_min < B_max <= K");
    if (grid_points < 100)
        throw DomainError("infected_equilibria: grid_points must be >= 100");

    auto note = [&](std::string msg) {
        if (log)
            log->messages.push_back(std::move(msg));
    };
    std::function<std::optional<double>(double)> resid
        = [&](double bac) -> std::optional<double> {
        auto red = reduce_steady_state(bac, p);
        if (!red)
            return std::nullopt;
        return red->residual;
    };

    auto const grid = detail::b_scan_grid(range, grid_points, p.K);
    std::vector<std::optional<double>> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        vals[i] = resid(grid[i]);

    std::vector<double> roots;

    // Split a sign-changing cell until each piece holds one change
    std::function<void(detail::Sample, detail::Sample, int)> isolate;
    isolate = [&](detail::Sample lo, detail::Sample hi, int depth) {
        constexpr int parts = 4;
        std::array<detail::Sample, parts + 1> s;
        s[0] = lo;
        s[parts] = hi;
        for (int k = 1; k < parts; ++k)
        {
            double b = std::exp(std::log(lo.b)
                                + k * (std::log(hi.b) - std::log(lo.b)) / parts);
            auto r = resid(b);
            if (!r)
            {
                note("bracket [" + std::to_string(lo.b) + ", "
                     + std::to_string(hi.b)
                     + "] discarded: reduction inadmissible inside");
                return;
            }
            s[k] = {b, *r};
        }
        std::vector<int> changes;
        for (int k = 0; k < parts; ++k)
        {
            if ((s[k].r < 0) != (s[k + 1].r < 0) || s[k].r == 0.0)
                changes.push_back(k);
        }
        if (changes.size() > 1 && depth < 20)
        {
            for (int k : changes)
                isolate(s[k], s[k + 1], depth + 1);
            return;
        }
        if (changes.empty())
            return;
        auto root = detail::polish_root(resid, s[changes[0]],
                                        s[changes[0] + 1]);
        if (root)
            roots.push_back(*root);
        else
            note("bracket near B=" + std::to_string(lo.b)
                 + " discarded: reduction inadmissible during polish");
    };

    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    {
        if (!vals[i] || !vals[i + 1])
            continue;
        detail::Sample lo{grid[i], *vals[i]}, hi{grid[i + 1], *vals[i + 1]};
        if (lo.r == 0.0)
        {
            roots.push_back(lo.b);
            continue;
        }
        if ((lo.r < 0) != (hi.r < 0) && hi.r != 0.0)
            isolate(lo, hi, 0);
    }

    // Same-sign local minima of |r|: a close root pair may hide there
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
    {
        if (!vals[i - 1] || !vals[i] || !vals[i + 1])
            continue;
        double a = *vals[i - 1], m = *vals[i], c = *vals[i + 1];
        bool same = (a < 0) == (m < 0) && (m < 0) == (c < 0) && m != 0.0;
        if (!same || std::fabs(m) > std::fabs(a) || std::fabs(m) > std::fabs(c))
            continue;
        double sign = m > 0 ? 1.0 : -1.0;
        auto dip = detail::golden_min(resid, grid[i - 1], grid[i + 1], sign);
        if (!dip || sign * dip->r >= 0)
            continue;
        auto r1 = detail::polish_root(resid, {grid[i - 1], a}, *dip);
        auto r2 = detail::polish_root(resid, *dip, {grid[i + 1], c});
        if (r1)
            roots.push_back(*r1);
        if (r2)
            roots.push_back(*r2);
    }

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double x, double y) {
                                return std::fabs(x - y) <= 1e-12 * y;
                            }),
                roots.end());

    std::vector<EquilibriumRecord> out;
    for (double bac : roots)
    {
        auto red = reduce_steady_state(bac, p);
        if (!red)
            continue;
        double rel = relative_drift_norm(red->state, p);
        if (!(rel <= equilibrium_residual_tol))
        {
            note("root at B=" + std::to_string(bac)
                 + " rejected: relative drift " + std::to_string(rel));
            continue;
        }
        EquilibriumRecord rec;
        rec.state = red->state;
        rec.eigenvalues = numeric_eigenvalues(jacobian(red->state, p));
        rec.stability = classify_stability(rec.eigenvalues);
        rec.branch = detail::tag_for_bacteria(bac);
        out.push_back(rec);
    }
    return out;
}

//! Trivial state followed by every infected state, in increasing B.
inline std::vector<EquilibriumRecord>
all_equilibria(ModelParams const& p,
               BRange range = {},
               std::size_t grid_points = 2000,
               EquilibriumScanLog* log = nullptr)
{
    std::vector<EquilibriumRecord> out{trivial_equilibrium(p)};
    auto inf = infected_equilibria(p, range, grid_points, log);
    out.insert(out.end(), inf.begin(), inf.end());
    return out;
}

inline std::size_t count_stable(std::span<EquilibriumRecord const> eqs)
{
    return static_cast<std::size_t>(
        std::count_if(eqs.begin(), eqs.end(), [](auto const& e) {
            return e.stability == Stability::stable;
        }));
}

}  // namespace tbdyn
