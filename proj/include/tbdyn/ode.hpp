//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/ode.hpp
//! Adaptive Dormand-Prince 5(4) integration of the deterministic model and
//! outcome classification.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace tbdyn
{
//---------------------------------------------------------------------------//
struct StepControl
{
    double rel_tol = 1e-8;
    double abs_tol = 1e-8;
    double max_step = 1.0;  //!< days
    std::size_t max_steps = 10'000'000;

    friend bool operator==(StepControl const&, StepControl const&) = default;
};

//---------------------------------------------------------------------------//
/*!
 * Accepted integration steps.
 *
 * Values between stored steps are linearly interpolated.
 */
struct Trajectory
{
    std::vector<double> times;
    std::vector<StateVec> states;
    ModelParams params;

    std::size_t size() const { return times.size(); }
    double t_end() const { return times.empty() ? 0.0 : times.back(); }
    StateVec const& back() const { return states.back(); }

    //! Linear interpolation, clamped to the stored time span.
    StateVec at(double t) const
    {
        if (times.empty())
            throw DomainError("empty trajectory");
        if (t <= times.front())
            return states.front();
        if (t >= times.back())
            return states.back();
        auto hi = std::upper_bound(times.begin(), times.end(), t);
        auto i = static_cast<std::size_t>(hi - times.begin());
        double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
        Vec4 v = (1 - w) * states[i - 1].vec() + w * states[i].vec();
        return StateVec::from(v);
    }
};

//! Step-size underflow or step budget exhausted; carries what was computed.
class IntegrationFailure : public NumericError
{
  public:
    IntegrationFailure(std::string const& what, Trajectory partial)
        : NumericError(what), partial_(std::move(partial))
    {
    }
    Trajectory const& partial() const { return partial_; }

  private:
    Trajectory partial_;
};

//---------------------------------------------------------------------------//
namespace detail
{
// Dormand-Prince 5(4) tableau
struct DoPri
{
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15,
                            a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    // b - bhat
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// The RK stages may leave the orthant slightly; only accepted states are
// clamped.
inline Vec4 rhs(Vec4 const& y, ModelParams const& p)
{
    return drift(StateVec::from(y), p);
}
}  // namespace detail

/*!
 * Integrate the deterministic model from t = 0 to t_end.
 *
 * Every accepted step is stored. Components pushed below zero by the
 * discretization are clamped to zero after acceptance.
 */
inline Trajectory integrate(StateVec const& init,
                            ModelParams const& params,
                            double t_end,
                            StepControl const& ctl = {})
{
    using T = detail::DoPri;
    if (!(t_end > 0) || !std::isfinite(t_end))
        throw DomainError("integrate: t_end must be > 0");
    if (!(ctl.rel_tol > 0) || !(ctl.abs_tol > 0) || !(ctl.max_step > 0))
        throw DomainError("integrate: tolerances must be > 0");
    if (!init.valid())
        throw DomainError("integrate: initial state must be finite and >= 0");

    Trajectory traj;
    traj.params = params;
    traj.times.push_back(0.0);
    traj.states.push_back(init);

    auto err_scale = [&](Vec4 const& a, Vec4 const& b) {
        return (ctl.abs_tol
                + ctl.rel_tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array())
            .matrix();
    };

    Vec4 y = init.vec();
    Vec4 k1 = detail::rhs(y, params);
    double t = 0.0;

    // Initial step from the derivative scale
    double h;
    {
        Vec4 sc = err_scale(y, y);
        double d0 = (y.array() / sc.array()).matrix().norm() / 2.0;
        double d1 = (k1.array() / sc.array()).matrix().norm() / 2.0;
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        if (!std::isfinite(h))
            h = 1e-6;
        h = std::min({h, ctl.max_step, t_end});
    }

    std::size_t nsteps = 0;
    while (t < t_end)
    {
        if (++nsteps > ctl.max_steps)
        {
            throw IntegrationFailure("integrate: step budget exhausted at t="
                                         + std::to_string(t),
                                     std::move(traj));
        }
        bool last = false;
        if (t + h >= t_end)
        {
            h = t_end - t;
            last = true;
        }
        if (h < 1e-13 * std::max(1.0, t))
        {
            throw IntegrationFailure("integrate: step size underflow at t="
                                         + std::to_string(t),
                                     std::move(traj));
        }

        Vec4 k2 = detail::rhs(y + h * T::a21 * k1, params);
        Vec4 k3 = detail::rhs(y + h * (T::a31 * k1 + T::a32 * k2), params);
        Vec4 k4 = detail::rhs(
            y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3), params);
        Vec4 k5 = detail::rhs(
            y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4),
            params);
        Vec4 k6 = detail::rhs(y
                                  + h
                                        * (T::a61 * k1 + T::a62 * k2
                                           + T::a63 * k3 + T::a64 * k4
                                           + T::a65 * k5),
                              params);
        Vec4 y_new = y
                     + h
                           * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4
                              + T::b5 * k5 + T::b6 * k6);
        Vec4 k7 = detail::rhs(y_new, params);
        Vec4 err = h
                   * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5
                      + T::e6 * k6 + T::e7 * k7);

        Vec4 sc = err_scale(y, y_new);
        double en = std::sqrt((err.array() / sc.array()).square().mean());
        if (!std::isfinite(en))
            en = 1e10;

        if (en <= 1.0)
        {
            t = last ? t_end : t + h;
            StateVec accepted = StateVec::from(y_new);
            StateVec clamped = accepted.clamped();
            y = clamped.vec();
            k1 = (clamped == accepted) ? k7 : detail::rhs(y, params);
            traj.times.push_back(t);
            traj.states.push_back(clamped);
        }
        double fac = (en == 0.0) ? 5.0 : 0.9 * std::pow(en, -0.2);
        fac = std::clamp(fac, en <= 1.0 ? 0.2 : 0.1, 5.0);
        h = std::min(h * fac, ctl.max_step);
    }
    return traj;
}

//---------------------------------------------------------------------------//
// OUTCOMES
//---------------------------------------------------------------------------//
enum class Outcome
{
    clearance,
    ltbi,
    active_disease,
    undetermined,
};

inline std::string_view to_string(Outcome o)
{
    switch (o)
    {
        case Outcome::clearance: return "Clearance";
        case Outcome::ltbi: return "LTBI";
        case Outcome::active_disease: return "ActiveDisease";
        case Outcome::undetermined: return "Undetermined";
    }
    return "Undetermined";
}

struct OutcomeLabel
{
    Outcome label = Outcome::undetermined;
    StateVec terminal_state;
};

struct OutcomeThresholds
{
    double clearance_eps = 1e-2;  //!< cells/ml
    double active_floor = 1e6;  //!< bacteria/ml
    double settle_window = 100.0;  //!< days
};

/*!
 * Label the end of a trajectory.
 *
 * Over the last `settle_window` days: clearance if both B and M_i stay below
 * `clearance_eps`; active disease if B stays above `active_floor`; LTBI if B
 * stays strictly between the two and moves less than 1e-3 relative.
 */
inline OutcomeLabel classify_outcome(Trajectory const& traj,
                                     OutcomeThresholds const& th = {})
{
    if (traj.size() < 2 || traj.t_end() - traj.times.front() < th.settle_window)
        throw DomainError("classify_outcome: trajectory shorter than window");

    double const t0 = traj.t_end() - th.settle_window;
    auto first = std::lower_bound(traj.times.begin(), traj.times.end(), t0);
    auto i0 = static_cast<std::size_t>(first - traj.times.begin());

    double max_b = 0, max_mi = 0, min_b = INFINITY;
    for (std::size_t i = i0; i < traj.size(); ++i)
    {
        auto const& s = traj.states[i];
        max_b = std::max(max_b, s.bacteria);
        max_mi = std::max(max_mi, s.infected);
        min_b = std::min(min_b, s.bacteria);
    }

    OutcomeLabel out;
    out.terminal_state = traj.back();
    if (std::max(max_b, max_mi) < th.clearance_eps)
    {
        out.label = Outcome::clearance;
    }
    else if (min_b > th.active_floor)
    {
        out.label = Outcome::active_disease;
    }
    else if (min_b > th.clearance_eps && max_b < th.active_floor)
    {
        double b_start = traj.at(t0).bacteria;
        double b_end = traj.back().bacteria;
        double rel = std::fabs(b_end - b_start) / b_end;
        out.label = rel < 1e-3 ? Outcome::ltbi : Outcome::undetermined;
    }
    return out;
}

//! Average growth rate of log(x_var) between t0 and t1 (1/day).
inline double log_slope(Trajectory const& traj,
                        std::size_t var,
                        double t0,
                        double t1)
{
    double a = traj.at(t0)[var];
    double b = traj.at(t1)[var];
    if (!(a > 0) || !(b > 0) || !(t1 > t0))
        throw DomainError("log_slope: needs positive values and t1 > t0");
    return (std::log(b) - std::log(a)) / (t1 - t0);
}

}  // namespace tbdyn
