//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/model.hpp
//! In-host TB model: state, parameters, drift, demographic event table,
//! covariance and rectangular diffusion factor.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "errors.hpp"

namespace tbdyn
{
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

//---------------------------------------------------------------------------//
/*!
 * Cell and pathogen concentrations (per ml).
 *
 * Index order is (M_u, M_i, B, T) everywhere a state is flattened.
 */
struct StateVec
{
    double uninfected = 0.0;  //!< M_u, uninfected macrophages
    double infected = 0.0;  //!< M_i, chronically infected macrophages
    double bacteria = 0.0;  //!< B, extracellular Mtb
    double tcells = 0.0;  //!< T, CD4+ T cells

    static constexpr std::size_t size() { return 4; }

    double& operator[](std::size_t i)
    {
        switch (i)
        {
            case 0: return uninfected;
            case 1: return infected;
            case 2: return bacteria;
            default: return tcells;
        }
    }
    double operator[](std::size_t i) const
    {
        return const_cast<StateVec&>(*this)[i];
    }

    bool finite() const
    {
        return std::isfinite(uninfected) && std::isfinite(infected)
               && std::isfinite(bacteria) && std::isfinite(tcells);
    }
    bool nonnegative() const
    {
        return uninfected >= 0 && infected >= 0 && bacteria >= 0
               && tcells >= 0;
    }
    bool valid() const { return finite() && nonnegative(); }

    Vec4 vec() const { return {uninfected, infected, bacteria, tcells}; }
    static StateVec from(Vec4 const& v) { return {v[0], v[1], v[2], v[3]}; }

    //! Clamp every component at zero (the exact flow keeps the orthant).
    StateVec clamped() const
    {
        return {std::fmax(uninfected, 0.0),
                std::fmax(infected, 0.0),
                std::fmax(bacteria, 0.0),
                std::fmax(tcells, 0.0)};
    }

    friend bool operator==(StateVec const&, StateVec const&) = default;
};

inline constexpr std::array<std::string_view, 4> state_names
    = {"M_u", "M_i", "B", "T"};

//---------------------------------------------------------------------------//
/*!
 * The eighteen model parameters.
 *
 * Default member values are the baseline parameter table. Field names follow
 * the model symbols so configuration keys and code read the same.
 */
struct ModelParams
{
    double s_M = 5000.0;  //!< M_u recruitment (1/ml day)
    double s_T = 6.6;  //!< T recruitment (1/ml day)
    double mu_M = 0.01;  //!< M_u death (1/day)
    double b = 0.11;  //!< M_i loss (1/day)
    double mu_T = 0.33;  //!< T death (1/day)
    double beta = 2e-7;  //!< infection rate by B
    double eta = 1.25e-8;  //!< bacteria killing by M_u
    double gamma = 1.5;  //!< cell-mediated immunity (1/day)
    double delta = 5e-4;  //!< B proliferation (1/day)
    double c_M = 1e-3;  //!< T expansion induced by M_i (1/day)
    double c_B = 5e-3;  //!< T expansion induced by B (1/day)
    double e_M = 1e-4;  //!< saturation of M_i-driven expansion
    double e_B = 1e-4;  //!< saturation of B-driven expansion
    double c = 3.0;  //!< half-saturation ratio T/M_i for lysis
    double K = 1e8;  //!< carrying capacity of B (1/ml)
    double N1 = 50.0;  //!< bacteria released per M_i on loss
    double N2 = 20.0;  //!< bacteria released per M_i on T-cell killing
    double N3 = 25.0;  //!< bacteria engulfed per infection event

    static constexpr std::array<std::string_view, 18> names
        = {"s_M", "s_T",   "mu_M", "b",   "mu_T", "beta",
           "eta", "gamma", "delta", "c_M", "c_B",  "e_M",
           "e_B", "c",     "K",     "N1",  "N2",   "N3"};

    //! Baseline table values.
    static ModelParams table1() { return {}; }

    /*!
     * Baseline with eta = 1.25e-9.
     *
     * Under this set delta_BP = 0.29566, LP_l = 0.26213, LP_m = 0.29445 and
     * LP_h = 0.00059.
     */
    static ModelParams calibrated()
    {
        ModelParams p;
        p.eta = 1.25e-9;
        return p;
    }

    static bool is_name(std::string_view name)
    {
        for (auto n : names)
        {
            if (n == name)
                return true;
        }
        return false;
    }

    double& at(std::string_view name)
    {
        // Keep in sync with `names`.
        double* fields[] = {&s_M, &s_T, &mu_M, &b,   &mu_T, &beta,
                            &eta, &gamma, &delta, &c_M, &c_B, &e_M,
                            &e_B, &c,   &K,    &N1,  &N2,  &N3};
        for (std::size_t i = 0; i < names.size(); ++i)
        {
            if (names[i] == name)
                return *fields[i];
        }
        throw DomainError("unknown model parameter '" + std::string(name)
                          + "'");
    }
    double at(std::string_view name) const
    {
        return const_cast<ModelParams&>(*this).at(name);
    }

    //! Throws DomainError naming the first offending field.
    void validate() const
    {
        for (auto n : names)
        {
            double v = at(n);
            if (!std::isfinite(v) || !(v > 0))
            {
                throw DomainError("parameter '" + std::string(n)
                                  + "' must be finite and > 0");
            }
        }
        if (K < 1)
            throw DomainError("parameter 'K' must be >= 1");
    }

    friend bool operator==(ModelParams const&, ModelParams const&) = default;
};

//---------------------------------------------------------------------------//
// RATE TERMS
//---------------------------------------------------------------------------//
/*!
 * T-cell mediated killing of infected macrophages.
 *
 * Evaluates gamma*M_i*T/(T + c*M_i), the ratio form
 * gamma*M_i*(T/M_i)/(T/M_i + c) with the removable singularity at M_i = 0
 * filled in.
 */
inline double saturating_kill_rate(StateVec const& x, ModelParams const& p)
{
    double denom = x.tcells + p.c * x.infected;
    if (denom == 0.0)
        return 0.0;
    return p.gamma * x.infected * x.tcells / denom;
}

namespace detail
{
inline void require_finite(StateVec const& x, char const* where)
{
    if (!x.finite())
    {
        throw DomainError(std::string(where) + ": non-finite state");
    }
}
}  // namespace detail

//! Right-hand side of the deterministic model.
inline Vec4 drift(StateVec const& x, ModelParams const& p)
{
    detail::require_finite(x, "drift");
    double const mu = x.uninfected, mi = x.infected, bac = x.bacteria,
                 t = x.tcells;
    double const kill = saturating_kill_rate(x, p);
    double const infection = p.beta * mu * bac;
    Vec4 f;
    f[0] = p.s_M - p.mu_M * mu - infection;
    f[1] = infection - p.b * mi - kill;
    f[2] = p.delta * bac * (1.0 - bac / p.K) + p.N1 * p.b * mi + p.N2 * kill
           - mu * bac * (p.eta + p.N3 * p.beta);
    f[3] = p.s_T + p.c_M * mi * t / (p.e_M * t + 1.0)
           + p.c_B * bac * t / (p.e_B * t + 1.0) - p.mu_T * t;
    return f;
}

/*!
 * Per-component sum of absolute values of the drift terms.
 *
 * Used as the natural scale when judging whether a drift residual is zero.
 */
inline Vec4 drift_magnitude(StateVec const& x, ModelParams const& p)
{
    double const mu = x.uninfected, mi = x.infected, bac = x.bacteria,
                 t = x.tcells;
    double const kill = std::fabs(saturating_kill_rate(x, p));
    double const infection = std::fabs(p.beta * mu * bac);
    Vec4 m;
    m[0] = p.s_M + std::fabs(p.mu_M * mu) + infection;
    m[1] = infection + std::fabs(p.b * mi) + kill;
    m[2] = std::fabs(p.delta * bac) + std::fabs(p.delta * bac * bac / p.K)
           + std::fabs(p.N1 * p.b * mi) + p.N2 * kill
           + std::fabs(mu * bac * (p.eta + p.N3 * p.beta));
    m[3] = p.s_T + std::fabs(p.c_M * mi * t / (p.e_M * t + 1.0))
           + std::fabs(p.c_B * bac * t / (p.e_B * t + 1.0))
           + std::fabs(p.mu_T * t);
    return m;
}

//! max_i |f_i| / (sum of |terms| of f_i).
inline double relative_drift_norm(StateVec const& x, ModelParams const& p)
{
    Vec4 f = drift(x, p);
    Vec4 m = drift_magnitude(x, p);
    double r = 0.0;
    for (int i = 0; i < 4; ++i)
    {
        if (m[i] > 0)
            r = std::fmax(r, std::fabs(f[i]) / m[i]);
    }
    return r;
}

//---------------------------------------------------------------------------//
// DEMOGRAPHIC EVENTS
//---------------------------------------------------------------------------//
inline constexpr std::size_t num_events = 11;

enum class RateId
{
    uninfected_recruitment,
    uninfected_death,
    infection,
    infected_loss,
    infected_killed,
    proliferation,
    phagocytosis,
    tcell_recruitment,
    tcell_activation_infected,
    tcell_activation_bacteria,
    tcell_death,
};

struct Event
{
    int index;  //!< 1-based event number
    Vec4 delta_state;
    RateId rate;
};

using EventTable = std::array<Event, num_events>;
using EventRates = std::array<double, num_events>;

//! The eleven state changes; N1 and N2 are taken from the parameters.
inline EventTable event_table(ModelParams const& p)
{
    return {{
        {1, Vec4(1, 0, 0, 0), RateId::uninfected_recruitment},
        {2, Vec4(-1, 0, 0, 0), RateId::uninfected_death},
        {3, Vec4(-1, 1, 0, 0), RateId::infection},
        {4, Vec4(0, -1, p.N1, 0), RateId::infected_loss},
        {5, Vec4(0, -1, p.N2, 0), RateId::infected_killed},
        {6, Vec4(0, 0, 1, 0), RateId::proliferation},
        {7, Vec4(0, 0, -1, 0), RateId::phagocytosis},
        {8, Vec4(0, 0, 0, 1), RateId::tcell_recruitment},
        {9, Vec4(0, 0, 0, 1), RateId::tcell_activation_infected},
        {10, Vec4(0, 0, 0, 1), RateId::tcell_activation_bacteria},
        {11, Vec4(0, 0, 0, -1), RateId::tcell_death},
    }};
}

/*!
 * Event rates p_1..p_11.
 *
 * Proliferation is clamped at zero when B > K; the drift keeps the signed
 * logistic term.
 */
inline EventRates event_rates(StateVec const& x, ModelParams const& p)
{
    detail::require_finite(x, "event_rates");
    double const mu = x.uninfected, mi = x.infected, bac = x.bacteria,
                 t = x.tcells;
    EventRates r;
    r[0] = p.s_M;
    r[1] = p.mu_M * mu;
    r[2] = p.beta * mu * bac;
    r[3] = p.b * mi;
    r[4] = saturating_kill_rate(x, p);
    r[5] = std::fmax(0.0, p.delta * bac * (1.0 - bac / p.K));
    r[6] = mu * bac * (p.eta + p.N3 * p.beta);
    r[7] = p.s_T;
    r[8] = p.c_M * mi * t / (p.e_M * t + 1.0);
    r[9] = p.c_B * bac * t / (p.e_B * t + 1.0);
    r[10] = p.mu_T * t;
    return r;
}

using DiffusionMatrix = Eigen::Matrix<double, 4, 11>;

/*!
 * Rectangular diffusion factor G with G*G^T equal to the covariance.
 *
 * Row i is a state variable, column k an event; the 14 nonzero entries are
 * +-sqrt(p_k) scaled by the event's state change.
 */
inline DiffusionMatrix diffusion_matrix(StateVec const& x, ModelParams const& p)
{
    EventRates r = event_rates(x, p);
    std::array<double, num_events> s;
    for (std::size_t k = 0; k < num_events; ++k)
        s[k] = std::sqrt(r[k]);

    DiffusionMatrix g = DiffusionMatrix::Zero();
    g(0, 0) = s[0];
    g(0, 1) = -s[1];
    g(0, 2) = -s[2];
    g(1, 2) = s[2];
    g(1, 3) = -s[3];
    g(1, 4) = -s[4];
    g(2, 3) = p.N1 * s[3];
    g(2, 4) = p.N2 * s[4];
    g(2, 5) = s[5];
    g(2, 6) = -s[6];
    g(3, 7) = s[7];
    g(3, 8) = s[8];
    g(3, 9) = s[9];
    g(3, 10) = -s[10];
    return g;
}

//! Covariance Sigma assembled entry by entry from the event rates.
inline Mat4 covariance_matrix(StateVec const& x, ModelParams const& p)
{
    EventRates r = event_rates(x, p);
    Mat4 s = Mat4::Zero();
    s(0, 0) = r[0] + r[1] + r[2];
    s(0, 1) = s(1, 0) = -r[2];
    s(1, 1) = r[2] + r[3] + r[4];
    s(1, 2) = s(2, 1) = -p.N1 * r[3] - p.N2 * r[4];
    s(2, 2) = p.N1 * p.N1 * r[3] + p.N2 * p.N2 * r[4] + r[5] + r[6];
    s(3, 3) = r[7] + r[8] + r[9] + r[10];
    return s;
}

}  // namespace tbdyn
