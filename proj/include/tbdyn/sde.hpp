//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/sde.hpp
//! Euler-Maruyama paths for demographic noise, optionally with mean-reverting
//! therapy parameters.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace tbdyn
{
//---------------------------------------------------------------------------//
// PARAMETER PROCESSES
//---------------------------------------------------------------------------//
//! Parameters that may follow a mean-reverting process, in noise order.
enum class EnvTarget
{
    delta,
    b,
    gamma,
    eta,
};

inline constexpr std::array<std::string_view, 4> env_target_names
    = {"delta", "b", "gamma", "eta"};

//! dC = alpha (C_s - C) dt + sigma C dW
struct OuProcess
{
    double alpha = 0.5;
    double sigma = 0.5;
    double C_s = 0.0;
    double C_0 = 0.0;

    friend bool operator==(OuProcess const&, OuProcess const&) = default;
};

/*!
 * Per-target processes; a disengaged slot keeps that parameter at its base
 * value.
 */
struct EnvProcessParams
{
    std::array<std::optional<OuProcess>, 4> process;

    std::optional<OuProcess>& operator[](EnvTarget t)
    {
        return process[static_cast<std::size_t>(t)];
    }
    std::optional<OuProcess> const& operator[](EnvTarget t) const
    {
        return process[static_cast<std::size_t>(t)];
    }

    //! alpha, sigma, C_s, C_0 > 0; optionally alpha > sigma^2 / 2.
    void validate(bool require_finite_variance = false) const
    {
        for (std::size_t i = 0; i < 4; ++i)
        {
            auto const& pr = process[i];
            if (!pr)
                continue;
            std::string name(env_target_names[i]);
            if (!(pr->alpha > 0) || !(pr->C_s > 0) || !(pr->C_0 > 0)
                || !(pr->sigma >= 0) || !std::isfinite(pr->alpha)
                || !std::isfinite(pr->sigma) || !std::isfinite(pr->C_s)
                || !std::isfinite(pr->C_0))
            {
                throw DomainError("env." + name
                                  + ": alpha, C_s, C_0 must be > 0 and sigma"
                                    " >= 0");
            }
            if (require_finite_variance
                && !(pr->alpha > 0.5 * pr->sigma * pr->sigma))
            {
                throw DomainError("env." + name
                                  + ": alpha must exceed sigma^2/2");
            }
        }
    }

    friend bool operator==(EnvProcessParams const&, EnvProcessParams const&)
        = default;
};

//! (delta, b, gamma, eta)
using LiveParams = std::array<double, 4>;

inline LiveParams live_from(ModelParams const& p)
{
    return {p.delta, p.b, p.gamma, p.eta};
}

inline void apply_live(LiveParams const& live, ModelParams& p)
{
    p.delta = live[0];
    p.b = live[1];
    p.gamma = live[2];
    p.eta = live[3];
}

struct OuMoments
{
    double mean;
    double variance;  //!< +inf when alpha <= sigma^2 / 2
};

inline OuMoments ou_asymptotic_moments(OuProcess const& pr)
{
    double s2 = pr.sigma * pr.sigma;
    double denom = 2.0 * pr.alpha - s2;
    if (!(denom > 0))
        return {pr.C_s, std::numeric_limits<double>::infinity()};
    return {pr.C_s, pr.C_s * pr.C_s * s2 / denom};
}

//! Moments for every engaged target.
inline std::array<std::optional<OuMoments>, 4>
ou_asymptotic_moments(EnvProcessParams const& env)
{
    std::array<std::optional<OuMoments>, 4> out;
    for (std::size_t i = 0; i < 4; ++i)
    {
        if (env.process[i])
            out[i] = ou_asymptotic_moments(*env.process[i]);
    }
    return out;
}

//! One EM step of a single parameter process, floored at 1e-12 C_s.
inline double ou_step(double value, OuProcess const& pr, double dt, double xi)
{
    double next = value + pr.alpha * (pr.C_s - value) * dt
                  + pr.sigma * value * std::sqrt(dt) * xi;
    return std::fmax(next, 1e-12 * pr.C_s);
}

//---------------------------------------------------------------------------//
// CELL STEPS
//---------------------------------------------------------------------------//
inline constexpr int demographic_channels = static_cast<int>(num_events);
inline constexpr int environmental_channels = NoiseStream::channels_per_step;

/*!
 * x + f dt + G sqrt(dt) xi, clamped at zero.
 *
 * `noise` holds at least 11 standard normals, one per event.
 */
inline StateVec em_step_demographic(StateVec const& x,
                                    ModelParams const& p,
                                    double dt,
                                    double const* noise)
{
    Vec4 f = drift(x, p);
    EventRates r = event_rates(x, p);
    double const sq = std::sqrt(dt);
    std::array<double, num_events> w;
    for (std::size_t k = 0; k < num_events; ++k)
        w[k] = std::sqrt(r[k]) * sq * noise[k];

    // Rows of the diffusion factor applied directly
    StateVec y;
    y.uninfected = x.uninfected + f[0] * dt + w[0] - w[1] - w[2];
    y.infected = x.infected + f[1] * dt + w[2] - w[3] - w[4];
    y.bacteria = x.bacteria + f[2] * dt + p.N1 * w[3] + p.N2 * w[4] + w[5]
                 - w[6];
    y.tcells = x.tcells + f[3] * dt + w[7] + w[8] + w[9] - w[10];
    if (!y.finite())
        throw StepOverflow("em_step: non-finite state (dt too large)");
    return y.clamped();
}

struct EnvStepResult
{
    StateVec state;
    LiveParams live;
};

/*!
 * Joint step of cells and parameter processes.
 *
 * The cell update uses the pre-step live values; channels 11..14 drive
 * (delta, b, gamma, eta).
 */
inline EnvStepResult em_step_environmental(StateVec const& x,
                                           LiveParams const& live,
                                           ModelParams const& base,
                                           EnvProcessParams const& env,
                                           double dt,
                                           double const* noise)
{
    ModelParams p = base;
    apply_live(live, p);
    EnvStepResult out;
    out.state = em_step_demographic(x, p, dt, noise);
    out.live = live;
    for (std::size_t i = 0; i < 4; ++i)
    {
        if (env.process[i])
        {
            out.live[i] = ou_step(live[i], *env.process[i], dt,
                                  noise[demographic_channels + i]);
        }
    }
    return out;
}

//---------------------------------------------------------------------------//
// PATHS
//---------------------------------------------------------------------------//
enum class NoiseModel
{
    demographic,
    environmental,
};

struct SimConfig
{
    double dt = 0.01;  //!< days
    double t_end = 100.0;  //!< days
    std::size_t record_stride = 100;
    std::uint64_t seed = 20260101;
    NoiseModel model = NoiseModel::demographic;
    std::optional<EnvProcessParams> env;
    //! Extra times at which the state is captured (rounded to the step grid).
    std::vector<double> snapshot_times;

    std::uint64_t num_steps() const
    {
        return static_cast<std::uint64_t>(std::llround(t_end / dt));
    }

    void validate() const
    {
        if (!(dt > 0) || !std::isfinite(dt))
            throw DomainError("sim.dt must be > 0");
        if (!(t_end >= dt) || !std::isfinite(t_end))
            throw DomainError("sim.t_end must be >= dt");
        if (record_stride < 1)
            throw DomainError("sim.record_stride must be >= 1");
        if (model == NoiseModel::environmental)
        {
            if (!env)
                throw DomainError("environmental model needs env processes");
            env->validate();
        }
        for (double t : snapshot_times)
        {
            if (!(t >= 0) || t > t_end)
                throw DomainError("sim.snapshot_times must lie in [0, t_end]");
        }
    }

    friend bool operator==(SimConfig const&, SimConfig const&) = default;
};

struct PathResult
{
    std::vector<double> times;
    std::vector<StateVec> states;
    std::vector<LiveParams> env_values;  //!< empty for the demographic model
    std::vector<StateVec> snapshots;  //!< one per SimConfig::snapshot_times
    std::optional<double> absorbed_at;  //!< first time with M_i = B = 0
    std::optional<double> bacteria_zero_at;  //!< first time with B = 0
    bool failed = false;
    std::string failure;
};

namespace detail
{
inline std::vector<std::uint64_t>
snapshot_steps(SimConfig const& cfg)
{
    std::vector<std::uint64_t> out;
    out.reserve(cfg.snapshot_times.size());
    for (double t : cfg.snapshot_times)
        out.push_back(static_cast<std::uint64_t>(std::llround(t / cfg.dt)));
    return out;
}
}  // namespace detail

/*!
 * Simulate one path with the stream keyed by (seed, path_index).
 *
 * Records t = 0 and every `record_stride`-th step, and always the final
 * step. A step overflow stops the path and sets `failed`; what was recorded
 * is kept.
 */
inline PathResult simulate_path(StateVec const& init,
                                ModelParams const& params,
                                SimConfig const& cfg,
                                std::uint64_t path_index)
{
    cfg.validate();
    if (!init.valid())
        throw DomainError("simulate_path: initial state must be finite, >= 0");

    bool const env_model = cfg.model == NoiseModel::environmental;
    NoiseStream stream(cfg.seed, path_index);
    int const channels = env_model ? environmental_channels
                                   : demographic_channels;
    std::uint64_t const n = cfg.num_steps();
    auto const snaps = detail::snapshot_steps(cfg);

    PathResult res;
    std::size_t const n_rec = n / cfg.record_stride + 2;
    res.times.reserve(n_rec);
    res.states.reserve(n_rec);
    res.snapshots.assign(snaps.size(), StateVec{});

    StateVec x = init;
    LiveParams live = live_from(params);
    if (env_model)
    {
        for (std::size_t i = 0; i < 4; ++i)
        {
            if (cfg.env->process[i])
                live[i] = cfg.env->process[i]->C_0;
        }
    }

    auto record = [&](std::uint64_t step) {
        res.times.push_back(static_cast<double>(step) * cfg.dt);
        res.states.push_back(x);
        if (env_model)
            res.env_values.push_back(live);
    };
    auto observe = [&](std::uint64_t step) {
        for (std::size_t s = 0; s < snaps.size(); ++s)
        {
            if (snaps[s] == step)
                res.snapshots[s] = x;
        }
        double t = static_cast<double>(step) * cfg.dt;
        if (!res.bacteria_zero_at && x.bacteria == 0.0)
            res.bacteria_zero_at = t;
        if (!res.absorbed_at && x.bacteria == 0.0 && x.infected == 0.0)
            res.absorbed_at = t;
    };

    record(0);
    observe(0);
    std::array<double, NoiseStream::channels_per_step + 1> xi;
    ModelParams p = params;
    try
    {
        for (std::uint64_t step = 1; step <= n; ++step)
        {
            stream.fill(step - 1, xi.data(), channels);
            if (env_model)
            {
                auto r = em_step_environmental(x, live, params, *cfg.env,
                                               cfg.dt, xi.data());
                x = r.state;
                live = r.live;
            }
            else
            {
                x = em_step_demographic(x, p, cfg.dt, xi.data());
            }
            observe(step);
            if (step % cfg.record_stride == 0 || step == n)
                record(step);
        }
    }
    catch (StepOverflow const& e)
    {
        res.failed = true;
        res.failure = e.what();
    }
    return res;
}

/*!
 * Parameter processes alone on the same noise channels as a full path.
 *
 * Returns the live values at t = 0 and every `record_stride`-th step.
 */
inline std::vector<LiveParams>
simulate_env_processes(ModelParams const& params,
                       SimConfig const& cfg,
                       std::uint64_t path_index)
{
    cfg.validate();
    if (cfg.model != NoiseModel::environmental)
        throw DomainError("simulate_env_processes needs the environmental"
                          " model");
    NoiseStream stream(cfg.seed, path_index);
    LiveParams live = live_from(params);
    for (std::size_t i = 0; i < 4; ++i)
    {
        if (cfg.env->process[i])
            live[i] = cfg.env->process[i]->C_0;
    }
    std::vector<LiveParams> out{live};
    std::uint64_t const n = cfg.num_steps();
    for (std::uint64_t step = 1; step <= n; ++step)
    {
        std::uint64_t const block = (step - 1) * NoiseStream::blocks_per_step;
        // channels 11..14 sit in blocks 5 (second half), 6 and 7
        auto b5 = stream.normal_pair(block + 5);
        auto b6 = stream.normal_pair(block + 6);
        auto b7 = stream.normal_pair(block + 7);
        double const xi[4] = {b5[1], b6[0], b6[1], b7[0]};
        for (std::size_t i = 0; i < 4; ++i)
        {
            if (cfg.env->process[i])
                live[i] = ou_step(live[i], *cfg.env->process[i], cfg.dt,
                                  xi[i]);
        }
        if (step % cfg.record_stride == 0)
            out.push_back(live);
    }
    return out;
}

}  // namespace tbdyn
