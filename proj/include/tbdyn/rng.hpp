//---------------------------------------------------------------------------//
// Copyright 2026 tbdyn developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tbdyn/rng.hpp
//! Counter-based Philox4x32-10 generator and per-step Gaussian noise layout.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tbdyn
{
//---------------------------------------------------------------------------//
/*!
 * Philox4x32 with ten rounds.
 *
 * A pure function of (counter, key); no state is carried between calls.
 */
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t mult0 = 0xD2511F53u;
    static constexpr std::uint32_t mult1 = 0xCD9E8D57u;
    static constexpr std::uint32_t weyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t weyl1 = 0xBB67AE85u;

    static constexpr Counter apply(Counter ctr, Key key)
    {
        for (int r = 0; r < 10; ++r)
        {
            std::uint64_t p0 = std::uint64_t{mult0} * ctr[0];
            std::uint64_t p1 = std::uint64_t{mult1} * ctr[2];
            auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            auto lo0 = static_cast<std::uint32_t>(p0);
            auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += weyl0;
            key[1] += weyl1;
        }
        return ctr;
    }
};

//---------------------------------------------------------------------------//
/*!
 * Gaussian noise stream of one sample path.
 *
 * Keyed by the 64-bit seed; the counter holds (block, path index). Every
 * time step owns `blocks_per_step` consecutive blocks and each block yields
 * two normals, so channel k of step n depends only on (seed, path, n, k).
 */
class NoiseStream
{
  public:
    static constexpr int channels_per_step = 15;
    static constexpr int blocks_per_step = (channels_per_step + 1) / 2;

    NoiseStream(std::uint64_t seed, std::uint64_t path)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)}
        , path_lo_(static_cast<std::uint32_t>(path))
        , path_hi_(static_cast<std::uint32_t>(path >> 32))
    {
    }

    //! Fill the first `count` channels (<= 15) of step `step`.
    void fill(std::uint64_t step, double* out, int count) const
    {
        std::uint64_t block = step * blocks_per_step;
        for (int k = 0; k < count; k += 2, ++block)
        {
            auto pair = normal_pair(block);
            out[k] = pair[0];
            if (k + 1 < count)
                out[k + 1] = pair[1];
        }
    }

    //! Two independent standard normals from one block (Box-Muller).
    std::array<double, 2> normal_pair(std::uint64_t block) const
    {
        Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                static_cast<std::uint32_t>(block >> 32),
                                path_lo_,
                                path_hi_};
        auto r = Philox4x32::apply(ctr, key_);
        double u1 = to_open_unit((std::uint64_t{r[0]} << 32) | r[1]);
        double u2 = to_open_unit((std::uint64_t{r[2]} << 32) | r[3]);
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586 * u2;
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

    //! Top 53 bits mapped to (0, 1].
    static double to_open_unit(std::uint64_t bits)
    {
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    }

  private:
    Philox4x32::Key key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
};

}  // namespace tbdyn
