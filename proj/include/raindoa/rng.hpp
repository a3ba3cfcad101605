// SPDX-License-Identifier: Apache-2.0
//
// raindoa - array simulation and multi-task DoA / rain-rate estimation toolkit
// Copyright (C) 2026 raindoa developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef raindoa_rng_H
#define raindoa_rng_H

// Self-contained counter-seeded RNG. Every consumer receives its stream
// explicitly, derived as a pure function of (seed, stream index), so batch
// generation is reproducible bit-for-bit regardless of worker count and
// independent of the C++ standard library's distribution internals.

#include <cmath>
#include <cstdint>
#include <complex>

namespace raindoa
{
    // SplitMix64; used for seeding and for deriving substreams.
    inline std::uint64_t splitmix64(std::uint64_t &state)
    {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Derive a well-mixed 64-bit value from a (seed, index) pair.
    inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
    {
        std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
        splitmix64(s);
        return splitmix64(s);
    }

    // xoshiro256** by Blackman & Vigna.
    class RandomStream
    {
    public:
        explicit RandomStream(std::uint64_t seed)
        {
            std::uint64_t sm = seed;
            for (auto &w : state_)
                w = splitmix64(sm);
            have_spare_ = false;
        }

        // Independent child stream; pure function of (this stream's seed, index).
        RandomStream fork(std::uint64_t index) const
        {
            return RandomStream(derive_seed(seed_of_state(), index));
        }

        std::uint64_t next_u64()
        {
            const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
            const std::uint64_t t = state_[1] << 17;
            state_[2] ^= state_[0];
            state_[3] ^= state_[1];
            state_[1] ^= state_[2];
            state_[0] ^= state_[3];
            state_[2] ^= t;
            state_[3] = rotl(state_[3], 45);
            return result;
        }

        // Uniform in [0, 1) with 53 random bits.
        double uniform()
        {
            return double(next_u64() >> 11) * 0x1.0p-53;
        }

        // Uniform in (0, 1]; safe as a log() argument.
        double uniform_pos()
        {
            return double((next_u64() >> 11) + 1) * 0x1.0p-53;
        }

        // Uniform integer in [0, n).
        std::uint64_t uniform_index(std::uint64_t n)
        {
            // Rejection sampling to remove modulo bias.
            const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
            std::uint64_t v;
            do
                v = next_u64();
            while (v >= limit);
            return v % n;
        }

        // Standard normal via Box-Muller; caches the second deviate.
        double normal()
        {
            if (have_spare_)
            {
                have_spare_ = false;
                return spare_;
            }
            const double u1 = uniform_pos();
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double a = 2.0 * 3.14159265358979323846 * u2;
            spare_ = r * std::sin(a);
            have_spare_ = true;
            return r * std::cos(a);
        }

        // Circularly symmetric complex normal with E{|z|^2} = 1.
        std::complex<double> complex_normal()
        {
            const double inv_sqrt2 = 0.70710678118654752440;
            const double re = normal() * inv_sqrt2;
            const double im = normal() * inv_sqrt2;
            return {re, im};
        }

    private:
        static std::uint64_t rotl(std::uint64_t x, int k)
        {
            return (x << k) | (x >> (64 - k));
        }

        // Mix the current state down to one word for forking.
        std::uint64_t seed_of_state() const
        {
            std::uint64_t s = state_[0];
            s ^= rotl(state_[1], 13);
            s ^= rotl(state_[2], 29);
            s ^= rotl(state_[3], 47);
            splitmix64(s);
            return s;
        }

        std::uint64_t state_[4];
        double spare_ = 0.0;
        bool have_spare_;
    };
}

#endif
