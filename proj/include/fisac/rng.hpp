// SPDX-License-Identifier: Apache-2.0
//
// fisac — simulation and optimization toolkit for multistatic sensing with
// movable-antenna transceivers.
// Copyright (C) 2026 the fisac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FISAC_RNG_HPP
#define FISAC_RNG_HPP

#include "common.hpp"

#include <cstdint>
#include <random>

namespace fisac
{

// splitmix64: used to derive independent substream seeds from a master seed.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index)
{
    return mix64(master ^ mix64(index + 0x100001ull));
}

// Deterministic random source.  Uniform and normal variates are generated
// from raw engine output (53-bit mantissa / Box-Muller) rather than through
// std:: distributions, whose algorithms are implementation-defined; this way
// a seed pins the byte-exact stream on any standard library.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform on [0, 1)
    double uniform()
    {
        return double(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi)
    {
        return lo + (hi - lo) * uniform();
    }

    // standard normal via Box-Muller (both outputs used)
    double normal()
    {
        if (have_spare_)
        {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = two_pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // circularly-symmetric complex normal with E|x|^2 = variance
    cplx cnormal(double variance = 1.0)
    {
        double s = std::sqrt(variance * 0.5);
        return {s * normal(), s * normal()};
    }

    // unit-magnitude complex number with uniform phase
    cplx unit_phase()
    {
        double a = two_pi * uniform();
        return {std::cos(a), std::sin(a)};
    }

    std::uint64_t raw()
    {
        return eng_();
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace fisac

#endif // FISAC_RNG_HPP
