/*
 * Copyright 2026 The gbaudit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GBAUDIT_RNG_HPP
#define GBAUDIT_RNG_HPP

#include <cmath>
#include <cstdint>

namespace gbaudit {

/// splitmix64: tiny seeded generator used for every randomized path in the
/// toolkit. All outputs are pure functions of the seed, so reports are
/// reproducible bit-for-bit.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [-1, 1).
    double next_symmetric() { return 2.0 * next_double() - 1.0; }

    /// Standard normal via Box-Muller. Draws two uniforms per call; no state
    /// beyond the counter, so interleaving with other draws stays defined.
    double next_gaussian() {
        double u1 = next_double();
        // avoid log(0)
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

  private:
    std::uint64_t state_;
};

/// Counter-based substream derivation: (seed, index) -> independent seed.
/// Used so that parallelizable draws (Rademacher vectors, per-layer inits,
/// per-input power iterations) do not depend on evaluation order.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed ^ (index * 0x9e3779b97f4a7c15ULL + 0x1d8e4e27c47d124fULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace gbaudit

#endif  // GBAUDIT_RNG_HPP
