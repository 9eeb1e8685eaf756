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

#ifndef GBAUDIT_ERC_HPP
#define GBAUDIT_ERC_HPP

#include <cstdint>
#include <vector>

#include "gbaudit/margin.hpp"
#include "gbaudit/network.hpp"

namespace gbaudit {

/// An explicit finite class of networks, evaluated under the ramp loss with
/// margin gamma.
struct FiniteClass {
    std::vector<NetworkSpec> members;
    double gamma = 1.0;
};

/// Exact empirical Rademacher complexity of a finite class: the average over
/// all 2^m sign vectors of sup_f |(1/m) sum_i eps_i g_i(f)| (absolute value
/// inside the sup). Enumerates, so m <= 20.
double erc_exact_finite(const FiniteClass& cls, const LabeledDataset& data);

struct ErcAscentResult {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> per_draw;
};

/// Lower-bound estimate of the ERC over a spectral ball around nothing in
/// particular: for each seeded Rademacher draw, ascend the signed correlation
/// over the weights (analytic subgradients, ramp/ReLU conventions as in
/// margin/network), projecting any layer whose spectral norm exceeds its cap
/// back onto the cap. Draws use counter-based seeds and are aggregated in
/// draw order.
ErcAscentResult erc_ascent(const NetworkSpec& tmpl, const std::vector<double>& spectral_caps,
                           const LabeledDataset& data, double gamma, int draws, int steps,
                           double step_size, std::uint64_t seed);

}  // namespace gbaudit

#endif  // GBAUDIT_ERC_HPP
