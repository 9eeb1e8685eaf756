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

#ifndef GBAUDIT_MARGIN_HPP
#define GBAUDIT_MARGIN_HPP

#include <vector>

#include "gbaudit/linalg.hpp"

namespace gbaudit {

struct NetworkSpec;

/// Labeled inputs with a certified max Euclidean norm R. Labels are
/// 0-indexed.
struct LabeledDataset {
    Matrix inputs;            ///< m x p0, one sample per row
    std::vector<int> labels;  ///< in [0, n_class)
    double R = 0.0;

    int m() const { return static_cast<int>(inputs.rows()); }
    int dim() const { return static_cast<int>(inputs.cols()); }
};

/// Validates sample count, label range and that every ||x_i|| <= R (within
/// 1e-12 relative slack).
LabeledDataset make_dataset(Matrix inputs, std::vector<int> labels, double R);

/// Score of the true class minus the best wrong-class score.
double margin(const Vector& f_out, int y);

/// Ramp loss at margin nu: 1 below 0, linear on [0, gamma], 0 above gamma.
/// Both boundary points evaluate through the middle branch.
double ramp_loss_from_margin(double nu, double gamma);
double ramp_loss(const Vector& f_out, int y, double gamma);

struct RiskResult {
    double mean = 0.0;
    double max = 0.0;  ///< max per-sample loss, used for C^Net denominators
};

RiskResult empirical_ramp_risk(const NetworkSpec& net, const LabeledDataset& data, double gamma);

/// Fraction misclassified; argmax ties go to the lowest index.
double zero_one_error(const NetworkSpec& net, const LabeledDataset& data);

}  // namespace gbaudit

#endif  // GBAUDIT_MARGIN_HPP
