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

#include "gbaudit/margin.hpp"

#include <algorithm>
#include <cmath>

#include "gbaudit/network.hpp"

namespace gbaudit {

LabeledDataset make_dataset(Matrix inputs, std::vector<int> labels, double R) {
    if (inputs.rows() < 1)
        throw ValidationError(errc::invalid_argument, "dataset: needs at least one sample");
    if (static_cast<std::size_t>(inputs.rows()) != labels.size())
        throw ValidationError(errc::dimension_mismatch, "dataset: label count != sample count");
    if (!all_finite(inputs))
        throw ValidationError(errc::nonfinite_input, "dataset: non-finite inputs");
    if (!(R >= 0.0) || !std::isfinite(R))
        throw ValidationError(errc::invalid_argument, "dataset: R must be finite and nonnegative");
    const double slack = 1e-12 * std::max(1.0, R);
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        if (inputs.row(i).norm() > R + slack)
            throw ValidationError(errc::invalid_argument,
                                  "dataset: sample " + std::to_string(i) + " exceeds norm bound R");
        if (labels[static_cast<std::size_t>(i)] < 0)
            throw ValidationError(errc::label_range, "dataset: negative label");
    }
    LabeledDataset data;
    data.inputs = std::move(inputs);
    data.labels = std::move(labels);
    data.R = R;
    return data;
}

double margin(const Vector& f_out, int y) {
    const int n = static_cast<int>(f_out.size());
    if (n < 2) throw ValidationError(errc::invalid_argument, "margin: needs at least two classes");
    if (y < 0 || y >= n) throw ValidationError(errc::label_range, "margin: label out of range");
    double best_other = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        if (i != y) best_other = std::max(best_other, f_out(i));
    return f_out(y) - best_other;
}

double ramp_loss_from_margin(double nu, double gamma) {
    if (gamma <= 0.0) throw ValidationError(errc::invalid_argument, "ramp_loss: gamma must be > 0");
    if (nu < 0.0) return 1.0;
    if (nu > gamma) return 0.0;
    return 1.0 - nu / gamma;
}

double ramp_loss(const Vector& f_out, int y, double gamma) {
    return ramp_loss_from_margin(margin(f_out, y), gamma);
}

RiskResult empirical_ramp_risk(const NetworkSpec& net, const LabeledDataset& data, double gamma) {
    if (gamma <= 0.0)
        throw ValidationError(errc::invalid_argument, "empirical_ramp_risk: gamma must be > 0");
    RiskResult res;
    double acc = 0.0;
    for (int i = 0; i < data.m(); ++i) {
        const Vector out = forward(net, data.inputs.row(i).transpose()).output();
        const double loss = ramp_loss(out, data.labels[static_cast<std::size_t>(i)], gamma);
        acc += loss;  // index order
        res.max = std::max(res.max, loss);
    }
    res.mean = acc / data.m();
    return res;
}

double zero_one_error(const NetworkSpec& net, const LabeledDataset& data) {
    int wrong = 0;
    for (int i = 0; i < data.m(); ++i) {
        const Vector out = forward(net, data.inputs.row(i).transpose()).output();
        int arg = 0;
        for (Eigen::Index j = 1; j < out.size(); ++j)
            if (out(j) > out(arg)) arg = static_cast<int>(j);
        if (arg != data.labels[static_cast<std::size_t>(i)]) ++wrong;
    }
    return static_cast<double>(wrong) / data.m();
}

}  // namespace gbaudit
