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

#include "gbaudit/erc.hpp"

#include <algorithm>
#include <cmath>

namespace gbaudit {

double erc_exact_finite(const FiniteClass& cls, const LabeledDataset& data) {
    if (cls.members.empty())
        throw ValidationError(errc::invalid_argument, "erc_exact_finite: empty class");
    if (cls.gamma <= 0.0)
        throw ValidationError(errc::invalid_argument, "erc_exact_finite: gamma must be > 0");
    const int m = data.m();
    if (m > 20)
        throw ValidationError(errc::size_limit,
                              "erc_exact_finite: m > 20 not enumerable, use erc_ascent");
    const std::size_t n_members = cls.members.size();
    // precompute the loss matrix g[f][i]
    std::vector<std::vector<double>> losses(n_members, std::vector<double>(m));
    for (std::size_t f = 0; f < n_members; ++f)
        for (int i = 0; i < m; ++i) {
            const Vector out = forward(cls.members[f], data.inputs.row(i).transpose()).output();
            losses[f][i] = ramp_loss(out, data.labels[static_cast<std::size_t>(i)], cls.gamma);
        }
    const std::uint64_t patterns = 1ULL << m;
    double total = 0.0;
    for (std::uint64_t bits = 0; bits < patterns; ++bits) {
        double sup = 0.0;
        for (std::size_t f = 0; f < n_members; ++f) {
            double s = 0.0;
            for (int i = 0; i < m; ++i)
                s += ((bits >> i) & 1ULL) ? losses[f][i] : -losses[f][i];
            sup = std::max(sup, std::abs(s) / m);
        }
        total += sup;
    }
    return total / static_cast<double>(patterns);
}

namespace {

/// Signed Rademacher correlation and its weight gradients at the margin/ReLU
/// subgradient conventions used everywhere else.
double rademacher_objective(const NetworkSpec& net, const LabeledDataset& data,
                            const std::vector<int>& eps, double gamma, LayerGrads* grads_out) {
    const int m = data.m();
    double value = 0.0;
    if (grads_out != nullptr) {
        grads_out->layers.assign(net.layers.size(), {});
        for (std::size_t d = 0; d < net.layers.size(); ++d) {
            LayerGrads::Entry& g = grads_out->layers[d];
            if (const auto* dl = std::get_if<DenseLayer>(&net.layers[d]))
                g.w = Matrix::Zero(dl->w.rows(), dl->w.cols());
            else if (const auto* cv = std::get_if<ConvCirculantLayer>(&net.layers[d]))
                g.filters = Matrix::Zero(cv->bank.n, cv->bank.k);
            else if (const auto* rb = std::get_if<ResNetBlockLayer>(&net.layers[d])) {
                g.u = Matrix::Zero(rb->u.rows(), rb->u.cols());
                g.v = Matrix::Zero(rb->v.rows(), rb->v.cols());
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        const Vector x = data.inputs.row(i).transpose();
        const int y = data.labels[static_cast<std::size_t>(i)];
        const ActivationTrace trace = forward(net, x);
        const Vector& out = trace.output();
        const double nu = margin(out, y);
        value += eps[static_cast<std::size_t>(i)] * ramp_loss_from_margin(nu, gamma);
        if (grads_out == nullptr) continue;
        // subgradient: middle branch carries -1/gamma, closed at both ends
        if (nu < 0.0 || nu > gamma) continue;
        int rival = -1;
        for (Eigen::Index c = 0; c < out.size(); ++c) {
            if (static_cast<int>(c) == y) continue;
            if (rival < 0 || out(c) > out(rival)) rival = static_cast<int>(c);
        }
        Vector d_out = Vector::Zero(out.size());
        const double scale = eps[static_cast<std::size_t>(i)] * (-1.0 / gamma) / m;
        d_out(y) = scale;
        d_out(rival) = -scale;
        const LayerGrads g = backward(net, trace, d_out);
        for (std::size_t d = 0; d < net.layers.size(); ++d) {
            if (g.layers[d].w.size() > 0) grads_out->layers[d].w += g.layers[d].w;
            if (g.layers[d].filters.size() > 0) grads_out->layers[d].filters += g.layers[d].filters;
            if (g.layers[d].u.size() > 0) {
                grads_out->layers[d].u += g.layers[d].u;
                grads_out->layers[d].v += g.layers[d].v;
            }
        }
    }
    return value / m;
}

void project_spectral(NetworkSpec& net, const std::vector<double>& caps) {
    for (std::size_t d = 0; d < net.layers.size(); ++d) {
        const double cap = caps[d];
        if (auto* dl = std::get_if<DenseLayer>(&net.layers[d])) {
            const double sn = svd_small(dl->w).s(0);
            if (sn > cap && sn > 0.0) dl->w *= cap / sn;
        } else if (auto* cv = std::get_if<ConvCirculantLayer>(&net.layers[d])) {
            const double sn = svd_small(cv->w).s(0);
            if (sn > cap && sn > 0.0) {
                cv->bank.filters *= cap / sn;
                rebuild_conv_weight(*cv);
            }
        } else if (auto* rb = std::get_if<ResNetBlockLayer>(&net.layers[d])) {
            const double su = svd_small(rb->u).s(0);
            if (su > cap && su > 0.0) rb->u *= cap / su;
            const double sv = svd_small(rb->v).s(0);
            if (sv > cap && sv > 0.0) rb->v *= cap / sv;
        }
    }
}

}  // namespace

ErcAscentResult erc_ascent(const NetworkSpec& tmpl, const std::vector<double>& spectral_caps,
                           const LabeledDataset& data, double gamma, int draws, int steps,
                           double step_size, std::uint64_t seed) {
    if (draws < 1) throw ValidationError(errc::invalid_argument, "erc_ascent: draws must be >= 1");
    if (steps < 0) throw ValidationError(errc::invalid_argument, "erc_ascent: steps must be >= 0");
    if (gamma <= 0.0) throw ValidationError(errc::invalid_argument, "erc_ascent: gamma must be > 0");
    if (spectral_caps.size() != tmpl.layers.size())
        throw ValidationError(errc::dimension_mismatch, "erc_ascent: one cap per layer");
    for (double cap : spectral_caps)
        if (cap <= 0.0)
            throw ValidationError(errc::invalid_argument, "erc_ascent: caps must be positive");

    const int m = data.m();
    ErcAscentResult res;
    res.per_draw.resize(static_cast<std::size_t>(draws));
    for (int t = 0; t < draws; ++t) {
        SplitMix64 rng(substream(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> eps(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) eps[static_cast<std::size_t>(i)] = (rng.next_u64() & 1ULL) ? 1 : -1;

        NetworkSpec net = tmpl;
        for (int step = 0; step < steps; ++step) {
            LayerGrads grads;
            const double s_val = rademacher_objective(net, data, eps, gamma, &grads);
            const double dir = s_val >= 0.0 ? 1.0 : -1.0;  // ascend |S|
            for (std::size_t d = 0; d < net.layers.size(); ++d) {
                if (auto* dl = std::get_if<DenseLayer>(&net.layers[d])) {
                    dl->w += step_size * dir * grads.layers[d].w;
                } else if (auto* cv = std::get_if<ConvCirculantLayer>(&net.layers[d])) {
                    cv->bank.filters += step_size * dir * grads.layers[d].filters;
                    rebuild_conv_weight(*cv);
                } else if (auto* rb = std::get_if<ResNetBlockLayer>(&net.layers[d])) {
                    rb->u += step_size * dir * grads.layers[d].u;
                    rb->v += step_size * dir * grads.layers[d].v;
                }
            }
            project_spectral(net, spectral_caps);
        }
        res.per_draw[static_cast<std::size_t>(t)] =
            std::abs(rademacher_objective(net, data, eps, gamma, nullptr));
    }
    double sum = 0.0;
    for (double v : res.per_draw) sum += v;
    res.mean = sum / draws;
    double ss = 0.0;
    for (double v : res.per_draw) ss += (v - res.mean) * (v - res.mean);
    res.stddev = draws > 1 ? std::sqrt(ss / (draws - 1)) : 0.0;
    return res;
}

}  // namespace gbaudit
