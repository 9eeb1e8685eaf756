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

#ifndef GBAUDIT_NETWORK_HPP
#define GBAUDIT_NETWORK_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gbaudit/linalg.hpp"
#include "gbaudit/structured.hpp"

namespace gbaudit {

struct LabeledDataset;  // margin.hpp

/// Bias-free ReLU layers. Convolution layers keep both the filter bank and
/// the materialized circulant weight; rebuild_conv_weight() must be called
/// after mutating the filters.
struct DenseLayer {
    Matrix w;
};

struct ConvCirculantLayer {
    FilterBank bank;
    int p_prev = 0;
    Matrix w;  ///< conv_weight(bank, p_prev), kept in sync with the bank
};

struct WidthChangeLayer {
    WidthOp op;
};

/// Block computing sigma(v * sigma(u * x) + x); v is p x q, u is q x p.
struct ResNetBlockLayer {
    Matrix u;
    Matrix v;
};

using Layer = std::variant<DenseLayer, ConvCirculantLayer, WidthChangeLayer, ResNetBlockLayer>;

ConvCirculantLayer make_conv_layer(FilterBank bank, int p_prev);
void rebuild_conv_weight(ConvCirculantLayer& layer);

int layer_input_dim(const Layer& layer);
int layer_output_dim(const Layer& layer);
const char* layer_kind_name(const Layer& layer);
bool layer_has_weight(const Layer& layer);

/// An ordered stack of layers with validated dimension chaining.
struct NetworkSpec {
    std::vector<Layer> layers;
    int input_dim = 0;

    int depth() const { return static_cast<int>(layers.size()); }
    int output_dim() const;
    /// dims()[d] is the width after layer d; dims()[0] = input_dim.
    std::vector<int> dims() const;
};

NetworkSpec make_network(std::vector<Layer> layers, int input_dim);
void validate_network(const NetworkSpec& net);

/// Per-layer activations recorded by forward(). ReLU masks use the
/// mask-at-zero-is-inactive rule, so post = mask .* pre exactly and
/// f(x) = J_{1:D} x holds with no correction term.
struct ActivationTrace {
    struct Entry {
        Vector pre;
        Vector post;
        Vector mask;                ///< 0/1; all-ones for width layers
        Vector inner_pre;           ///< ResNet only: u * a
        Vector inner_post;          ///< ResNet only: sigma(u * a)
        Vector inner_mask;          ///< ResNet only
        Eigen::VectorXi pool_sel;   ///< max_pool only: chosen index per segment
    };
    Vector input;
    std::vector<Entry> layers;
    const Vector& output() const { return layers.empty() ? input : layers.back().post; }
};

ActivationTrace forward(const NetworkSpec& net, const Vector& x);

/// Explicit Jacobian between layers i and j (1-indexed, inclusive) at the
/// masks frozen by forward(net, x). i > j yields the identity.
Matrix jacobian_explicit(const NetworkSpec& net, const Vector& x, int i, int j);

/// Matrix-free spectral norm of the same Jacobian via power iteration with
/// forward (Jv) and reverse (J^T v) mask-frozen applications.
NormEstimate jacobian_op_norm(const NetworkSpec& net, const Vector& x, int i, int j,
                              double tol = 1e-8, std::uint64_t seed = 0, int max_iter = 1000);

/// Jv / J^T v against a precomputed trace, for callers that reuse masks.
Vector jacobian_apply(const NetworkSpec& net, const ActivationTrace& trace, int i, int j,
                      const Vector& v, bool transpose);

/// Jacobian spectral-norm statistics over a dataset.
struct JacobianStats {
    struct PerInput {
        double full = 1.0;            ///< ||J_{1:D}||
        std::vector<double> prefix;   ///< prefix[d-1] = ||J_{1:(d-1)}||, empty range = 1
        std::vector<double> suffix;   ///< suffix[d-1] = ||J_{(d+1):D}||
    };
    std::vector<PerInput> per_input;
    double full_max = 0.0;        ///< max_x ||J_{1:D}||
    int full_argmax = -1;
    double leave_one_max = 0.0;   ///< max_{d,x} prefix * suffix
    int leave_one_argmax_layer = -1;  ///< 1-indexed
    int leave_one_argmax_input = -1;
    double prod_layer_bound = 1.0;  ///< product of per-layer operator-norm bounds
    double tol = 0.0;
    std::uint64_t seed = 0;
};

JacobianStats jacobian_stats(const NetworkSpec& net, const LabeledDataset& data, double tol,
                             std::uint64_t seed, bool include_leave_one = true);

/// Parameter-Lipschitz certificate for dense nets: a computable upper bound
/// on ||f(netA, x) - f(netB, x)|| from the balanced factorizations of the
/// weights and Jacobian estimates taken at the telescoping mixed networks.
struct ParamLipschitzResult {
    double bound = 0.0;
    double actual = 0.0;
    double jac_estimate = 0.0;  ///< telescoping max, reported for context
};

ParamLipschitzResult param_lipschitz_bound(const NetworkSpec& net_a, const NetworkSpec& net_b,
                                           const Vector& x, double tol = 1e-8,
                                           std::uint64_t seed = 0);

ParamLipschitzResult resnet_param_lipschitz_bound(const NetworkSpec& net_a,
                                                  const NetworkSpec& net_b, const Vector& x,
                                                  double tol = 1e-8, std::uint64_t seed = 0);

/// Per-layer weight gradients; layout mirrors the layer list.
struct LayerGrads {
    struct Entry {
        Matrix w;        ///< dense: gradient of the weight matrix
        Matrix filters;  ///< conv: gradient of the n x k filter bank
        Matrix u, v;     ///< resnet
    };
    std::vector<Entry> layers;
    Vector input;  ///< gradient with respect to the network input
};

/// Reverse-mode pass given d(loss)/d(output); uses the trace's frozen masks.
LayerGrads backward(const NetworkSpec& net, const ActivationTrace& trace, const Vector& d_out);

/// Product over layers of a closed-form operator-norm bound (dense/conv:
/// ||W||_2, width op: certified norm, resnet: ||V||*||U|| + 1).
double product_layer_norm_bound(const NetworkSpec& net, double tol, std::uint64_t seed);

}  // namespace gbaudit

#endif  // GBAUDIT_NETWORK_HPP
