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

#include "gbaudit/network.hpp"

#include <algorithm>
#include <cmath>

#include "gbaudit/margin.hpp"

namespace gbaudit {

ConvCirculantLayer make_conv_layer(FilterBank bank, int p_prev) {
    ConvCirculantLayer layer;
    layer.bank = std::move(bank);
    layer.p_prev = p_prev;
    rebuild_conv_weight(layer);
    return layer;
}

void rebuild_conv_weight(ConvCirculantLayer& layer) {
    layer.w = conv_weight(layer.bank, layer.p_prev);
}

int layer_input_dim(const Layer& layer) {
    return std::visit(
        [](const auto& l) -> int {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, DenseLayer>) return static_cast<int>(l.w.cols());
            else if constexpr (std::is_same_v<T, ConvCirculantLayer>) return l.p_prev;
            else if constexpr (std::is_same_v<T, WidthChangeLayer>) return l.op.p;
            else return static_cast<int>(l.u.cols());
        },
        layer);
}

int layer_output_dim(const Layer& layer) {
    return std::visit(
        [](const auto& l) -> int {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, DenseLayer>) return static_cast<int>(l.w.rows());
            else if constexpr (std::is_same_v<T, ConvCirculantLayer>)
                return static_cast<int>(l.w.rows());
            else if constexpr (std::is_same_v<T, WidthChangeLayer>)
                return width_op_output_dim(l.op);
            else return static_cast<int>(l.v.rows());
        },
        layer);
}

const char* layer_kind_name(const Layer& layer) {
    return std::visit(
        [](const auto& l) -> const char* {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, DenseLayer>) return "dense";
            else if constexpr (std::is_same_v<T, ConvCirculantLayer>) return "conv_circulant";
            else if constexpr (std::is_same_v<T, WidthChangeLayer>) return "width_change";
            else return "resnet_block";
        },
        layer);
}

bool layer_has_weight(const Layer& layer) {
    return !std::holds_alternative<WidthChangeLayer>(layer);
}

int NetworkSpec::output_dim() const {
    return layers.empty() ? input_dim : layer_output_dim(layers.back());
}

std::vector<int> NetworkSpec::dims() const {
    std::vector<int> d(layers.size() + 1);
    d[0] = input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) d[i + 1] = layer_output_dim(layers[i]);
    return d;
}

void validate_network(const NetworkSpec& net) {
    if (net.input_dim < 1)
        throw ValidationError(errc::invalid_argument, "network: input_dim must be positive");
    int dim = net.input_dim;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        if (layer_input_dim(layer) != dim)
            throw ValidationError(errc::dimension_mismatch,
                                  "network: layer " + std::to_string(i + 1) + " expects width " +
                                      std::to_string(layer_input_dim(layer)) + ", got " +
                                      std::to_string(dim));
        if (const auto* rb = std::get_if<ResNetBlockLayer>(&layer)) {
            if (rb->v.rows() != rb->u.cols() || rb->u.rows() != rb->v.cols())
                throw ValidationError(errc::dimension_mismatch,
                                      "network: resnet block factors do not chain");
            if (static_cast<int>(rb->v.rows()) != dim)
                throw ValidationError(errc::dimension_mismatch,
                                      "network: resnet skip addition needs output = input width");
        }
        if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
            if (cv->w.rows() != static_cast<Eigen::Index>(cv->bank.n) * (cv->p_prev / cv->bank.s))
                throw ValidationError(errc::structure, "network: stale conv weight matrix");
        }
        dim = layer_output_dim(layer);
    }
}

NetworkSpec make_network(std::vector<Layer> layers, int input_dim) {
    NetworkSpec net;
    net.layers = std::move(layers);
    net.input_dim = input_dim;
    validate_network(net);
    return net;
}

namespace {

Vector relu_mask(const Vector& pre) {
    Vector mask(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) mask(i) = pre(i) > 0.0 ? 1.0 : 0.0;
    return mask;
}

}  // namespace

ActivationTrace forward(const NetworkSpec& net, const Vector& x) {
    if (static_cast<int>(x.size()) != net.input_dim)
        throw ValidationError(errc::dimension_mismatch, "forward: input width mismatch");
    ActivationTrace trace;
    trace.input = x;
    trace.layers.resize(net.layers.size());
    Vector a = x;
    for (std::size_t d = 0; d < net.layers.size(); ++d) {
        ActivationTrace::Entry& e = trace.layers[d];
        if (const auto* dl = std::get_if<DenseLayer>(&net.layers[d])) {
            e.pre.noalias() = dl->w * a;
            e.mask = relu_mask(e.pre);
            e.post = e.pre.cwiseMax(0.0);
        } else if (const auto* cv = std::get_if<ConvCirculantLayer>(&net.layers[d])) {
            e.pre.noalias() = cv->w * a;
            e.mask = relu_mask(e.pre);
            e.post = e.pre.cwiseMax(0.0);
        } else if (const auto* wc = std::get_if<WidthChangeLayer>(&net.layers[d])) {
            if (wc->op.kind == WidthOp::Kind::max_pool) {
                MaxPoolResult mp = max_pool_op(a, wc->op.s, wc->op.signed_maxpool);
                e.pre = mp.pooled;
                e.pool_sel = mp.indices;
            } else {
                e.pre.noalias() = width_op_matrix(wc->op) * a;
            }
            // width ops are linear; no activation
            e.post = e.pre;
            e.mask = Vector::Ones(e.pre.size());
        } else {
            const auto& rb = std::get<ResNetBlockLayer>(net.layers[d]);
            e.inner_pre.noalias() = rb.u * a;
            e.inner_mask = relu_mask(e.inner_pre);
            e.inner_post = e.inner_pre.cwiseMax(0.0);
            e.pre.noalias() = rb.v * e.inner_post;
            e.pre += a;
            e.mask = relu_mask(e.pre);
            e.post = e.pre.cwiseMax(0.0);
        }
        a = e.post;
    }
    return trace;
}

namespace {

void check_segment(const NetworkSpec& net, int i, int j) {
    const int d = net.depth();
    if (i < 1 || i > d + 1 || j < 0 || j > d)
        throw ValidationError(errc::invalid_argument, "jacobian: layer range out of bounds");
}

/// One layer's frozen linear factor applied to v (or its transpose).
Vector apply_layer_factor(const Layer& layer, const ActivationTrace::Entry& e, const Vector& v,
                          bool transpose) {
    if (const auto* dl = std::get_if<DenseLayer>(&layer)) {
        if (!transpose) return e.mask.cwiseProduct(dl->w * v);
        return dl->w.transpose() * e.mask.cwiseProduct(v);
    }
    if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
        if (!transpose) return e.mask.cwiseProduct(cv->w * v);
        return cv->w.transpose() * e.mask.cwiseProduct(v);
    }
    if (const auto* wc = std::get_if<WidthChangeLayer>(&layer)) {
        if (wc->op.kind == WidthOp::Kind::max_pool) {
            if (!transpose) {
                Vector out(e.pool_sel.size());
                for (Eigen::Index r = 0; r < e.pool_sel.size(); ++r) out(r) = v(e.pool_sel(r));
                return out;
            }
            Vector out = Vector::Zero(wc->op.p);
            for (Eigen::Index r = 0; r < e.pool_sel.size(); ++r) out(e.pool_sel(r)) += v(r);
            return out;
        }
        const Matrix t = width_op_matrix(wc->op);
        if (!transpose) return t * v;
        return t.transpose() * v;
    }
    const auto& rb = std::get<ResNetBlockLayer>(layer);
    if (!transpose) {
        Vector inner = e.inner_mask.cwiseProduct(rb.u * v);
        Vector out = rb.v * inner;
        out += v;
        return e.mask.cwiseProduct(out);
    }
    Vector masked = e.mask.cwiseProduct(v);
    Vector out = rb.u.transpose() * e.inner_mask.cwiseProduct(rb.v.transpose() * masked);
    out += masked;
    return out;
}

Matrix layer_factor_matrix(const Layer& layer, const ActivationTrace::Entry& e) {
    if (const auto* dl = std::get_if<DenseLayer>(&layer)) return e.mask.asDiagonal() * dl->w;
    if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) return e.mask.asDiagonal() * cv->w;
    if (const auto* wc = std::get_if<WidthChangeLayer>(&layer)) {
        if (wc->op.kind == WidthOp::Kind::max_pool) {
            Matrix t = Matrix::Zero(e.pool_sel.size(), wc->op.p);
            for (Eigen::Index r = 0; r < e.pool_sel.size(); ++r) t(r, e.pool_sel(r)) = 1.0;
            return t;
        }
        return width_op_matrix(wc->op);
    }
    const auto& rb = std::get<ResNetBlockLayer>(layer);
    Matrix core = rb.v * e.inner_mask.asDiagonal() * rb.u;
    core += Matrix::Identity(core.rows(), core.cols());
    return e.mask.asDiagonal() * core;
}

}  // namespace

Vector jacobian_apply(const NetworkSpec& net, const ActivationTrace& trace, int i, int j,
                      const Vector& v, bool transpose) {
    check_segment(net, i, j);
    if (i > j) return v;
    Vector out = v;
    if (!transpose) {
        for (int d = i; d <= j; ++d)
            out = apply_layer_factor(net.layers[d - 1], trace.layers[d - 1], out, false);
    } else {
        for (int d = j; d >= i; --d)
            out = apply_layer_factor(net.layers[d - 1], trace.layers[d - 1], out, true);
    }
    return out;
}

Matrix jacobian_explicit(const NetworkSpec& net, const Vector& x, int i, int j) {
    check_segment(net, i, j);
    const std::vector<int> dims = net.dims();
    if (i > j) {
        const int n = dims[static_cast<std::size_t>(std::min(i - 1, net.depth()))];
        return Matrix::Identity(n, n);
    }
    const ActivationTrace trace = forward(net, x);
    Matrix jac = Matrix::Identity(dims[i - 1], dims[i - 1]);
    for (int d = i; d <= j; ++d)
        jac = layer_factor_matrix(net.layers[d - 1], trace.layers[d - 1]) * jac;
    return jac;
}

NormEstimate jacobian_op_norm(const NetworkSpec& net, const Vector& x, int i, int j, double tol,
                              std::uint64_t seed, int max_iter) {
    check_segment(net, i, j);
    if (tol <= 0.0) throw ValidationError(errc::invalid_argument, "jacobian_op_norm: tol must be > 0");
    NormEstimate est;
    est.tol = tol;
    if (i > j) {
        est.value = 1.0;
        est.converged = true;
        return est;
    }
    const ActivationTrace trace = forward(net, x);
    const int n = net.dims()[i - 1];
    Vector v = seeded_start_vector<double>(n, seed);
    double lambda = 0.0, lambda_prev = -1.0;
    SplitMix64 redraw(substream(seed, 0x5eedULL));
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = jacobian_apply(net, trace, i, j, v, false);
        Vector z = jacobian_apply(net, trace, i, j, w, true);
        lambda = w.squaredNorm();
        est.iterations = it;
        const double zn = z.norm();
        if (zn == 0.0) {
            // v landed in the kernel; retry from fresh vectors, conclude a
            // zero operator if they all map to zero as well
            bool any = false;
            for (int t = 0; t < 4 && !any; ++t) {
                for (Eigen::Index r = 0; r < n; ++r) v(r) = redraw.next_symmetric();
                v /= v.norm();
                any = jacobian_apply(net, trace, i, j, v, false).squaredNorm() > 0.0;
            }
            if (!any) {
                est.value = 0.0;
                est.converged = true;
                return est;
            }
            lambda_prev = -1.0;
            continue;
        }
        v = z / zn;
        if (it > 1 && std::abs(lambda - lambda_prev) <= tol * std::max(lambda, 1e-300)) {
            est.converged = true;
            break;
        }
        lambda_prev = lambda;
    }
    est.value = std::sqrt(lambda);
    return est;
}

double product_layer_norm_bound(const NetworkSpec& net, double tol, std::uint64_t seed) {
    double prod = 1.0;
    for (std::size_t d = 0; d < net.layers.size(); ++d) {
        const Layer& layer = net.layers[d];
        if (const auto* dl = std::get_if<DenseLayer>(&layer)) {
            prod *= spectral_norm(dl->w, tol, 2000, substream(seed, d)).value;
        } else if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
            prod *= spectral_norm(cv->w, tol, 2000, substream(seed, d)).value;
        } else if (const auto* wc = std::get_if<WidthChangeLayer>(&layer)) {
            prod *= width_op_certified_norm(wc->op);
        } else {
            const auto& rb = std::get<ResNetBlockLayer>(layer);
            const double nu = spectral_norm(rb.u, tol, 2000, substream(seed, 2 * d + 1)).value;
            const double nv = spectral_norm(rb.v, tol, 2000, substream(seed, 2 * d + 2)).value;
            prod *= nu * nv + 1.0;
        }
    }
    return prod;
}

JacobianStats jacobian_stats(const NetworkSpec& net, const LabeledDataset& data, double tol,
                             std::uint64_t seed, bool include_leave_one) {
    const int m = data.m();
    if (m < 1) throw ValidationError(errc::invalid_argument, "jacobian_stats: empty dataset");
    const int depth = net.depth();
    JacobianStats stats;
    stats.tol = tol;
    stats.seed = seed;
    stats.per_input.resize(static_cast<std::size_t>(m));
    const std::uint64_t streams_per_input = 2 * static_cast<std::uint64_t>(depth) + 1;
    for (int idx = 0; idx < m; ++idx) {
        const Vector x = data.inputs.row(idx).transpose();
        JacobianStats::PerInput& pi = stats.per_input[static_cast<std::size_t>(idx)];
        const std::uint64_t base = static_cast<std::uint64_t>(idx) * streams_per_input;
        pi.full = jacobian_op_norm(net, x, 1, depth, tol, substream(seed, base)).value;
        if (include_leave_one) {
            pi.prefix.resize(static_cast<std::size_t>(depth));
            pi.suffix.resize(static_cast<std::size_t>(depth));
            for (int d = 1; d <= depth; ++d) {
                pi.prefix[d - 1] =
                    jacobian_op_norm(net, x, 1, d - 1, tol, substream(seed, base + 2 * d - 1)).value;
                pi.suffix[d - 1] =
                    jacobian_op_norm(net, x, d + 1, depth, tol, substream(seed, base + 2 * d)).value;
            }
        }
        // maxima reduced in dataset index order; ties keep the lowest index
        if (stats.full_argmax < 0 || pi.full > stats.full_max) {
            stats.full_max = pi.full;
            stats.full_argmax = idx;
        }
        if (include_leave_one) {
            for (int d = 1; d <= depth; ++d) {
                const double cand = pi.prefix[d - 1] * pi.suffix[d - 1];
                if (stats.leave_one_argmax_input < 0 || cand > stats.leave_one_max) {
                    stats.leave_one_max = cand;
                    stats.leave_one_argmax_layer = d;
                    stats.leave_one_argmax_input = idx;
                }
            }
        }
    }
    stats.prod_layer_bound = product_layer_norm_bound(net, tol, substream(seed, 0x9a0bULL));
    return stats;
}

namespace {

NetworkSpec densified(const NetworkSpec& net, const char* caller) {
    NetworkSpec out;
    out.input_dim = net.input_dim;
    out.layers.reserve(net.layers.size());
    for (const Layer& layer : net.layers) {
        if (const auto* dl = std::get_if<DenseLayer>(&layer)) {
            out.layers.push_back(DenseLayer{dl->w});
        } else if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
            out.layers.push_back(DenseLayer{cv->w});
        } else {
            throw ValidationError(errc::architecture_mismatch,
                                  std::string(caller) + ": dense/conv layers only");
        }
    }
    return out;
}

NetworkSpec suffix_network(const NetworkSpec& net, int from_layer) {
    NetworkSpec out;
    out.layers.assign(net.layers.begin() + from_layer, net.layers.end());
    out.input_dim = net.dims()[static_cast<std::size_t>(from_layer)];
    return out;
}

double suffix_norm_at(const NetworkSpec& net, int d, const Vector& point, double tol,
                      std::uint64_t seed) {
    if (d >= net.depth()) return 1.0;
    const NetworkSpec suf = suffix_network(net, d);
    return jacobian_op_norm(suf, point, 1, suf.depth(), tol, seed).value;
}

}  // namespace

ParamLipschitzResult param_lipschitz_bound(const NetworkSpec& net_a_in, const NetworkSpec& net_b_in,
                                           const Vector& x, double tol, std::uint64_t seed) {
    const NetworkSpec net_a = densified(net_a_in, "param_lipschitz_bound");
    const NetworkSpec net_b = densified(net_b_in, "param_lipschitz_bound");
    const int depth = net_a.depth();
    if (depth != net_b.depth() || net_a.input_dim != net_b.input_dim)
        throw ValidationError(errc::architecture_mismatch, "param_lipschitz_bound: nets differ");
    for (int d = 0; d < depth; ++d) {
        const auto& wa = std::get<DenseLayer>(net_a.layers[d]).w;
        const auto& wb = std::get<DenseLayer>(net_b.layers[d]).w;
        if (wa.rows() != wb.rows() || wa.cols() != wb.cols())
            throw ValidationError(errc::architecture_mismatch,
                                  "param_lipschitz_bound: layer shapes differ");
    }

    ParamLipschitzResult res;
    const Vector fa = forward(net_a, x).output();
    const Vector fb = forward(net_b, x).output();
    res.actual = (fa - fb).norm();

    double sum_sq = 0.0;
    double max_spec = 0.0;
    bool identical = true;
    for (int d = 0; d < depth; ++d) {
        const Matrix& wa = std::get<DenseLayer>(net_a.layers[d]).w;
        const Matrix& wb = std::get<DenseLayer>(net_b.layers[d]).w;
        if (wa != wb) identical = false;
        const auto sva = svd_small(wa);
        const auto svb = svd_small(wb);
        max_spec = std::max({max_spec, static_cast<double>(sva.s(0)), static_cast<double>(svb.s(0))});
        // balanced factors, zero-padded to a common rank per pair
        BalancedFactors<double> ba, bb;
        const bool a_zero = sva.s(0) == 0.0;
        const bool b_zero = svb.s(0) == 0.0;
        if (!a_zero) ba = balanced_factorize(wa);
        if (!b_zero) bb = balanced_factorize(wb);
        const Eigen::Index ra = a_zero ? 0 : ba.u.cols();
        const Eigen::Index rb = b_zero ? 0 : bb.u.cols();
        const Eigen::Index r = std::max<Eigen::Index>(std::max(ra, rb), 1);
        Matrix ua = Matrix::Zero(wa.rows(), r), va = Matrix::Zero(wa.cols(), r);
        Matrix ub = Matrix::Zero(wb.rows(), r), vb = Matrix::Zero(wb.cols(), r);
        if (!a_zero) {
            ua.leftCols(ra) = ba.u;
            va.leftCols(ra) = ba.v;
        }
        if (!b_zero) {
            ub.leftCols(rb) = bb.u;
            vb.leftCols(rb) = bb.v;
        }
        const double dv = frobenius_norm((va - vb).eval());
        const double du = frobenius_norm((ua - ub).eval());
        sum_sq += dv * dv + du * du;
    }
    if (identical) {
        res.bound = 0.0;
        res.jac_estimate = 0.0;
        return res;
    }

    // telescoping estimate: max over d of ||J_suffix|| at the two mixed
    // points, scaled by the exact prefix norm ||z_{d-1}||
    double prod_term = 0.0;
    Vector z = x;  // netB prefix activations
    for (int d = 1; d <= depth; ++d) {
        const double z_norm = z.norm();
        const Matrix& wa = std::get<DenseLayer>(net_a.layers[d - 1]).w;
        const Matrix& wb = std::get<DenseLayer>(net_b.layers[d - 1]).w;
        Vector ya = (wa * z).cwiseMax(0.0);
        Vector yb = (wb * z).cwiseMax(0.0);
        const std::uint64_t s0 = substream(seed, 2 * static_cast<std::uint64_t>(d));
        const std::uint64_t s1 = substream(seed, 2 * static_cast<std::uint64_t>(d) + 1);
        const double ns = std::max(suffix_norm_at(net_a, d, ya, tol, s0),
                                   suffix_norm_at(net_a, d, yb, tol, s1));
        prod_term = std::max(prod_term, ns * z_norm);
        z = std::move(yb);
    }
    const double x_norm = x.norm();
    res.jac_estimate = x_norm > 0.0 ? prod_term / x_norm : 0.0;
    res.bound = prod_term * std::sqrt(2.0 * depth) * std::sqrt(max_spec) * std::sqrt(sum_sq);
    return res;
}

ParamLipschitzResult resnet_param_lipschitz_bound(const NetworkSpec& net_a, const NetworkSpec& net_b,
                                                  const Vector& x, double tol, std::uint64_t seed) {
    const int depth = net_a.depth();
    if (depth != net_b.depth() || net_a.input_dim != net_b.input_dim)
        throw ValidationError(errc::architecture_mismatch, "resnet_param_lipschitz_bound: nets differ");
    for (int d = 0; d < depth; ++d) {
        const auto* ra = std::get_if<ResNetBlockLayer>(&net_a.layers[d]);
        const auto* rb = std::get_if<ResNetBlockLayer>(&net_b.layers[d]);
        if (ra == nullptr || rb == nullptr)
            throw ValidationError(errc::architecture_mismatch,
                                  "resnet_param_lipschitz_bound: resnet blocks only");
        if (ra->u.rows() != rb->u.rows() || ra->u.cols() != rb->u.cols() ||
            ra->v.rows() != rb->v.rows() || ra->v.cols() != rb->v.cols())
            throw ValidationError(errc::architecture_mismatch,
                                  "resnet_param_lipschitz_bound: block shapes differ");
    }

    ParamLipschitzResult res;
    res.actual = (forward(net_a, x).output() - forward(net_b, x).output()).norm();

    double sum_sq = 0.0;
    double max_vu = 0.0;
    bool identical = true;
    for (int d = 0; d < depth; ++d) {
        const auto& ra = std::get<ResNetBlockLayer>(net_a.layers[d]);
        const auto& rb = std::get<ResNetBlockLayer>(net_b.layers[d]);
        if (ra.u != rb.u || ra.v != rb.v) identical = false;
        const double nu = std::max(svd_small(ra.u).s(0), svd_small(rb.u).s(0));
        const double nv = std::max(svd_small(ra.v).s(0), svd_small(rb.v).s(0));
        max_vu = std::max(max_vu, nv + nu);
        const double dv = frobenius_norm((ra.v - rb.v).eval());
        const double du = frobenius_norm((ra.u - rb.u).eval());
        sum_sq += dv * dv + du * du;
    }
    if (identical) return res;

    auto block_out = [](const Matrix& v, const Matrix& u, const Vector& in) {
        Vector inner = (u * in).cwiseMax(0.0);
        Vector pre = v * inner;
        pre += in;
        return pre.cwiseMax(0.0).eval();
    };

    double prod_term = 0.0;
    Vector z = x;
    for (int d = 1; d <= depth; ++d) {
        const double z_norm = z.norm();
        const auto& la = std::get<ResNetBlockLayer>(net_a.layers[d - 1]);
        const auto& lb = std::get<ResNetBlockLayer>(net_b.layers[d - 1]);
        const Vector pt_full_b = block_out(lb.v, lb.u, z);
        const Vector pt_mixed = block_out(lb.v, la.u, z);
        const Vector pt_full_a = block_out(la.v, la.u, z);
        const std::uint64_t s0 = substream(seed, 3 * static_cast<std::uint64_t>(d));
        const std::uint64_t s1 = substream(seed, 3 * static_cast<std::uint64_t>(d) + 1);
        const std::uint64_t s2 = substream(seed, 3 * static_cast<std::uint64_t>(d) + 2);
        double ns = suffix_norm_at(net_a, d, pt_full_b, tol, s0);
        ns = std::max(ns, suffix_norm_at(net_a, d, pt_mixed, tol, s1));
        ns = std::max(ns, suffix_norm_at(net_a, d, pt_full_a, tol, s2));
        prod_term = std::max(prod_term, ns * z_norm);
        z = pt_full_b;
    }
    const double x_norm = x.norm();
    res.jac_estimate = x_norm > 0.0 ? prod_term / x_norm : 0.0;
    res.bound = prod_term * max_vu * std::sqrt(2.0 * depth) * std::sqrt(sum_sq);
    return res;
}

LayerGrads backward(const NetworkSpec& net, const ActivationTrace& trace, const Vector& d_out) {
    if (trace.layers.size() != net.layers.size())
        throw ValidationError(errc::dimension_mismatch, "backward: trace does not match network");
    LayerGrads grads;
    grads.layers.resize(net.layers.size());
    Vector delta = d_out;
    for (int d = net.depth() - 1; d >= 0; --d) {
        const ActivationTrace::Entry& e = trace.layers[static_cast<std::size_t>(d)];
        const Vector& a_prev = d == 0 ? trace.input : trace.layers[static_cast<std::size_t>(d - 1)].post;
        LayerGrads::Entry& g = grads.layers[static_cast<std::size_t>(d)];
        if (const auto* dl = std::get_if<DenseLayer>(&net.layers[static_cast<std::size_t>(d)])) {
            const Vector dpre = e.mask.cwiseProduct(delta);
            g.w.noalias() = dpre * a_prev.transpose();
            delta = dl->w.transpose() * dpre;
        } else if (const auto* cv =
                       std::get_if<ConvCirculantLayer>(&net.layers[static_cast<std::size_t>(d)])) {
            const Vector dpre = e.mask.cwiseProduct(delta);
            const int p = cv->p_prev, s = cv->bank.s, k = cv->bank.k;
            const int rows_per = p / s;
            g.filters = Matrix::Zero(cv->bank.n, k);
            for (int j = 0; j < cv->bank.n; ++j)
                for (int r = 0; r < rows_per; ++r) {
                    const double dr = dpre(j * rows_per + r);
                    if (dr == 0.0) continue;
                    for (int t = 0; t < k; ++t) g.filters(j, t) += dr * a_prev((r * s + t) % p);
                }
            delta = cv->w.transpose() * dpre;
        } else if (const auto* wc =
                       std::get_if<WidthChangeLayer>(&net.layers[static_cast<std::size_t>(d)])) {
            if (wc->op.kind == WidthOp::Kind::max_pool) {
                Vector up = Vector::Zero(wc->op.p);
                for (Eigen::Index r = 0; r < e.pool_sel.size(); ++r) up(e.pool_sel(r)) += delta(r);
                delta = std::move(up);
            } else {
                delta = width_op_matrix(wc->op).transpose() * delta;
            }
        } else {
            const auto& rb = std::get<ResNetBlockLayer>(net.layers[static_cast<std::size_t>(d)]);
            const Vector dpre = e.mask.cwiseProduct(delta);
            g.v.noalias() = dpre * e.inner_post.transpose();
            const Vector dinner = e.inner_mask.cwiseProduct(rb.v.transpose() * dpre);
            g.u.noalias() = dinner * a_prev.transpose();
            delta = rb.u.transpose() * dinner;
            delta += dpre;  // skip connection
        }
    }
    grads.input = std::move(delta);
    return grads;
}

}  // namespace gbaudit
