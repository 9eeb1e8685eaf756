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

#include "gbaudit/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace gbaudit {

namespace {

void require_positive_m(int m, const char* caller) {
    if (m < 1) throw ValidationError(errc::invalid_argument, std::string(caller) + ": m must be >= 1");
}

void require_depth(const NormTable& norms, const char* caller) {
    if (norms.depth() < 1)
        throw ValidationError(errc::invalid_argument, std::string(caller) + ": needs D >= 1 layers");
}

NormRow norm_row_for(const std::string& name, const Matrix& w) {
    NormRow row;
    row.name = name;
    const auto svd = svd_small(w);
    row.spectral = svd.s(0);
    row.frobenius = frobenius_norm(w);
    row.two_one = two_one_norm(w);
    const double rank_tol = static_cast<double>(std::max(w.rows(), w.cols())) *
                            std::numeric_limits<double>::epsilon() * svd.s(0);
    row.rank = 0;
    for (Eigen::Index i = 0; i < svd.s.size(); ++i)
        if (svd.s(i) > rank_tol) ++row.rank;
    row.width = static_cast<int>(w.rows());
    row.in_width = static_cast<int>(w.cols());
    row.stable_ratio = row.spectral > 0.0 ? row.frobenius / row.spectral : 0.0;
    return row;
}

}  // namespace

double NormTable::prod_spectral() const {
    double p = 1.0;
    for (const NormRow& r : rows) p *= r.spectral;
    return p;
}

double NormTable::prod_frobenius() const {
    double p = 1.0;
    for (const NormRow& r : rows) p *= r.frobenius;
    return p;
}

double NormTable::max_spectral() const {
    double v = 0.0;
    for (const NormRow& r : rows) v = std::max(v, r.spectral);
    return v;
}

int NormTable::max_width() const {
    int v = 0;
    for (const NormRow& r : rows) v = std::max(v, r.width);
    return v;
}

double NormTable::weighted_rank_sum() const {
    double s = 0.0;
    for (const NormRow& r : rows) s += r.rank * (static_cast<double>(r.width) + r.in_width) / 2.0;
    return s;
}

double NormTable::mean_rank() const {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const NormRow& r : rows) s += r.rank;
    return s / rows.size();
}

NormTable layer_norm_report(const NetworkSpec& net, double /*tol*/, std::uint64_t /*seed*/) {
    NormTable table;
    int idx = 0;
    for (const Layer& layer : net.layers) {
        ++idx;
        const std::string name = "layer" + std::to_string(idx);
        if (const auto* dl = std::get_if<DenseLayer>(&layer)) {
            table.rows.push_back(norm_row_for(name, dl->w));
        } else if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
            table.rows.push_back(norm_row_for(name, cv->w));
        } else if (const auto* rb = std::get_if<ResNetBlockLayer>(&layer)) {
            table.rows.push_back(norm_row_for(name + ".u", rb->u));
            table.rows.push_back(norm_row_for(name + ".v", rb->v));
        }
        // width-change layers enter through width_op_multiplier instead
    }
    for (const NormRow& r : table.rows) {
        if (r.spectral > r.frobenius * (1.0 + 1e-8) ||
            r.frobenius > r.two_one * (1.0 + 1e-8))
            throw NumericError(errc::svd_failure, "norm table row violates norm ordering");
    }
    return table;
}

double ResnetNorms::max_vu_sum() const {
    double v = 0.0;
    for (const Block& b : blocks) v = std::max(v, b.u_spectral + b.v_spectral);
    return v;
}

int ResnetNorms::max_p() const {
    int v = 0;
    for (const Block& b : blocks) v = std::max(v, b.p);
    return v;
}

int ResnetNorms::max_q() const {
    int v = 0;
    for (const Block& b : blocks) v = std::max(v, b.q);
    return v;
}

ResnetNorms resnet_norm_report(const NetworkSpec& net) {
    ResnetNorms norms;
    for (const Layer& layer : net.layers) {
        const auto* rb = std::get_if<ResNetBlockLayer>(&layer);
        if (rb == nullptr)
            throw ValidationError(errc::architecture_mismatch,
                                  "resnet_norm_report: resnet blocks only");
        ResnetNorms::Block block;
        block.u_spectral = svd_small(rb->u).s(0);
        block.v_spectral = svd_small(rb->v).s(0);
        block.p = static_cast<int>(rb->v.rows());
        block.q = static_cast<int>(rb->u.rows());
        norms.blocks.push_back(block);
    }
    if (norms.blocks.empty())
        throw ValidationError(errc::invalid_argument, "resnet_norm_report: empty network");
    return norms;
}

double log_c_net(double c_net) {
    if (!(c_net > 0.0) || !std::isfinite(c_net))
        throw ValidationError(errc::degenerate_input, "C^Net is degenerate (zero or non-finite)");
    return std::max(std::log(c_net), 1.0);
}

Thm1Breakdown bound_thm1_detailed(const NormTable& norms, const JacobianStats& jac, int m,
                                  double gamma, double R, double sup_loss) {
    require_positive_m(m, "bound_thm1");
    require_depth(norms, "bound_thm1");
    if (gamma <= 0.0) throw ValidationError(errc::invalid_argument, "bound_thm1: gamma must be > 0");
    if (sup_loss < 0.0)
        throw ValidationError(errc::invalid_argument, "bound_thm1: sup_loss must be >= 0");
    Thm1Breakdown out;
    out.rank_sum = norms.weighted_rank_sum();
    out.mean_rank = norms.mean_rank();
    const double max_b = norms.max_spectral();
    if (max_b <= 0.0 || out.mean_rank <= 0.0)
        throw ValidationError(errc::degenerate_input, "bound_thm1: all-zero network");
    const int depth = norms.depth();
    out.c_net = jac.leave_one_max * R * std::sqrt(depth * static_cast<double>(m) / out.mean_rank) *
                max_b / (gamma * std::max(sup_loss, kSupLossFloor));
    out.log_c_net = log_c_net(out.c_net);
    out.value = (R * jac.full_max / gamma) * std::sqrt(out.rank_sum * out.log_c_net / m);
    return out;
}

double bound_thm1(const NormTable& norms, const JacobianStats& jac, int m, double gamma, double R,
                  double sup_loss) {
    return bound_thm1_detailed(norms, jac, m, gamma, R, sup_loss).value;
}

double bound_cor1(const NormTable& norms, const JacobianStats& jac, int m, double gamma, double R,
                  double sup_loss, double b) {
    if (b <= 0.0) throw ValidationError(errc::invalid_argument, "bound_cor1: b must be > 0");
    const Thm1Breakdown base = bound_thm1_detailed(norms, jac, m, gamma, R, sup_loss);
    return std::min(R * jac.full_max / gamma, b) * std::sqrt(base.rank_sum * base.log_c_net / m);
}

double bound_neyshabur15(const NormTable& norms, int m, double gamma) {
    require_positive_m(m, "bound_neyshabur15");
    require_depth(norms, "bound_neyshabur15");
    if (gamma <= 0.0)
        throw ValidationError(errc::invalid_argument, "bound_neyshabur15: gamma must be > 0");
    return std::pow(2.0, norms.depth()) * norms.prod_frobenius() / (gamma * std::sqrt(m));
}

double bound_bartlett17(const NormTable& norms, int m, double gamma, double p_max) {
    require_positive_m(m, "bound_bartlett17");
    require_depth(norms, "bound_bartlett17");
    if (gamma <= 0.0 || p_max < 1.0)
        throw ValidationError(errc::invalid_argument, "bound_bartlett17: bad gamma or width");
    double sum = 0.0;
    for (const NormRow& r : norms.rows) {
        if (r.spectral <= 0.0)
            throw ValidationError(errc::degenerate_input, "bound_bartlett17: zero spectral norm");
        sum += std::pow(r.two_one / r.spectral, 2.0 / 3.0);
    }
    const double log_p = std::max(std::log(p_max), 1.0);
    return norms.prod_spectral() * log_p * std::pow(sum, 1.5) / (gamma * std::sqrt(m));
}

double bound_neyshabur_pac(const NormTable& norms, int m, double gamma, double p_max) {
    require_positive_m(m, "bound_neyshabur_pac");
    require_depth(norms, "bound_neyshabur_pac");
    if (gamma <= 0.0 || p_max < 1.0)
        throw ValidationError(errc::invalid_argument, "bound_neyshabur_pac: bad gamma or width");
    const int depth = norms.depth();
    double sum = 0.0;
    for (const NormRow& r : norms.rows) {
        if (r.spectral <= 0.0)
            throw ValidationError(errc::degenerate_input, "bound_neyshabur_pac: zero spectral norm");
        const double ratio = r.frobenius / r.spectral;
        sum += ratio * ratio;
    }
    return norms.prod_spectral() * std::log(depth * p_max) *
           std::sqrt(static_cast<double>(depth) * depth * p_max * sum) / (gamma * std::sqrt(m));
}

bool golowich_stable_rank_one(const NormTable& norms) {
    const double prod_fr = norms.prod_frobenius();
    const double prod_sp = norms.prod_spectral();
    return prod_fr <= prod_sp * (1.0 + 1e-12);
}

double bound_golowich(const NormTable& norms, int m, double gamma) {
    require_positive_m(m, "bound_golowich");
    require_depth(norms, "bound_golowich");
    if (gamma <= 0.0)
        throw ValidationError(errc::invalid_argument, "bound_golowich: gamma must be > 0");
    const double prod_fr = norms.prod_frobenius();
    const double prod_sp = norms.prod_spectral();
    if (prod_sp <= 0.0)
        throw ValidationError(errc::degenerate_input, "bound_golowich: zero spectral product");
    const double log_term = std::max(std::log(prod_fr / prod_sp), 0.0);
    const double left = std::sqrt(log_term) / std::pow(static_cast<double>(m), 0.25);
    const double right = std::sqrt(static_cast<double>(norms.depth()) / m);
    return (prod_fr / gamma) * std::min(left, right);
}

CapacityTerms capacity_terms_sec5(const NormTable& norms, int k, const std::vector<int>& n_list) {
    require_depth(norms, "capacity_terms_sec5");
    if (k < 1) throw ValidationError(errc::invalid_argument, "capacity_terms_sec5: k must be >= 1");
    if (n_list.empty())
        throw ValidationError(errc::invalid_argument, "capacity_terms_sec5: empty filter counts");
    const int depth = norms.depth();
    const double prod_sp = norms.prod_spectral();
    double n_sum = 0.0;
    for (int n : n_list) {
        if (n < 1)
            throw ValidationError(errc::invalid_argument, "capacity_terms_sec5: filter counts >= 1");
        n_sum += n;
    }
    CapacityTerms terms;
    terms.ours = prod_sp * std::sqrt(k * n_sum);
    double sum1 = 0.0, sum2 = 0.0;
    for (const NormRow& r : norms.rows) {
        if (r.spectral <= 0.0)
            throw ValidationError(errc::degenerate_input, "capacity_terms_sec5: zero spectral norm");
        sum1 += std::pow(r.two_one / r.spectral, 2.0 / 3.0);
        const double ratio = r.frobenius / r.spectral;
        sum2 += r.width * ratio * ratio;
    }
    terms.bound1 = prod_sp * std::pow(sum1, 1.5);
    terms.bound2 =
        prod_sp * std::sqrt(static_cast<double>(depth) * depth * norms.max_width() * sum2);
    terms.bound3 = norms.prod_frobenius() * std::sqrt(static_cast<double>(depth));
    return terms;
}

double bound_cor2_cnn(int k, int s, const std::vector<int>& n_list, int D, double b_jac_leave_one,
                      int m, double gamma, double R, double b, double sup_loss) {
    require_positive_m(m, "bound_cor2_cnn");
    if (k < 1 || s < 1 || D < 1)
        throw ValidationError(errc::invalid_argument, "bound_cor2_cnn: k, s, D must be >= 1");
    if (k % s != 0) throw ValidationError(errc::structure, "bound_cor2_cnn: s must divide k");
    if (gamma <= 0.0 || b <= 0.0)
        throw ValidationError(errc::invalid_argument, "bound_cor2_cnn: gamma and b must be > 0");
    double n_sum = 0.0;
    for (int n : n_list) n_sum += n;
    const double c_net = b_jac_leave_one * R * std::sqrt(static_cast<double>(D) * m / s) /
                         (gamma * std::max(sup_loss, kSupLossFloor));
    const double log_c = log_c_net(c_net);
    const double alpha = std::min(R * std::pow(static_cast<double>(k) / s, D / 2.0) / gamma, b);
    return alpha * std::sqrt(k * n_sum * log_c / m);
}

double bound_cor2_mixed(int k, int s, int d_conv, int d_fc, int p, int r, double b_jac_leave_one,
                        int m, double gamma, double R, double b, double sup_loss) {
    require_positive_m(m, "bound_cor2_mixed");
    if (k < 1 || s < 1 || d_conv < 1 || d_fc < 0 || p < 1 || r < 1)
        throw ValidationError(errc::invalid_argument, "bound_cor2_mixed: bad sizes");
    if (k % s != 0) throw ValidationError(errc::structure, "bound_cor2_mixed: s must divide k");
    if (gamma <= 0.0 || b <= 0.0)
        throw ValidationError(errc::invalid_argument, "bound_cor2_mixed: gamma and b must be > 0");
    const int depth = d_conv + d_fc;
    const double c_net = b_jac_leave_one * R * std::sqrt(static_cast<double>(depth) * m / s) /
                         (gamma * std::max(sup_loss, kSupLossFloor));
    const double log_c = log_c_net(c_net);
    const double param_term = static_cast<double>(d_conv) * k * k + static_cast<double>(d_fc) * p * r;
    const double alpha =
        std::min(R * std::pow(static_cast<double>(k) / s, d_conv / 2.0) / gamma, b);
    return alpha * std::sqrt(param_term * log_c / m);
}

Table2Values table2_cnn_variants(int k, int s, int p, int D, int m) {
    require_positive_m(m, "table2_cnn_variants");
    if (k < 1 || s < 1 || p < 1 || D < 1)
        throw ValidationError(errc::invalid_argument, "table2_cnn_variants: sizes must be >= 1");
    Table2Values v;
    const double sqrt_m = std::sqrt(static_cast<double>(m));
    const double ks = static_cast<double>(k) / s;
    v.neyshabur15 = std::pow(2.0, D) * std::pow(static_cast<double>(p), D / 2.0) / sqrt_m;
    v.bartlett_pac = std::pow(ks, (D - 1) / 2.0) *
                     std::sqrt(std::pow(static_cast<double>(D), 3) * static_cast<double>(p) * p) /
                     sqrt_m;
    v.golowich = std::pow(static_cast<double>(p), D / 2.0) *
                 std::min(std::pow(static_cast<double>(m), -0.25),
                          std::sqrt(static_cast<double>(D) / m));
    v.ours = std::pow(ks, D / 2.0) * std::sqrt(static_cast<double>(D) * k * k) / sqrt_m;
    return v;
}

double bound_cor3_resnet(const ResnetNorms& norms, const JacobianStats& jac, int m, double gamma,
                         double R, double b, int q, double sup_loss) {
    require_positive_m(m, "bound_cor3_resnet");
    if (norms.blocks.empty())
        throw ValidationError(errc::invalid_argument, "bound_cor3_resnet: empty norms");
    if (gamma <= 0.0 || b <= 0.0 || q < 1)
        throw ValidationError(errc::invalid_argument, "bound_cor3_resnet: bad gamma, b or q");
    const int depth = static_cast<int>(norms.blocks.size());
    const int p = norms.max_p();
    const double c_net = jac.leave_one_max * norms.max_vu_sum() * R *
                         std::sqrt(static_cast<double>(m) / q) /
                         (gamma * std::max(sup_loss, kSupLossFloor));
    const double log_c = log_c_net(c_net);
    const double alpha = std::min(R * jac.full_max / gamma, b);
    return alpha * std::sqrt(static_cast<double>(depth) * p * q * log_c / m);
}

double width_op_multiplier(const std::vector<WidthOp>& ops) {
    double prod = 1.0;
    for (const WidthOp& op : ops) prod *= width_op_certified_norm(op);
    return prod;
}

double dudley_erc_bound(double alpha, double l_w, double k_param, double h, int m) {
    require_positive_m(m, "dudley_erc_bound");
    if (alpha <= 0.0 || l_w <= 0.0 || k_param <= 0.0 || h <= 0.0)
        throw ValidationError(errc::invalid_argument, "dudley_erc_bound: arguments must be > 0");
    const double sqrt_m = std::sqrt(static_cast<double>(m));
    const double log_arg = k_param * l_w * sqrt_m / (alpha * std::sqrt(h));
    const double log_term = std::max(std::log(log_arg), 1.0);
    return alpha * std::sqrt(h * log_term) / sqrt_m;
}

double gen_error_rhs(double emp_risk, double erc_value, int m, double delta) {
    require_positive_m(m, "gen_error_rhs");
    if (delta <= 0.0 || delta >= 1.0)
        throw ValidationError(errc::invalid_argument, "gen_error_rhs: delta must be in (0,1)");
    if (emp_risk < 0.0 || erc_value < 0.0)
        throw ValidationError(errc::invalid_argument, "gen_error_rhs: risks must be >= 0");
    return emp_risk + 2.0 * erc_value + 3.0 * std::sqrt(std::log(2.0 / delta) / (2.0 * m));
}

}  // namespace gbaudit
