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

#ifndef GBAUDIT_BOUNDS_HPP
#define GBAUDIT_BOUNDS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gbaudit/network.hpp"

namespace gbaudit {

/// Per-layer norm and rank summary for the weight-bearing layers. Width-change
/// layers do not appear here; their contribution enters through
/// width_op_multiplier.
struct NormRow {
    std::string name;       ///< e.g. "layer3", "layer2.u"
    double spectral = 0.0;
    double frobenius = 0.0;
    double two_one = 0.0;
    int rank = 0;
    int width = 0;          ///< output width p_d
    int in_width = 0;
    double stable_ratio = 0.0;  ///< frobenius / spectral
};

struct NormTable {
    std::vector<NormRow> rows;

    int depth() const { return static_cast<int>(rows.size()); }
    double prod_spectral() const;
    double prod_frobenius() const;
    double max_spectral() const;
    int max_width() const;
    /// sum over layers of r_d * (rows_d + cols_d) / 2, the balanced-factor
    /// parameter count halved; reduces to D*p*r in the homogeneous case
    double weighted_rank_sum() const;
    double mean_rank() const;
};

/// Norms of every materialized weight in the net (dense and circulant-conv
/// layers; resnet blocks contribute one row per factor).
NormTable layer_norm_report(const NetworkSpec& net, double tol = 1e-10, std::uint64_t seed = 0);

/// ResNet block norms for the corresponding capacity corollary.
struct ResnetNorms {
    struct Block {
        double u_spectral = 0.0;
        double v_spectral = 0.0;
        int p = 0;  ///< block width
        int q = 0;  ///< inner width
    };
    std::vector<Block> blocks;
    double max_vu_sum() const;
    int max_p() const;
    int max_q() const;
};

ResnetNorms resnet_norm_report(const NetworkSpec& net);

/// Shared C^Net handling: the supremum of the loss is approximated by the
/// observed max ramp loss, floored at epsilon so the quotient stays finite;
/// log C^Net is floored at 1.
inline constexpr double kSupLossFloor = 1e-6;
double log_c_net(double c_net);

struct Thm1Breakdown {
    double value = 0.0;
    double c_net = 0.0;
    double log_c_net = 0.0;
    double rank_sum = 0.0;  ///< sum_d p_d r_d term
    double mean_rank = 0.0;
};

/// Jacobian-based capacity value: R * B_jac * sqrt(rank_sum * log C) / (gamma sqrt(m)).
Thm1Breakdown bound_thm1_detailed(const NormTable& norms, const JacobianStats& jac, int m,
                                  double gamma, double R, double sup_loss);
double bound_thm1(const NormTable& norms, const JacobianStats& jac, int m, double gamma, double R,
                  double sup_loss);

/// Bounded-loss refinement: min{R*B_jac/gamma, b} * sqrt(rank_sum * log C / m).
double bound_cor1(const NormTable& norms, const JacobianStats& jac, int m, double gamma, double R,
                  double sup_loss, double b);

/// Competing closed-form capacity bounds, all universal constants set to 1.
double bound_neyshabur15(const NormTable& norms, int m, double gamma);
double bound_bartlett17(const NormTable& norms, int m, double gamma, double p_max);
double bound_neyshabur_pac(const NormTable& norms, int m, double gamma, double p_max);
/// Frobenius-product bound; Gamma is taken as prod of spectral norms (its
/// largest admissible value) and negative logs clamp to zero.
double bound_golowich(const NormTable& norms, int m, double gamma);
bool golowich_stable_rank_one(const NormTable& norms);

/// The four capacity terms compared in the experiments, common factor
/// R/(gamma sqrt(m)) dropped.
struct CapacityTerms {
    double ours = 0.0;
    double bound1 = 0.0;  ///< spectral + (2,1) norms
    double bound2 = 0.0;  ///< spectral + Frobenius norms
    double bound3 = 0.0;  ///< Frobenius product
};

CapacityTerms capacity_terms_sec5(const NormTable& norms, int k, const std::vector<int>& n_list);

/// Orthogonal-filter CNN capacity bound.
double bound_cor2_cnn(int k, int s, const std::vector<int>& n_list, int D, double b_jac_leave_one,
                      int m, double gamma, double R, double b, double sup_loss);

/// Mixed conv + dense variant: parameter term D_C k^2 + D_F p r.
double bound_cor2_mixed(int k, int s, int d_conv, int d_fc, int p, int r, double b_jac_leave_one,
                        int m, double gamma, double R, double b, double sup_loss);

/// Closed-form values of the competing bounds for orthogonal-filter CNNs
/// (spectral sqrt(k/s), Frobenius sqrt(p), (2,1)-norm p substituted).
struct Table2Values {
    double neyshabur15 = 0.0;
    double bartlett_pac = 0.0;  ///< shared by the two spectral-norm bounds
    double golowich = 0.0;
    double ours = 0.0;
};

Table2Values table2_cnn_variants(int k, int s, int p, int D, int m);

/// ResNet capacity bound.
double bound_cor3_resnet(const ResnetNorms& norms, const JacobianStats& jac, int m, double gamma,
                         double R, double b, int q, double sup_loss);

/// Product of certified spectral norms of width-change operators.
double width_op_multiplier(const std::vector<WidthOp>& ops);

/// Covering-number capacity bound: alpha * sqrt(h log(K L_w sqrt(m)/(alpha sqrt(h)))) / sqrt(m),
/// log floored at 1.
double dudley_erc_bound(double alpha, double l_w, double k_param, double h, int m);

/// Generalization RHS: emp_risk + 2 erc + 3 sqrt(log(2/delta) / (2m)).
double gen_error_rhs(double emp_risk, double erc_value, int m, double delta);

}  // namespace gbaudit

#endif  // GBAUDIT_BOUNDS_HPP
