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

#ifndef GBAUDIT_STRUCTURED_HPP
#define GBAUDIT_STRUCTURED_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gbaudit/linalg.hpp"

namespace gbaudit {

/// A layer's convolution filters: n filters of length k applied with stride
/// s. When `orthonormal` is set the constructor has verified that the filters
/// are pairwise orthogonal with unit norm (within 1e-10) and n <= k.
struct FilterBank {
    int n = 0;
    int k = 0;
    int s = 1;
    Matrix filters;  ///< n x k, one filter per row
    bool orthonormal = false;
};

/// Validating constructor for FilterBank.
FilterBank make_filter_bank(int n, int k, int s, Matrix filters, bool claim_orthonormal = false);

/// 2-D filters: n filters, each sqrt(k) rows of length sqrt(k), applied to a
/// vectorized sqrt(p) x sqrt(p) input with stride s.
struct FilterBank2d {
    int n = 0;
    int k = 0;  ///< k = (filter side)^2
    int s = 1;
    std::vector<Matrix> filters;  ///< each sqrt(k) x sqrt(k)
};

/// Width-change operators between layers: linear maps with closed-form
/// spectral norms.
struct WidthOp {
    enum class Kind { padding, one_by_one_conv, avg_pool, max_pool };
    Kind kind = Kind::padding;
    int p = 0;             ///< input width
    int s = 1;             ///< expansion / reduction factor
    Vector coeffs;         ///< 1x1 conv only
    bool signed_maxpool = false;  ///< compare signed values instead of |x|
};

const char* width_op_kind_name(WidthOp::Kind k);
WidthOp::Kind width_op_kind_from_name(const std::string& name);

/// One circulant-like block: (p_prev/s) x p_prev, row i placing the filter at
/// column (i-1)s+1 (1-indexed) with wrap-around.
Matrix circulant_block(const Vector& w, int p_prev, int s);

/// Full convolution weight matrix: the n circulant blocks stacked vertically,
/// (n*p_prev/s) x p_prev.
Matrix conv_weight(const FilterBank& bank, int p_prev);

/// 2-D layout: per filter, a block-diagonal stack of circulant blocks whose
/// generator concatenates the filter rows, each padded with
/// sqrt(p_prev/k) - sqrt(k) zeros; remaining column blocks are zero. The
/// spectral claims attached to this construction in the source material are
/// normalization-dependent, so they are measured and reported by
/// conv2d_norm_certificate rather than asserted here.
Matrix conv_weight_2d(const FilterBank2d& bank, int p_prev);

struct Conv2dCertificate {
    double measured;            ///< spectral norm of the built matrix
    double unit_rows_bound;     ///< k/s, the claim under per-row unit norms
    double sum_norm;            ///< sqrt(sum_i ||w^{(j,i)}||^2), max over filters
    bool unit_rows_bound_holds; ///< measured <= k/s + 1e-8
};

Conv2dCertificate conv2d_norm_certificate(const FilterBank2d& bank, int p_prev,
                                          double tol = 1e-10, std::uint64_t seed = 0);

/// Gram-Schmidt on seeded Gaussian vectors; result is flagged orthonormal.
FilterBank orthonormalize_filters(int n, int k, std::uint64_t seed, int s = 1);

/// Zero padding: sp x p with a single 1 per column at row j*s (1-indexed).
Matrix padding_op(int p, int s);

/// 1x1 convolution expansion: input feature j maps to the s slots of block j,
/// slot t carrying coeffs[t]*x_j. Column supports are disjoint, so the
/// spectral norm is exactly sqrt(sum coeffs^2); padding_op is the special
/// case coeffs = (0,...,0,1).
Matrix one_by_one_conv_op(const Vector& coeffs, int p);

/// Average pooling over nonoverlapping segments: (p/s) x p, entries 1/s.
Matrix avg_pool_op(int p, int s);

struct MaxPoolResult {
    Matrix selector;          ///< 0/1 selection matrix, (p/s) x p
    Vector pooled;            ///< selector * x
    Eigen::VectorXi indices;  ///< selected index per segment (0-based)
};

/// Max pooling: per nonoverlapping segment of length s, select the entry of
/// largest absolute value (ties broken by lowest index). `signed_compare`
/// switches to the conventional signed comparison.
MaxPoolResult max_pool_op(const Vector& x, int s, bool signed_compare = false);

/// Materialize the operator matrix; max_pool needs the input vector.
Matrix width_op_matrix(const WidthOp& op, const Vector* x = nullptr);

/// Closed-form spectral norm of a width op (padding/max_pool 1, avg_pool
/// sqrt(1/s), 1x1 conv sqrt(sum c^2)).
double width_op_certified_norm(const WidthOp& op);

int width_op_output_dim(const WidthOp& op);

}  // namespace gbaudit

#endif  // GBAUDIT_STRUCTURED_HPP
