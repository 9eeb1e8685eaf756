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

#include "gbaudit/structured.hpp"

#include <cmath>

namespace gbaudit {

namespace {

int isqrt_exact(int v, const char* what) {
    const int r = static_cast<int>(std::llround(std::sqrt(static_cast<double>(v))));
    if (r * r != v) throw ValidationError(errc::structure, std::string(what) + " must be a perfect square");
    return r;
}

}  // namespace

FilterBank make_filter_bank(int n, int k, int s, Matrix filters, bool claim_orthonormal) {
    if (n < 1 || k < 1 || s < 1)
        throw ValidationError(errc::invalid_argument, "filter bank: n, k, s must be positive");
    if (k % s != 0) throw ValidationError(errc::structure, "filter bank: s must divide k");
    if (filters.rows() != n || filters.cols() != k)
        throw ValidationError(errc::dimension_mismatch, "filter bank: filters must be n x k");
    if (!all_finite(filters))
        throw ValidationError(errc::nonfinite_input, "filter bank: non-finite filter entries");
    if (claim_orthonormal) {
        if (n > k)
            throw ValidationError(errc::infeasible, "filter bank: orthonormal requires n <= k");
        const Matrix gram = filters * filters.transpose();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double target = (i == j) ? 1.0 : 0.0;
                if (std::abs(gram(i, j) - target) > 1e-10)
                    throw ValidationError(errc::structure,
                                          "filter bank: filters are not orthonormal within 1e-10");
            }
    }
    FilterBank bank;
    bank.n = n;
    bank.k = k;
    bank.s = s;
    bank.filters = std::move(filters);
    bank.orthonormal = claim_orthonormal;
    return bank;
}

Matrix circulant_block(const Vector& w, int p_prev, int s) {
    const int k = static_cast<int>(w.size());
    if (k < 1 || s < 1 || p_prev < 1)
        throw ValidationError(errc::invalid_argument, "circulant_block: sizes must be positive");
    if (k % s != 0) throw ValidationError(errc::structure, "circulant_block: s must divide k");
    if (p_prev % s != 0)
        throw ValidationError(errc::structure, "circulant_block: s must divide p_prev");
    if (k > p_prev)
        throw ValidationError(errc::structure, "circulant_block: filter longer than input width");
    const int rows = p_prev / s;
    Matrix out = Matrix::Zero(rows, p_prev);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < k; ++j) out(i, (i * s + j) % p_prev) = w(j);
    return out;
}

Matrix conv_weight(const FilterBank& bank, int p_prev) {
    if (bank.n < 1) throw ValidationError(errc::structure, "conv_weight: empty bank");
    const int rows_per = p_prev / bank.s;  // divisibility checked by circulant_block
    Matrix out(bank.n * rows_per, p_prev);
    for (int j = 0; j < bank.n; ++j)
        out.middleRows(j * rows_per, rows_per) =
            circulant_block(bank.filters.row(j).transpose(), p_prev, bank.s);
    return out;
}

Matrix conv_weight_2d(const FilterBank2d& bank, int p_prev) {
    if (bank.n < 1 || static_cast<int>(bank.filters.size()) != bank.n)
        throw ValidationError(errc::structure, "conv_weight_2d: filter count mismatch");
    const int rk = isqrt_exact(bank.k, "conv_weight_2d: k");
    const int rp = isqrt_exact(p_prev, "conv_weight_2d: p_prev");
    if (rp % rk != 0)
        throw ValidationError(errc::structure, "conv_weight_2d: sqrt(k) must divide sqrt(p_prev)");
    const int pad = rp / rk - rk;  // sqrt(p/k) - sqrt(k) zeros after each filter row
    if (pad < 0)
        throw ValidationError(errc::structure, "conv_weight_2d: requires p_prev >= k^2");
    if (bank.s % rk != 0)
        throw ValidationError(errc::structure, "conv_weight_2d: sqrt(k) must divide s");
    const int t = bank.s / rk;  // per-block stride
    if (rp % t != 0)
        throw ValidationError(errc::structure, "conv_weight_2d: block stride must divide sqrt(p_prev)");

    const int block_rows = rp / t;       // rows per circulant block
    const int n_blocks = block_rows;     // diagonal blocks per filter
    Matrix out = Matrix::Zero(bank.n * n_blocks * block_rows, p_prev);
    for (int j = 0; j < bank.n; ++j) {
        const Matrix& f = bank.filters[static_cast<std::size_t>(j)];
        if (f.rows() != rk || f.cols() != rk)
            throw ValidationError(errc::dimension_mismatch,
                                  "conv_weight_2d: each filter must be sqrt(k) x sqrt(k)");
        Vector gen = Vector::Zero(rp);
        for (int r = 0; r < rk; ++r) gen.segment(r * (rk + pad), rk) = f.row(r).transpose();
        const Matrix block = circulant_block(gen, rp, t);
        const int base = j * n_blocks * block_rows;
        for (int b = 0; b < n_blocks; ++b)
            out.block(base + b * block_rows, b * rp, block_rows, rp) = block;
    }
    return out;
}

Conv2dCertificate conv2d_norm_certificate(const FilterBank2d& bank, int p_prev, double tol,
                                          std::uint64_t seed) {
    const Matrix w = conv_weight_2d(bank, p_prev);
    Conv2dCertificate cert;
    cert.measured = spectral_norm(w, tol, 2000, seed).value;
    cert.unit_rows_bound = static_cast<double>(bank.k) / bank.s;
    cert.sum_norm = 0.0;
    for (const Matrix& f : bank.filters)
        cert.sum_norm = std::max(cert.sum_norm, static_cast<double>(frobenius_norm(f)));
    cert.unit_rows_bound_holds = cert.measured <= cert.unit_rows_bound + 1e-8;
    return cert;
}

FilterBank orthonormalize_filters(int n, int k, std::uint64_t seed, int s) {
    if (n < 1 || k < 1) throw ValidationError(errc::invalid_argument, "orthonormalize_filters: n, k >= 1");
    if (n > k) throw ValidationError(errc::infeasible, "orthonormalize_filters: needs n <= k");
    SplitMix64 rng(seed);
    Matrix filters(n, k);
    for (int i = 0; i < n; ++i) {
        while (true) {
            Vector cand(k);
            for (int j = 0; j < k; ++j) cand(j) = rng.next_gaussian();
            // modified Gram-Schmidt against accepted rows
            for (int prev = 0; prev < i; ++prev) {
                const Vector prev_row = filters.row(prev).transpose();
                cand -= prev_row.dot(cand) * prev_row;
            }
            const double norm = cand.norm();
            if (norm > 1e-8) {
                filters.row(i) = (cand / norm).transpose();
                break;
            }
        }
    }
    return make_filter_bank(n, k, s, std::move(filters), /*claim_orthonormal=*/true);
}

Matrix padding_op(int p, int s) {
    if (p < 1 || s < 1) throw ValidationError(errc::invalid_argument, "padding_op: p, s >= 1");
    Matrix out = Matrix::Zero(s * p, p);
    for (int j = 0; j < p; ++j) out(j * s + (s - 1), j) = 1.0;
    return out;
}

Matrix one_by_one_conv_op(const Vector& coeffs, int p) {
    const int s = static_cast<int>(coeffs.size());
    if (p < 1 || s < 1)
        throw ValidationError(errc::invalid_argument, "one_by_one_conv_op: p >= 1 and coeffs nonempty");
    if (!all_finite(coeffs))
        throw ValidationError(errc::nonfinite_input, "one_by_one_conv_op: non-finite coefficients");
    Matrix out = Matrix::Zero(s * p, p);
    for (int j = 0; j < p; ++j)
        for (int t = 0; t < s; ++t) out(j * s + t, j) = coeffs(t);
    return out;
}

Matrix avg_pool_op(int p, int s) {
    if (p < 1 || s < 1) throw ValidationError(errc::invalid_argument, "avg_pool_op: p, s >= 1");
    if (p % s != 0) throw ValidationError(errc::structure, "avg_pool_op: s must divide p");
    Matrix out = Matrix::Zero(p / s, p);
    for (int i = 0; i < p / s; ++i)
        for (int t = 0; t < s; ++t) out(i, i * s + t) = 1.0 / s;
    return out;
}

MaxPoolResult max_pool_op(const Vector& x, int s, bool signed_compare) {
    const int p = static_cast<int>(x.size());
    if (p < 1 || s < 1) throw ValidationError(errc::invalid_argument, "max_pool_op: p, s >= 1");
    if (p % s != 0) throw ValidationError(errc::structure, "max_pool_op: s must divide p");
    const int rows = p / s;
    MaxPoolResult res;
    res.selector = Matrix::Zero(rows, p);
    res.pooled = Vector::Zero(rows);
    res.indices = Eigen::VectorXi::Zero(rows);
    for (int i = 0; i < rows; ++i) {
        int best = i * s;
        for (int j = i * s + 1; j < (i + 1) * s; ++j) {
            const double a = signed_compare ? x(j) : std::abs(x(j));
            const double b = signed_compare ? x(best) : std::abs(x(best));
            if (a > b) best = j;  // strict: ties keep the lowest index
        }
        res.selector(i, best) = 1.0;
        res.pooled(i) = x(best);
        res.indices(i) = best;
    }
    return res;
}

Matrix width_op_matrix(const WidthOp& op, const Vector* x) {
    switch (op.kind) {
        case WidthOp::Kind::padding: return padding_op(op.p, op.s);
        case WidthOp::Kind::one_by_one_conv: return one_by_one_conv_op(op.coeffs, op.p);
        case WidthOp::Kind::avg_pool: return avg_pool_op(op.p, op.s);
        case WidthOp::Kind::max_pool:
            if (x == nullptr)
                throw ValidationError(errc::invalid_argument,
                                      "width_op_matrix: max_pool needs the input vector");
            if (x->size() != op.p)
                throw ValidationError(errc::dimension_mismatch, "width_op_matrix: input width mismatch");
            return max_pool_op(*x, op.s, op.signed_maxpool).selector;
    }
    throw ValidationError(errc::invalid_argument, "width_op_matrix: unknown kind");
}

double width_op_certified_norm(const WidthOp& op) {
    switch (op.kind) {
        case WidthOp::Kind::padding: return 1.0;
        case WidthOp::Kind::max_pool: return 1.0;
        case WidthOp::Kind::avg_pool: return std::sqrt(1.0 / op.s);
        case WidthOp::Kind::one_by_one_conv: {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < op.coeffs.size(); ++i) acc += op.coeffs(i) * op.coeffs(i);
            return std::sqrt(acc);
        }
    }
    throw ValidationError(errc::invalid_argument, "width_op_certified_norm: unknown kind");
}

int width_op_output_dim(const WidthOp& op) {
    switch (op.kind) {
        case WidthOp::Kind::padding: return op.p * op.s;
        case WidthOp::Kind::one_by_one_conv: return op.p * static_cast<int>(op.coeffs.size());
        case WidthOp::Kind::avg_pool:
        case WidthOp::Kind::max_pool:
            if (op.p % op.s != 0)
                throw ValidationError(errc::structure, "width op: s must divide p for pooling");
            return op.p / op.s;
    }
    throw ValidationError(errc::invalid_argument, "width op: unknown kind");
}

const char* width_op_kind_name(WidthOp::Kind k) {
    switch (k) {
        case WidthOp::Kind::padding: return "padding";
        case WidthOp::Kind::one_by_one_conv: return "one_by_one_conv";
        case WidthOp::Kind::avg_pool: return "avg_pool";
        case WidthOp::Kind::max_pool: return "max_pool";
    }
    return "unknown";
}

WidthOp::Kind width_op_kind_from_name(const std::string& name) {
    if (name == "padding") return WidthOp::Kind::padding;
    if (name == "one_by_one_conv") return WidthOp::Kind::one_by_one_conv;
    if (name == "avg_pool") return WidthOp::Kind::avg_pool;
    if (name == "max_pool") return WidthOp::Kind::max_pool;
    throw ValidationError(errc::invalid_argument, "unknown width op kind: " + name);
}

}  // namespace gbaudit
