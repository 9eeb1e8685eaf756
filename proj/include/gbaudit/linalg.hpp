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

#ifndef GBAUDIT_LINALG_HPP
#define GBAUDIT_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "gbaudit/errors.hpp"
#include "gbaudit/rng.hpp"

namespace gbaudit {

/// Dense row-major matrix over an arbitrary real scalar. Everything above
/// this header uses MatrixX<double>; the free functions below accept any
/// Eigen expression so callers can pass blocks, products and maps directly.
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Result of an iterative spectral-norm estimate.
struct NormEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    double tol = 0.0;
};

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (!std::isfinite(static_cast<double>(a(i, j)))) return false;
    return true;
}

/// sqrt(sum of squared entries). Accumulates in row-major index order so the
/// result is bit-reproducible across runs and schedules.
template <class Derived>
typename Derived::Scalar frobenius_norm(const Eigen::MatrixBase<Derived>& a) {
    using S = typename Derived::Scalar;
    S acc = S(0);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
}

/// (2,1)-norm: sum over rows of the row's Euclidean norm, index order.
template <class Derived>
typename Derived::Scalar two_one_norm(const Eigen::MatrixBase<Derived>& a) {
    using S = typename Derived::Scalar;
    S total = S(0);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        S row = S(0);
        for (Eigen::Index j = 0; j < a.cols(); ++j) row += a(i, j) * a(i, j);
        total += std::sqrt(row);
    }
    return total;
}

/// Deterministic start vector for power iterations.
template <class Scalar>
VectorX<Scalar> seeded_start_vector(Eigen::Index n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    VectorX<Scalar> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>(rng.next_symmetric());
    const Scalar norm = v.norm();
    if (norm > Scalar(0)) v /= norm;
    else v.setConstant(Scalar(1) / std::sqrt(static_cast<Scalar>(n)));
    return v;
}

/// Largest singular value by power iteration on A^T A, from a seeded start
/// vector. The iteration always runs in the smaller of the two Gram spaces
/// (transpose first when rows < cols, never forming A A^T). Convergence is
/// tested on the Rayleigh value, not the vector, so repeated top singular
/// values are fine. Deterministic in (A, tol, max_iter, seed).
template <class Derived>
NormEstimate spectral_norm(const Eigen::MatrixBase<Derived>& a_expr, double tol = 1e-8,
                           int max_iter = 1000, std::uint64_t seed = 0) {
    using S = typename Derived::Scalar;
    if (tol <= 0.0) throw ValidationError(errc::invalid_argument, "spectral_norm: tol must be > 0");
    if (max_iter < 1)
        throw ValidationError(errc::invalid_argument, "spectral_norm: max_iter must be >= 1");
    const typename Derived::PlainObject a = a_expr;  // evaluate once
    if (!all_finite(a))
        throw ValidationError(errc::nonfinite_input, "spectral_norm: matrix has NaN/Inf entries");

    NormEstimate est;
    est.tol = tol;
    if (a.rows() == 0 || a.cols() == 0) {
        est.converged = true;
        return est;
    }
    bool zero = true;
    for (Eigen::Index i = 0; zero && i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != S(0)) {
                zero = false;
                break;
            }
    if (zero) {
        est.converged = true;
        return est;
    }

    const bool transposed = a.rows() < a.cols();
    const Eigen::Index n = transposed ? a.rows() : a.cols();
    VectorX<S> v = seeded_start_vector<S>(n, seed);
    VectorX<S> w, z;
    double lambda = 0.0, lambda_prev = -1.0;
    SplitMix64 redraw(substream(seed, 0x5eedULL));
    for (int it = 1; it <= max_iter; ++it) {
        if (transposed) {
            w.noalias() = a.transpose() * v;
            z.noalias() = a * w;
        } else {
            w.noalias() = a * v;
            z.noalias() = a.transpose() * w;
        }
        lambda = static_cast<double>(w.squaredNorm());
        est.iterations = it;
        const double zn = z.norm();
        if (zn == 0.0) {
            // start vector landed in the kernel; redraw and keep going
            for (Eigen::Index i = 0; i < n; ++i) v(i) = static_cast<S>(redraw.next_symmetric());
            v /= v.norm();
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

template <class Scalar>
struct SvdResult {
    MatrixX<Scalar> u;        ///< orthonormal columns
    VectorX<Scalar> s;        ///< nonincreasing singular values
    MatrixX<Scalar> v;        ///< orthonormal columns; A = u * s.asDiagonal() * v^T
};

using Svd = SvdResult<double>;

/// Full thin SVD for matrices up to a few hundred rows/cols; used as the
/// oracle behind rank, balanced factorization and the test suite.
template <class Derived>
SvdResult<typename Derived::Scalar> svd_small(const Eigen::MatrixBase<Derived>& a_expr) {
    using S = typename Derived::Scalar;
    const MatrixX<S> a = a_expr;
    if (a.rows() < 1 || a.cols() < 1)
        throw ValidationError(errc::invalid_argument, "svd_small: empty matrix");
    if (!all_finite(a))
        throw ValidationError(errc::nonfinite_input, "svd_small: matrix has NaN/Inf entries");
    Eigen::JacobiSVD<MatrixX<S>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericError(errc::svd_failure, "svd_small: SVD did not converge");
    SvdResult<S> out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    const S fro = frobenius_norm(a);
    const S resid = frobenius_norm((out.u * out.s.asDiagonal() * out.v.transpose() - a).eval());
    if (resid > S(1e-9) * std::max(fro, S(1)))
        throw NumericError(errc::svd_failure, "svd_small: reconstruction residual too large");
    return out;
}

/// Count of singular values above tol. Default tol follows the usual
/// max(rows, cols) * eps * sigma_max convention.
template <class Derived>
int numeric_rank(const Eigen::MatrixBase<Derived>& a,
                 std::optional<double> tol_override = std::nullopt) {
    const auto svd = svd_small(a);
    if (svd.s.size() == 0) return 0;
    const double smax = static_cast<double>(svd.s(0));
    const double tol = tol_override.value_or(static_cast<double>(std::max(a.rows(), a.cols())) *
                                             std::numeric_limits<double>::epsilon() * smax);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.s.size(); ++i)
        if (static_cast<double>(svd.s(i)) > tol) ++r;
    return r;
}

template <class Scalar>
struct BalancedFactors {
    MatrixX<Scalar> u;  ///< rows x rank
    MatrixX<Scalar> v;  ///< cols x rank; A = u * v^T, ||u||_2 = ||v||_2 = ||A||_2^{1/2}
};

/// Balanced factorization A = U V^T with ||U||_2 = ||V||_2 = ||A||_2^{1/2},
/// realized as U = U_s S^{1/2}, V = V_s S^{1/2} truncated to the numeric rank.
template <class Derived>
BalancedFactors<typename Derived::Scalar> balanced_factorize(const Eigen::MatrixBase<Derived>& a) {
    using S = typename Derived::Scalar;
    const auto svd = svd_small(a);
    if (svd.s.size() == 0 || svd.s(0) == S(0))
        throw ValidationError(errc::degenerate_input, "balanced_factorize: zero matrix");
    const double smax = static_cast<double>(svd.s(0));
    const double tol = static_cast<double>(std::max(a.rows(), a.cols())) *
                       std::numeric_limits<double>::epsilon() * smax;
    int r = 0;
    for (Eigen::Index i = 0; i < svd.s.size(); ++i)
        if (static_cast<double>(svd.s(i)) > tol) ++r;
    r = std::max(r, 1);
    VectorX<S> sqrt_s(r);
    for (int i = 0; i < r; ++i) sqrt_s(i) = std::sqrt(svd.s(i));
    BalancedFactors<S> out;
    out.u = svd.u.leftCols(r) * sqrt_s.asDiagonal();
    out.v = svd.v.leftCols(r) * sqrt_s.asDiagonal();
    return out;
}

}  // namespace gbaudit

#endif  // GBAUDIT_LINALG_HPP
