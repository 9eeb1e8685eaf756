#include <doctest.h>

#include "gbaudit/structured.hpp"
#include "test_util.hpp"

using namespace gbaudit;
using test::random_matrix;
using test::random_vector;

TEST_CASE("circulant_block reproduces the wrap-around row pattern") {
    Vector w(2);
    w << 0.7, -1.3;  // (a, b)
    const Matrix c = circulant_block(w, 3, 1);
    Matrix expect(3, 3);
    expect << 0.7, -1.3, 0, 0, 0.7, -1.3, -1.3, 0, 0.7;
    CHECK(frobenius_norm((c - expect).eval()) == 0.0);
}

TEST_CASE("circulant_block delta filter is the identity") {
    Vector w(2);
    w << 1, 0;
    CHECK(frobenius_norm((circulant_block(w, 3, 1) - Matrix::Identity(3, 3)).eval()) == 0.0);
}

TEST_CASE("circulant_block matches the strided wrap-around correlation oracle") {
    Vector w(4);
    w << 1, 2, 3, 4;
    const int p = 8, s = 2;
    const Matrix c = circulant_block(w, p, s);
    CHECK(c.rows() == p / s);
    CHECK(c.cols() == p);
    const Vector x = random_vector(p, 17);
    const Vector via_matrix = c * x;
    for (int i = 0; i < p / s; ++i) {
        double oracle = 0.0;
        for (int j = 0; j < 4; ++j) oracle += w(j) * x((i * s + j) % p);
        CHECK(via_matrix(i) == doctest::Approx(oracle).epsilon(1e-15));
    }
    // support pattern: row i covers columns {(i*s + j) mod p}
    for (int i = 0; i < p / s; ++i)
        for (int col = 0; col < p; ++col) {
            bool in_support = false;
            for (int j = 0; j < 4; ++j) in_support |= (i * s + j) % p == col;
            CHECK((c(i, col) != 0.0) == in_support);
        }
}

TEST_CASE("circulant_block validates divisibility and length") {
    Vector w(4);
    w << 1, 2, 3, 4;
    CHECK_THROWS_AS((void)circulant_block(w, 8, 3), ValidationError);   // s does not divide k
    CHECK_THROWS_AS((void)circulant_block(w, 9, 2), ValidationError);   // s does not divide p
    CHECK_THROWS_AS((void)circulant_block(w, 2, 1), ValidationError);   // k > p
}

TEST_CASE("conv_weight stacks blocks and is diagonal-Gram for a full orthonormal bank") {
    Matrix filters(2, 2);
    filters << 1, 0, 0, 1;
    const FilterBank bank = make_filter_bank(2, 2, 1, filters, true);
    const Matrix w = conv_weight(bank, 3);
    CHECK(w.rows() == 6);
    CHECK(w.cols() == 3);
    const Matrix gram = w.transpose() * w;
    CHECK(frobenius_norm((gram - 2.0 * Matrix::Identity(3, 3)).eval()) <= 1e-12);

    // single delta filter reduces to the circulant block
    Matrix delta(1, 2);
    delta << 1, 0;
    const Matrix w1 = conv_weight(make_filter_bank(1, 2, 1, delta), 3);
    CHECK(frobenius_norm((w1 - circulant_block(delta.row(0).transpose(), 3, 1)).eval()) == 0.0);
}

TEST_CASE("orthonormal bank spectral norm is sqrt(k/s)") {
    const FilterBank bank = orthonormalize_filters(4, 4, 99, 2);
    const Matrix w = conv_weight(bank, 8);
    const double sn = spectral_norm(w, 1e-12, 5000, 3).value;
    CHECK(std::abs(sn - std::sqrt(2.0)) <= 1e-8);
}

TEST_CASE("orthonormalize_filters produces a certified bank deterministically") {
    const FilterBank one = orthonormalize_filters(1, 1, 5);
    CHECK(std::abs(std::abs(one.filters(0, 0)) - 1.0) <= 1e-15);

    const FilterBank bank = orthonormalize_filters(4, 4, 31);
    const Matrix gram = bank.filters * bank.filters.transpose();
    CHECK(frobenius_norm((gram - Matrix::Identity(4, 4)).eval()) <= 1e-10);

    const FilterBank a = orthonormalize_filters(2, 5, 123);
    const FilterBank b = orthonormalize_filters(2, 5, 123);
    CHECK(frobenius_norm((a.filters - b.filters).eval()) == 0.0);

    CHECK_THROWS_AS((void)orthonormalize_filters(5, 4, 0), ValidationError);
}

TEST_CASE("make_filter_bank rejects bad structure and false orthonormal claims") {
    CHECK_THROWS_AS((void)make_filter_bank(1, 4, 3, Matrix::Ones(1, 4)), ValidationError);
    Matrix not_ortho(2, 2);
    not_ortho << 1, 0, 1, 0;
    CHECK_THROWS_AS((void)make_filter_bank(2, 2, 1, not_ortho, true), ValidationError);
}

TEST_CASE("conv_weight_2d lays out padded filter rows with trailing zeros") {
    // 2x2 filter, k=4, p_prev=16: first row is the two filter rows
    // back-to-back followed by 12 zeros
    FilterBank2d bank;
    bank.n = 1;
    bank.k = 4;
    bank.s = 4;
    Matrix f(2, 2);
    f << 1, 2, 3, 4;
    bank.filters = {f};
    const Matrix w = conv_weight_2d(bank, 16);
    CHECK(w.cols() == 16);
    CHECK(w.rows() == 16 * 4 / (4 * 4));  // p*k/s^2 rows per filter
    Vector first_expect = Vector::Zero(16);
    first_expect(0) = 1;
    first_expect(1) = 2;
    first_expect(2) = 3;
    first_expect(3) = 4;
    CHECK(frobenius_norm((w.row(0).transpose() - first_expect).eval()) == 0.0);

    // all-zero filter gives the zero matrix
    bank.filters = {Matrix::Zero(2, 2)};
    CHECK(frobenius_norm(conv_weight_2d(bank, 16)) == 0.0);
}

TEST_CASE("conv_weight_2d rejects non-square sizes") {
    FilterBank2d bank;
    bank.n = 1;
    bank.k = 3;
    bank.s = 3;
    bank.filters = {Matrix::Ones(1, 3)};
    CHECK_THROWS_AS((void)conv_weight_2d(bank, 9), ValidationError);  // k not a perfect square
    bank.k = 4;
    bank.s = 4;
    bank.filters = {Matrix::Ones(2, 2)};
    CHECK_THROWS_AS((void)conv_weight_2d(bank, 12), ValidationError);  // p not a perfect square
}

TEST_CASE("conv2d_norm_certificate measures and reports both normalization claims") {
    // orthonormal filter rows, k=4, s=4, p=16: the measured norm comes out at
    // sqrt(2), above the per-row-unit-norm claim of k/s = 1; the certificate
    // reports the comparison rather than asserting it
    FilterBank2d bank;
    bank.n = 1;
    bank.k = 4;
    bank.s = 4;
    Matrix f(2, 2);
    f << 1, 0, 0, 1;
    bank.filters = {f};
    const Conv2dCertificate cert = conv2d_norm_certificate(bank, 16, 1e-12, 5);
    const double oracle = svd_small(conv_weight_2d(bank, 16)).s(0);
    CHECK(std::abs(cert.measured - oracle) <= 1e-8 * oracle);
    CHECK(cert.measured == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(cert.unit_rows_bound == doctest::Approx(1.0));
    CHECK_FALSE(cert.unit_rows_bound_holds);
    CHECK(cert.sum_norm == doctest::Approx(std::sqrt(2.0)));

    // a delta filter stays within the claim
    Matrix delta = Matrix::Zero(2, 2);
    delta(0, 0) = 1.0;
    bank.filters = {delta};
    const Conv2dCertificate cert2 = conv2d_norm_certificate(bank, 16, 1e-12, 5);
    CHECK(cert2.unit_rows_bound_holds);
}

TEST_CASE("padding_op places ones at row j*s and has unit norm") {
    const Matrix t = padding_op(2, 2);
    CHECK(t.rows() == 4);
    CHECK(t.cols() == 2);
    CHECK(t(1, 0) == 1.0);  // 1-indexed (2,1)
    CHECK(t(3, 1) == 1.0);  // 1-indexed (4,2)
    CHECK(t.sum() == 2.0);
    CHECK(std::abs(svd_small(padding_op(5, 3)).s(0) - 1.0) <= 1e-12);
    CHECK(std::abs(svd_small(padding_op(4, 1)).s(0) - 1.0) <= 1e-12);
}

TEST_CASE("one_by_one_conv_op has exact norm sqrt(sum c^2)") {
    Vector one(1);
    one << 1.0;
    CHECK(frobenius_norm((one_by_one_conv_op(one, 3) - Matrix::Identity(3, 3)).eval()) == 0.0);

    Vector c(2);
    c << 0.6, 0.8;
    CHECK(std::abs(svd_small(one_by_one_conv_op(c, 3)).s(0) - 1.0) <= 1e-12);

    Vector h(2);
    h << 0.5, 0.5;
    CHECK(std::abs(svd_small(one_by_one_conv_op(h, 4)).s(0) - std::sqrt(0.5)) <= 1e-12);
}

TEST_CASE("avg_pool_op rows and norm") {
    const Matrix t = avg_pool_op(4, 2);
    Matrix expect(2, 4);
    expect << 0.5, 0.5, 0, 0, 0, 0, 0.5, 0.5;
    CHECK(frobenius_norm((t - expect).eval()) == 0.0);
    CHECK(std::abs(svd_small(t).s(0) - std::sqrt(0.5)) <= 1e-12);
    CHECK(frobenius_norm((avg_pool_op(3, 1) - Matrix::Identity(3, 3)).eval()) == 0.0);
    CHECK(std::abs(svd_small(avg_pool_op(9, 3)).s(0) - std::sqrt(1.0 / 3.0)) <= 1e-12);
}

TEST_CASE("max_pool_op absolute-value rule, ties, and selector structure") {
    Vector x(4);
    x << 3, -5, 2, 2;
    const MaxPoolResult mp = max_pool_op(x, 2);
    CHECK(mp.pooled(0) == -5.0);
    CHECK(mp.pooled(1) == 2.0);
    CHECK(mp.indices(0) == 1);  // 1-indexed position 2
    CHECK(mp.indices(1) == 2);  // 1-indexed position 3 (tie broken low)

    // signed comparison picks 3 instead of -5
    const MaxPoolResult sp = max_pool_op(x, 2, true);
    CHECK(sp.pooled(0) == 3.0);

    const Vector equal = Vector::Ones(6);
    const MaxPoolResult eq = max_pool_op(equal, 3);
    CHECK(eq.indices(0) == 0);
    CHECK(eq.indices(1) == 3);

    const Vector r = random_vector(16, 3);
    const MaxPoolResult mr = max_pool_op(r, 4);
    for (int i = 0; i < 4; ++i) CHECK(mr.selector.row(i).sum() == 1.0);
    CHECK(std::abs(svd_small(mr.selector).s(0) - 1.0) <= 1e-12);
    CHECK(frobenius_norm((mr.selector * r - mr.pooled).eval()) == 0.0);
}

TEST_CASE("width_op_matrix dispatch and certified norms") {
    WidthOp pad{WidthOp::Kind::padding, 3, 2, {}, false};
    CHECK(frobenius_norm((width_op_matrix(pad) - padding_op(3, 2)).eval()) == 0.0);
    CHECK(width_op_certified_norm(pad) == 1.0);

    WidthOp avg{WidthOp::Kind::avg_pool, 8, 4, {}, false};
    CHECK(width_op_certified_norm(avg) == doctest::Approx(0.5));

    WidthOp mp{WidthOp::Kind::max_pool, 4, 2, {}, false};
    CHECK_THROWS_AS((void)width_op_matrix(mp), ValidationError);  // needs x
    Vector x(4);
    x << 1, 2, 3, 4;
    CHECK(width_op_matrix(mp, &x).rows() == 2);
    CHECK(width_op_certified_norm(mp) == 1.0);

    Vector c(2);
    c << 0.6, 0.8;
    WidthOp obo{WidthOp::Kind::one_by_one_conv, 5, 2, c, false};
    CHECK(width_op_certified_norm(obo) == doctest::Approx(1.0));
    CHECK(width_op_output_dim(obo) == 10);
}
