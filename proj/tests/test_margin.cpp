#include <doctest.h>

#include "gbaudit/margin.hpp"
#include "gbaudit/network.hpp"
#include "test_util.hpp"

using namespace gbaudit;
using test::random_dense_net;
using test::random_vector;

TEST_CASE("margin formula and the two-pass oracle") {
    Vector f(3);
    f << 0.2, 0.9, 0.1;
    CHECK(margin(f, 1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(margin(Vector::Ones(4), 2) == 0.0);

    const Vector r = random_vector(10, 88);
    for (int y = 0; y < 10; ++y) {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 10; ++i)
            if (i != y) best = std::max(best, r(i));
        CHECK(margin(r, y) == doctest::Approx(r(y) - best).epsilon(1e-15));
    }
    Vector one(1);
    one << 2.0;
    CHECK_THROWS_AS((void)margin(one, 0), ValidationError);
}

TEST_CASE("ramp loss branches, continuity and Lipschitz grid") {
    CHECK(ramp_loss_from_margin(2.0, 1.0) == 0.0);
    CHECK(ramp_loss_from_margin(0.25, 1.0) == doctest::Approx(0.75));
    CHECK(ramp_loss_from_margin(1.0, 1.0) == 0.0);   // nu = gamma through the middle branch
    CHECK(ramp_loss_from_margin(0.0, 1.0) == 1.0);   // nu = 0 through the middle branch
    CHECK(ramp_loss_from_margin(-0.5, 1.0) == 1.0);
    CHECK_THROWS_AS((void)ramp_loss_from_margin(0.5, 0.0), ValidationError);

    const double gamma = 0.7;
    for (int i = -20; i <= 20; ++i)
        for (int j = -20; j <= 20; ++j) {
            const double n1 = 0.1 * i, n2 = 0.1 * j;
            const double l1 = ramp_loss_from_margin(n1, gamma);
            const double l2 = ramp_loss_from_margin(n2, gamma);
            CHECK(l1 >= 0.0);
            CHECK(l1 <= 1.0);
            CHECK(std::abs(l1 - l2) <= std::abs(n1 - n2) / gamma + 1e-12);
        }
}

TEST_CASE("empirical risks on forced nets") {
    // a net whose outputs always favor class 0 by a wide margin
    Matrix w(2, 2);
    w << 5, 5, 0, 0;
    const NetworkSpec net = make_network({DenseLayer{w}}, 2);
    Matrix pos(2, 2);
    pos << 1, 1, 2, 1;
    const LabeledDataset all_zero = test::tiny_dataset(pos, {0, 0});
    CHECK(empirical_ramp_risk(net, all_zero, 1.0).mean == 0.0);
    CHECK(zero_one_error(net, all_zero) == 0.0);

    const LabeledDataset all_one = test::tiny_dataset(pos, {1, 1});
    CHECK(empirical_ramp_risk(net, all_one, 1.0).mean == 1.0);
    CHECK(zero_one_error(net, all_one) == 1.0);
}

TEST_CASE("constant outputs on balanced two-class data misclassify half") {
    // zero weights: outputs identical, argmax tie goes to class 0
    const NetworkSpec net = make_network({DenseLayer{Matrix::Zero(2, 2)}}, 2);
    Matrix inputs(4, 2);
    inputs << 1, 0, 0, 1, 1, 1, -1, 2;
    const LabeledDataset data = test::tiny_dataset(inputs, {0, 1, 0, 1});
    CHECK(zero_one_error(net, data) == doctest::Approx(0.5));
}

TEST_CASE("mixed risk equals the per-sample oracle and max is tracked") {
    const NetworkSpec net = random_dense_net(2, 6, 321);
    Matrix inputs(6, net.input_dim);
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
        inputs.row(i) = random_vector(net.input_dim, 2000 + i).transpose();
        labels.push_back(i % net.output_dim());
    }
    const LabeledDataset data = test::tiny_dataset(inputs, labels);
    const double gamma = 0.9;
    const RiskResult risk = empirical_ramp_risk(net, data, gamma);
    double mean = 0.0, mx = 0.0;
    for (int i = 0; i < 6; ++i) {
        const double loss =
            ramp_loss(forward(net, inputs.row(i).transpose()).output(), labels[i], gamma);
        mean += loss;
        mx = std::max(mx, loss);
    }
    mean /= 6;
    CHECK(risk.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(risk.max == doctest::Approx(mx).epsilon(1e-12));
}

TEST_CASE("zero-one error is below the ramp risk; scaling leaves it unchanged") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const NetworkSpec net = random_dense_net(2, 6, 4000 + seed);
        Matrix inputs(5, net.input_dim);
        std::vector<int> labels;
        for (int i = 0; i < 5; ++i) {
            inputs.row(i) = random_vector(net.input_dim, 31 * seed + i).transpose();
            labels.push_back(i % net.output_dim());
        }
        const LabeledDataset data = test::tiny_dataset(inputs, labels);
        for (double gamma : {0.1, 1.0, 10.0})
            CHECK(zero_one_error(net, data) <= empirical_ramp_risk(net, data, gamma).mean + 1e-12);

        // scaling every output by c > 0 scales margins and keeps 0/1 fixed
        NetworkSpec scaled = net;
        std::get<DenseLayer>(scaled.layers.back()).w *= 3.0;
        CHECK(zero_one_error(scaled, data) == zero_one_error(net, data));
        const Vector x = inputs.row(0).transpose();
        CHECK(margin(forward(scaled, x).output(), labels[0]) ==
              doctest::Approx(3.0 * margin(forward(net, x).output(), labels[0])).epsilon(1e-12));
    }
}

TEST_CASE("dataset construction validates the norm certificate and labels") {
    Matrix inputs(1, 2);
    inputs << 3, 4;
    CHECK_THROWS_AS((void)make_dataset(inputs, {0}, 4.0), ValidationError);  // norm 5 > R
    CHECK_NOTHROW((void)make_dataset(inputs, {0}, 5.0));
    CHECK_THROWS_AS((void)make_dataset(inputs, {-1}, 5.0), ValidationError);
    CHECK_THROWS_AS((void)make_dataset(Matrix(0, 2), {}, 1.0), ValidationError);
}
