#include <doctest.h>

#include <algorithm>
#include <functional>

#include "gbaudit/erc.hpp"
#include "test_util.hpp"

using namespace gbaudit;
using test::random_dense_net;
using test::random_matrix;
using test::random_vector;

namespace {

/// Independent enumeration oracle: recursive sign assignment instead of the
/// bitmask loop, supremum computed per branch leaf.
double erc_enumeration_oracle(const std::vector<std::vector<double>>& losses, int m) {
    double total = 0.0;
    std::vector<int> eps(static_cast<std::size_t>(m));
    std::function<void(int)> recurse = [&](int i) {
        if (i == m) {
            double sup = 0.0;
            for (const auto& g : losses) {
                double s = 0.0;
                for (int t = 0; t < m; ++t) s += eps[static_cast<std::size_t>(t)] * g[static_cast<std::size_t>(t)];
                sup = std::max(sup, std::abs(s) / m);
            }
            total += sup;
            return;
        }
        eps[static_cast<std::size_t>(i)] = 1;
        recurse(i + 1);
        eps[static_cast<std::size_t>(i)] = -1;
        recurse(i + 1);
    };
    recurse(0);
    return total / std::pow(2.0, m);
}

std::vector<std::vector<double>> loss_matrix(const FiniteClass& cls, const LabeledDataset& data) {
    std::vector<std::vector<double>> g;
    for (const NetworkSpec& net : cls.members) {
        std::vector<double> rowv;
        for (int i = 0; i < data.m(); ++i)
            rowv.push_back(ramp_loss(forward(net, data.inputs.row(i).transpose()).output(),
                                     data.labels[static_cast<std::size_t>(i)], cls.gamma));
        g.push_back(std::move(rowv));
    }
    return g;
}

/// Nets engineered to hit a target constant ramp loss on every input: output
/// is always (0, 0), margin 0, loss 1; scaling one logit flips it.
NetworkSpec constant_loss_net(int input_dim, double always_correct_logit) {
    Matrix w = Matrix::Zero(2, input_dim);
    w.row(0).setConstant(always_correct_logit);
    return make_network({DenseLayer{w}}, input_dim);
}

}  // namespace

TEST_CASE("erc singleton closed forms") {
    // g == 0 everywhere: complexity 0
    Matrix inputs(3, 2);
    inputs << 1, 1, 2, 1, 1, 2;
    const LabeledDataset data = test::tiny_dataset(inputs, {0, 0, 0});
    FiniteClass zero_cls;
    zero_cls.gamma = 1.0;
    zero_cls.members.push_back(constant_loss_net(2, 100.0));  // huge margin, loss 0
    CHECK(erc_exact_finite(zero_cls, data) == 0.0);

    // m = 1, constant loss 1: E|eps| = 1
    Matrix one(1, 2);
    one << 1, 0;
    FiniteClass one_cls;
    one_cls.gamma = 1.0;
    one_cls.members.push_back(constant_loss_net(2, 0.0));  // all-zero outputs: margin 0, loss 1
    CHECK(erc_exact_finite(one_cls, test::tiny_dataset(one, {0})) == doctest::Approx(1.0));

    // m = 2, losses (1,1): (2+0+0+2)/(4*2) = 0.5
    Matrix two(2, 2);
    two << 1, 0, 0, 1;
    CHECK(erc_exact_finite(one_cls, test::tiny_dataset(two, {0, 0})) == doctest::Approx(0.5));
}

TEST_CASE("erc singleton constant loss matches E|sum eps|/m for several m") {
    // E|sum_{i<=m} eps_i| / m, computed by binomial enumeration
    auto closed_form = [](int m) {
        double acc = 0.0;
        for (int j = 0; j <= m; ++j) {
            double binom = 1.0;
            for (int t = 0; t < j; ++t) binom = binom * (m - t) / (t + 1);
            acc += binom * std::abs(m - 2.0 * j);
        }
        return acc / std::pow(2.0, m) / m;
    };
    CHECK(closed_form(2) == doctest::Approx(0.5));
    CHECK(closed_form(12) == doctest::Approx(0.2255859375));
    FiniteClass cls;
    cls.gamma = 1.0;
    cls.members.push_back(constant_loss_net(2, 0.0));
    for (int m : {1, 2, 3, 5, 8, 12}) {
        Matrix inputs = random_matrix(m, 2, 17 + m);
        std::vector<int> labels(static_cast<std::size_t>(m), 0);
        const double got = erc_exact_finite(cls, test::tiny_dataset(inputs, labels));
        CHECK(got == doctest::Approx(closed_form(m)).epsilon(1e-12));
    }
}

TEST_CASE("erc_exact_finite matches the recursive enumeration oracle on random classes") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SplitMix64 rng(seed * 3 + 11);
        const int m = 2 + static_cast<int>(rng.next_u64() % 11);  // m <= 12
        const int members = 1 + static_cast<int>(rng.next_u64() % 4);
        FiniteClass cls;
        cls.gamma = 0.5 + rng.next_double();
        const int p0 = 3;
        for (int f = 0; f < members; ++f) {
            std::vector<Layer> layers;
            layers.push_back(DenseLayer{random_matrix(4, p0, 900 + 31 * seed + f)});
            layers.push_back(DenseLayer{random_matrix(3, 4, 1900 + 31 * seed + f)});
            cls.members.push_back(make_network(std::move(layers), p0));
        }
        Matrix inputs = random_matrix(m, p0, 2700 + seed);
        std::vector<int> labels;
        for (int i = 0; i < m; ++i) labels.push_back(i % 3);
        const LabeledDataset data = test::tiny_dataset(inputs, labels);
        const double got = erc_exact_finite(cls, data);
        const double oracle = erc_enumeration_oracle(loss_matrix(cls, data), m);
        CHECK(std::abs(got - oracle) <= 1e-12);
    }
}

TEST_CASE("erc_exact_finite is monotone under adding members") {
    SplitMix64 rng(5);
    const int m = 6, p0 = 3;
    Matrix inputs = random_matrix(m, p0, 42);
    std::vector<int> labels = {0, 1, 2, 0, 1, 2};
    const LabeledDataset data = test::tiny_dataset(inputs, labels);
    FiniteClass cls;
    cls.gamma = 1.0;
    double prev = 0.0;
    for (int f = 0; f < 4; ++f) {
        std::vector<Layer> layers;
        layers.push_back(DenseLayer{random_matrix(3, p0, 5000 + f)});
        cls.members.push_back(make_network(std::move(layers), p0));
        const double value = erc_exact_finite(cls, data);
        CHECK(value >= prev - 1e-15);
        prev = value;
    }
}

TEST_CASE("erc_exact_finite is invariant to dataset permutation") {
    const int m = 8, p0 = 3;
    Matrix inputs = random_matrix(m, p0, 21);
    std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1};
    FiniteClass cls;
    cls.gamma = 1.0;
    std::vector<Layer> layers;
    layers.push_back(DenseLayer{random_matrix(3, p0, 77)});
    cls.members.push_back(make_network(std::move(layers), p0));
    const double base = erc_exact_finite(cls, test::tiny_dataset(inputs, labels));

    Matrix perm_inputs(m, p0);
    std::vector<int> perm_labels(static_cast<std::size_t>(m));
    const int perm[] = {3, 1, 7, 0, 5, 2, 6, 4};
    for (int i = 0; i < m; ++i) {
        perm_inputs.row(i) = inputs.row(perm[i]);
        perm_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(perm[i])];
    }
    const double permuted = erc_exact_finite(cls, test::tiny_dataset(perm_inputs, perm_labels));
    CHECK(std::abs(base - permuted) <= 1e-15);
}

TEST_CASE("erc_exact_finite enforces the enumeration size limit") {
    FiniteClass cls;
    cls.gamma = 1.0;
    cls.members.push_back(constant_loss_net(2, 0.0));
    Matrix inputs = random_matrix(21, 2, 3);
    std::vector<int> labels(21, 0);
    CHECK_THROWS_AS((void)erc_exact_finite(cls, test::tiny_dataset(inputs, labels)),
                    ValidationError);
}

TEST_CASE("erc_ascent with zero steps equals the fixed-network draw average") {
    const int m = 10, p0 = 3;
    Matrix inputs = random_matrix(m, p0, 91);
    std::vector<int> labels;
    for (int i = 0; i < m; ++i) labels.push_back(i % 3);
    const LabeledDataset data = test::tiny_dataset(inputs, labels);
    std::vector<Layer> layers;
    layers.push_back(DenseLayer{random_matrix(3, p0, 1234)});
    const NetworkSpec tmpl = make_network(std::move(layers), p0);

    const std::vector<double> caps = {10.0};
    const ErcAscentResult res = erc_ascent(tmpl, caps, data, 1.0, 64, 0, 0.1, 5);

    // recompute the same draw average directly from the loss vector
    std::vector<double> losses;
    for (int i = 0; i < m; ++i)
        losses.push_back(ramp_loss(forward(tmpl, inputs.row(i).transpose()).output(),
                                   labels[static_cast<std::size_t>(i)], 1.0));
    double expect = 0.0;
    for (int t = 0; t < 64; ++t) {
        SplitMix64 rng(substream(5, static_cast<std::uint64_t>(t)));
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            s += ((rng.next_u64() & 1ULL) ? 1.0 : -1.0) * losses[static_cast<std::size_t>(i)];
        expect += std::abs(s) / m;
    }
    expect /= 64;
    CHECK(res.mean == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("erc_ascent singleton matches erc_exact_finite within Monte Carlo error") {
    const int m = 8, p0 = 3;
    Matrix inputs = random_matrix(m, p0, 303);
    std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1};
    const LabeledDataset data = test::tiny_dataset(inputs, labels);
    std::vector<Layer> layers;
    layers.push_back(DenseLayer{random_matrix(3, p0, 404)});
    const NetworkSpec tmpl = make_network(std::move(layers), p0);

    FiniteClass cls;
    cls.gamma = 1.0;
    cls.members.push_back(tmpl);
    const double exact = erc_exact_finite(cls, data);

    const int draws = 4096;
    const ErcAscentResult mc = erc_ascent(tmpl, {100.0}, data, 1.0, draws, 0, 0.1, 17);
    CHECK(std::abs(mc.mean - exact) <= 3.0 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("erc_ascent does not decrease when caps are enlarged (paired draws)") {
    const int m = 8, p0 = 4;
    Matrix inputs = random_matrix(m, p0, 11);
    std::vector<int> labels = {0, 1, 0, 1, 0, 1, 0, 1};
    const LabeledDataset data = test::tiny_dataset(inputs, labels);
    std::vector<Layer> layers;
    layers.push_back(DenseLayer{random_matrix(2, p0, 505, 0.5)});
    const NetworkSpec tmpl = make_network(std::move(layers), p0);

    const ErcAscentResult tight = erc_ascent(tmpl, {0.2}, data, 0.5, 16, 12, 0.5, 99);
    const ErcAscentResult loose = erc_ascent(tmpl, {5.0}, data, 0.5, 16, 12, 0.5, 99);
    CHECK(loose.mean >= tight.mean - 1e-12);
    // more steps never hurt on average for the loose caps
    const ErcAscentResult fewer = erc_ascent(tmpl, {5.0}, data, 0.5, 16, 2, 0.5, 99);
    CHECK(loose.mean >= fewer.mean - 1e-9);
}

TEST_CASE("erc_ascent validates caps") {
    const NetworkSpec tmpl = make_network({DenseLayer{Matrix::Identity(2, 2)}}, 2);
    Matrix inputs(2, 2);
    inputs << 1, 0, 0, 1;
    const LabeledDataset data = test::tiny_dataset(inputs, {0, 1});
    CHECK_THROWS_AS((void)erc_ascent(tmpl, {0.0}, data, 1.0, 2, 1, 0.1, 1), ValidationError);
    CHECK_THROWS_AS((void)erc_ascent(tmpl, {1.0, 2.0}, data, 1.0, 2, 1, 0.1, 1), ValidationError);
}
