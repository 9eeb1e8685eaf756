#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gbaudit/bounds.hpp"
#include "gbaudit/trainer.hpp"
#include "test_util.hpp"

using namespace gbaudit;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

TrainConfig tiny_dense_cfg() {
    TrainConfig cfg;
    cfg.input_dim = 2;
    cfg.arch = {LayerCfg{LayerCfg::Kind::dense, 8, 0, 0, 1},
                LayerCfg{LayerCfg::Kind::dense, 2, 0, 0, 1}};
    cfg.learning_rate = 0.05;
    cfg.epochs = 200;
    cfg.batch_size = 16;
    cfg.seed = 7;
    cfg.metrics_sample = 16;
    return cfg;
}

/// 2-class linearly separable 2-D set: class = sign of the first coordinate.
DatasetPair separable_2d(int m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Matrix inputs(m, 2);
    std::vector<int> labels(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double a = rng.next_gaussian();
        const double b = rng.next_gaussian();
        const int label = i % 2;
        inputs(i, 0) = (label == 0 ? 1.0 : -1.0) * (1.0 + std::abs(a));
        inputs(i, 1) = 0.3 * b;
        labels[static_cast<std::size_t>(i)] = label;
    }
    double r = 0.0;
    for (int i = 0; i < m; ++i) r = std::max(r, inputs.row(i).norm());
    DatasetPair pair;
    pair.train = make_dataset(inputs, labels, r);
    pair.test = pair.train;
    return pair;
}

}  // namespace

TEST_CASE("init_network: zero scale gives a zero conv net") {
    TrainConfig cfg;
    cfg.input_dim = 9;
    cfg.arch = {LayerCfg{LayerCfg::Kind::conv, 0, 3, 3, 3}};
    cfg.init = TrainConfig::Init::orthogonal_filters;
    cfg.filter_scale = 0.0;
    const NetworkSpec net = init_network(cfg);
    CHECK(frobenius_norm(std::get<ConvCirculantLayer>(net.layers[0]).w) == 0.0);
}

TEST_CASE("init_network gaussian_scaled empirical variance is 2/fan_in within 5%") {
    TrainConfig cfg;
    cfg.input_dim = 100;
    cfg.arch = {LayerCfg{LayerCfg::Kind::dense, 128, 0, 0, 1}};
    cfg.seed = 3;
    const NetworkSpec net = init_network(cfg);
    const Matrix& w = std::get<DenseLayer>(net.layers[0]).w;
    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) sum_sq += w(i, j) * w(i, j);
    const double var = sum_sq / (w.rows() * w.cols());
    CHECK(std::abs(var - 0.02) <= 0.05 * 0.02);
}

TEST_CASE("init_network orthogonal filters pass the diagonal-Gram certificate") {
    TrainConfig cfg;
    cfg.input_dim = 27;
    cfg.arch = {LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3}};
    cfg.init = TrainConfig::Init::orthogonal_filters;
    cfg.seed = 11;
    const NetworkSpec net = init_network(cfg);
    const auto& cv = std::get<ConvCirculantLayer>(net.layers[0]);
    CHECK(cv.bank.orthonormal);
    const double sn = svd_small(cv.w).s(0);
    CHECK(std::abs(sn - std::sqrt(3.0)) <= 1e-8);
}

TEST_CASE("sgd_train: zero learning rate leaves the weights unchanged") {
    TrainConfig cfg = tiny_dense_cfg();
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    const DatasetPair data = separable_2d(32, 1);
    const NetworkSpec before = init_network(cfg);
    const TrainResult after = sgd_train(before, data.train, &data.test, cfg);
    for (std::size_t d = 0; d < before.layers.size(); ++d) {
        const Matrix& a = std::get<DenseLayer>(before.layers[d]).w;
        const Matrix& b = std::get<DenseLayer>(after.net.layers[d]).w;
        CHECK(frobenius_norm((a - b).eval()) == 0.0);
    }
}

TEST_CASE("sgd_train reaches 95% on the separable smoke benchmark") {
    TrainConfig cfg = tiny_dense_cfg();
    const DatasetPair data = separable_2d(64, 5);
    const TrainResult result = sgd_train(init_network(cfg), data.train, &data.test, cfg);
    REQUIRE(!result.history.epochs.empty());
    double best = 0.0;
    for (const EpochRecord& r : result.history.epochs) best = std::max(best, r.train_acc);
    CHECK(best >= 0.95);
    CHECK_FALSE(result.history.diverged);
}

TEST_CASE("sgd_train history is bit-identical across reruns with the same seed") {
    TrainConfig cfg = tiny_dense_cfg();
    cfg.epochs = 5;
    const DatasetPair data = separable_2d(32, 9);
    const TrainResult a = sgd_train(init_network(cfg), data.train, &data.test, cfg);
    const TrainResult b = sgd_train(init_network(cfg), data.train, &data.test, cfg);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
        CHECK(a.history.epochs[i].objective_value == b.history.epochs[i].objective_value);
        CHECK(a.history.epochs[i].train_acc == b.history.epochs[i].train_acc);
        CHECK(a.history.epochs[i].prod_spectral == b.history.epochs[i].prod_spectral);
        CHECK(a.history.epochs[i].b_jac_sample == b.history.epochs[i].b_jac_sample);
    }
    for (std::size_t d = 0; d < a.net.layers.size(); ++d)
        CHECK(frobenius_norm((std::get<DenseLayer>(a.net.layers[d]).w -
                              std::get<DenseLayer>(b.net.layers[d]).w)
                                 .eval()) == 0.0);
}

TEST_CASE("sgd_train aborts on divergence with the last finite state") {
    TrainConfig cfg = tiny_dense_cfg();
    cfg.learning_rate = 1e12;  // guaranteed blow-up under cross entropy
    cfg.epochs = 30;
    const DatasetPair data = separable_2d(32, 13);
    const TrainResult result = sgd_train(init_network(cfg), data.train, &data.test, cfg);
    CHECK(result.history.diverged);
    bool finite = true;
    for (const Layer& layer : result.net.layers)
        finite = finite && all_finite(std::get<DenseLayer>(layer).w);
    CHECK(finite);
}

TEST_CASE("orthonormal constraint projection keeps the certificate true while training") {
    TrainConfig cfg;
    cfg.input_dim = 27;
    cfg.arch = {LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                LayerCfg{LayerCfg::Kind::dense, 4, 0, 0, 1}};
    cfg.init = TrainConfig::Init::orthogonal_filters;
    cfg.constraint = TrainConfig::Constraint::orthonormal;
    cfg.learning_rate = 0.05;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.seed = 21;
    const DatasetPair data = synth_dataset(27, 4, 64, 16, 3, 1.0);
    const TrainResult result = sgd_train(init_network(cfg), data.train, &data.test, cfg);
    const auto& cv = std::get<ConvCirculantLayer>(result.net.layers[0]);
    const Matrix gram = cv.bank.filters * cv.bank.filters.transpose();
    CHECK(frobenius_norm((gram - Matrix::Identity(3, 3)).eval()) <= 1e-10);
    CHECK(std::abs(svd_small(cv.w).s(0) - std::sqrt(3.0)) <= 1e-8);
}

TEST_CASE("unit_norm constraint rescales filters to the requested norm") {
    TrainConfig cfg;
    cfg.input_dim = 27;
    cfg.arch = {LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                LayerCfg{LayerCfg::Kind::dense, 4, 0, 0, 1}};
    cfg.init = TrainConfig::Init::orthogonal_filters;
    cfg.constraint = TrainConfig::Constraint::unit_norm;
    cfg.filter_scale = 0.5;
    cfg.learning_rate = 0.05;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 22;
    const DatasetPair data = synth_dataset(27, 4, 64, 16, 4, 1.0);
    const TrainResult result = sgd_train(init_network(cfg), data.train, &data.test, cfg);
    const auto& cv = std::get<ConvCirculantLayer>(result.net.layers[0]);
    for (int j = 0; j < cv.bank.n; ++j)
        CHECK(cv.bank.filters.row(j).norm() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("synth_dataset: determinism, norm certificate, and class balance") {
    const DatasetPair a = synth_dataset(16, 4, 500, 100, 77, 2.5);
    const DatasetPair b = synth_dataset(16, 4, 500, 100, 77, 2.5);
    CHECK(frobenius_norm((a.train.inputs - b.train.inputs).eval()) == 0.0);
    CHECK(a.train.labels == b.train.labels);

    CHECK(a.train.R == 2.5);
    double max_norm = 0.0;
    for (int i = 0; i < a.train.m(); ++i)
        max_norm = std::max(max_norm, a.train.inputs.row(i).norm());
    for (int i = 0; i < a.test.m(); ++i)
        max_norm = std::max(max_norm, a.test.inputs.row(i).norm());
    CHECK(max_norm == doctest::Approx(2.5).epsilon(1e-12));

    std::vector<int> counts(4, 0);
    for (int label : a.train.labels) counts[static_cast<std::size_t>(label)]++;
    for (int c : counts) CHECK(std::abs(c - 125) <= 13);  // within 10% of m/4

    // single point lands exactly on the norm bound
    const DatasetPair single = synth_dataset(4, 2, 1, 0, 5, 3.0);
    CHECK(single.train.m() == 1);
    CHECK(single.train.inputs.row(0).norm() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("experiment CSVs are byte-identical across reruns") {
    TrainConfig cfg;
    cfg.input_dim = 8;
    cfg.arch = {LayerCfg{LayerCfg::Kind::dense, 8, 0, 0, 1}};
    cfg.learning_rate = 0.03;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.seed = 31;
    cfg.metrics_sample = 8;
    const DatasetPair data = synth_dataset(8, 3, 48, 12, 9, 1.0);

    const std::vector<int> depths = {1, 2};
    const auto rows1 = run_experiment_fig1c(depths, cfg, data);
    const auto rows2 = run_experiment_fig1c(depths, cfg, data);
    write_fig1c_csv(rows1, "fig1c_a.csv");
    write_fig1c_csv(rows2, "fig1c_b.csv");
    CHECK(slurp("fig1c_a.csv") == slurp("fig1c_b.csv"));
    std::remove("fig1c_a.csv");
    std::remove("fig1c_b.csv");

    // contraction surfaced at the experiment level
    for (const auto& r : rows1) CHECK(r.log10_b_jac <= r.log10_prod_spectral + 1e-8);
}

TEST_CASE("fig2 rows keep the contraction invariant and fig1b gap is consistent") {
    TrainConfig cfg;
    cfg.input_dim = 9;
    cfg.arch = {LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                LayerCfg{LayerCfg::Kind::dense, 3, 0, 0, 1}};
    cfg.init = TrainConfig::Init::orthogonal_filters;
    cfg.constraint = TrainConfig::Constraint::unit_norm;
    cfg.learning_rate = 0.05;
    cfg.epochs = 0;
    cfg.batch_size = 8;
    cfg.seed = 17;
    cfg.metrics_sample = 8;
    const DatasetPair data = synth_dataset(9, 3, 30, 12, 2, 1.0);

    const auto fig2 = run_experiment_fig2(cfg, data, 4);
    CHECK(fig2.size() == 4);
    for (const auto& r : fig2) CHECK(r.b_jac <= r.prod_spectral * (1 + 1e-8));

    cfg.epochs = 2;
    const auto fig1b = run_experiment_fig1b({0.5, 1.0}, cfg, data);
    REQUIRE(fig1b.size() == 2);
    for (const auto& r : fig1b)
        CHECK(r.gap == doctest::Approx(r.train_acc - r.test_acc).epsilon(1e-15));
}
