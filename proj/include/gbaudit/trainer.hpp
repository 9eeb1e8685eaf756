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

#ifndef GBAUDIT_TRAINER_HPP
#define GBAUDIT_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gbaudit/margin.hpp"
#include "gbaudit/network.hpp"

namespace gbaudit {

/// One architecture entry: a dense layer of a given output width, or a
/// circulant convolution layer with n filters of length k and stride s.
struct LayerCfg {
    enum class Kind { dense, conv };
    Kind kind = Kind::dense;
    int out_dim = 0;  ///< dense only
    int n = 0, k = 0, s = 1;  ///< conv only
};

struct TrainConfig {
    int input_dim = 0;
    std::vector<LayerCfg> arch;
    enum class Init { gaussian_scaled, orthogonal_filters } init = Init::gaussian_scaled;
    double learning_rate = 0.01;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;
    enum class Objective { cross_entropy, ramp_surrogate } objective = Objective::cross_entropy;
    double gamma = 1.0;  ///< ramp surrogate margin
    /// Post-epoch projection of conv filters: rescale each filter to norm
    /// filter_scale, or re-orthonormalize the bank (then scale).
    enum class Constraint { none, unit_norm, orthonormal } constraint = Constraint::none;
    double filter_scale = 1.0;
    /// History metrics: the per-epoch Jacobian norm is taken over the first
    /// min(m, metrics_sample) training inputs to keep epochs cheap.
    int metrics_sample = 64;
    double metrics_tol = 1e-6;
};

NetworkSpec init_network(const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    double objective_value = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double prod_spectral = 0.0;
    double b_jac_sample = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    bool diverged = false;
};

struct TrainResult {
    NetworkSpec net;
    TrainHistory history;
};

/// Minibatch SGD on the configured objective; bias-free ReLU backprop with
/// the mask-at-zero rule. Divergence (non-finite objective) aborts with the
/// last finite state. Single-threaded, bit-deterministic in the seed.
TrainResult sgd_train(NetworkSpec net, const LabeledDataset& train, const LabeledDataset* test,
                      const TrainConfig& cfg);

struct DatasetPair {
    LabeledDataset train;
    LabeledDataset test;
};

/// Seeded Gaussian class-mean mixture, rescaled so the max input norm is R.
DatasetPair synth_dataset(int p0, int n_class, int m_train, int m_test, std::uint64_t seed,
                          double R);

/// Experiment drivers. Each returns its rows and can serialize them as CSV
/// with fixed headers; reruns with the same config are byte-identical.
struct CapacityComparisonRow {
    std::string bound_name;
    double value = 0.0;
    double log10_value = 0.0;
};
struct CapacityComparisonResult {
    std::vector<CapacityComparisonRow> rows;
    NetworkSpec trained;
};
CapacityComparisonResult run_experiment_fig1a(const TrainConfig& cfg, const DatasetPair& data);

struct ScaleSweepRow {
    double scale = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double gap = 0.0;
};
std::vector<ScaleSweepRow> run_experiment_fig1b(const std::vector<double>& scales, TrainConfig cfg,
                                                const DatasetPair& data);

struct DepthSweepRow {
    int depth = 0;
    double log10_b_jac = 0.0;
    double log10_prod_spectral = 0.0;
    double log10_depth = 0.0;
    double log10_depth_sq = 0.0;
};
std::vector<DepthSweepRow> run_experiment_fig1c(const std::vector<int>& depths, TrainConfig cfg,
                                                const DatasetPair& data);

struct InitDistributionRow {
    int init_index = 0;
    double b_jac = 0.0;
    double prod_spectral = 0.0;
    double log10_b_jac = 0.0;
    double log10_prod_spectral = 0.0;
};
std::vector<InitDistributionRow> run_experiment_fig2(const TrainConfig& cfg, const DatasetPair& data,
                                                     int n_inits);

void write_fig1a_csv(const CapacityComparisonResult& result, const std::string& path);
void write_fig1b_csv(const std::vector<ScaleSweepRow>& rows, const std::string& path);
void write_fig1c_csv(const std::vector<DepthSweepRow>& rows, const std::string& path);
void write_fig2_csv(const std::vector<InitDistributionRow>& rows, const std::string& path);

}  // namespace gbaudit

#endif  // GBAUDIT_TRAINER_HPP
