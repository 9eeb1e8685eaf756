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

#include "gbaudit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gbaudit/bounds.hpp"
#include "gbaudit/json_writer.hpp"
#include "gbaudit/rng.hpp"

namespace gbaudit {

namespace {

int infer_n_class(const LabeledDataset& data) {
    int n = 0;
    for (int label : data.labels) n = std::max(n, label + 1);
    return std::max(n, 2);
}

void project_filters(NetworkSpec& net, TrainConfig::Constraint mode, double scale) {
    if (mode == TrainConfig::Constraint::none) return;
    for (Layer& layer : net.layers) {
        auto* cv = std::get_if<ConvCirculantLayer>(&layer);
        if (cv == nullptr) continue;
        if (mode == TrainConfig::Constraint::unit_norm) {
            for (int j = 0; j < cv->bank.n; ++j) {
                const double norm = cv->bank.filters.row(j).norm();
                if (norm > 0.0) cv->bank.filters.row(j) *= scale / norm;
            }
            cv->bank.orthonormal = false;
        } else {
            // nearest orthonormal frame via the polar factor, then scale
            const auto svd = svd_small(cv->bank.filters);
            cv->bank.filters = svd.u * svd.v.transpose();
            cv->bank.filters *= scale;
            cv->bank.orthonormal = scale == 1.0;
        }
        rebuild_conv_weight(*cv);
    }
}

/// d(loss)/d(logits) for one sample; returns the loss value.
double sample_loss_grad(const Vector& out, int y, const TrainConfig& cfg, Vector& d_out) {
    if (cfg.objective == TrainConfig::Objective::cross_entropy) {
        const double mx = out.maxCoeff();
        Vector p = (out.array() - mx).exp();
        p /= p.sum();
        d_out = p;
        d_out(y) -= 1.0;
        return -std::log(std::max(p(y), 1e-300));
    }
    const double nu = margin(out, y);
    const double loss = ramp_loss_from_margin(nu, cfg.gamma);
    d_out = Vector::Zero(out.size());
    if (nu >= 0.0 && nu <= cfg.gamma) {
        int rival = -1;
        for (Eigen::Index c = 0; c < out.size(); ++c) {
            if (static_cast<int>(c) == y) continue;
            if (rival < 0 || out(c) > out(rival)) rival = static_cast<int>(c);
        }
        d_out(y) = -1.0 / cfg.gamma;
        d_out(rival) = 1.0 / cfg.gamma;
    }
    return loss;
}

void apply_grads(NetworkSpec& net, const std::vector<LayerGrads::Entry>& acc, double lr) {
    for (std::size_t d = 0; d < net.layers.size(); ++d) {
        if (auto* dl = std::get_if<DenseLayer>(&net.layers[d])) {
            dl->w -= lr * acc[d].w;
        } else if (auto* cv = std::get_if<ConvCirculantLayer>(&net.layers[d])) {
            cv->bank.filters -= lr * acc[d].filters;
            cv->bank.orthonormal = false;
            rebuild_conv_weight(*cv);
        } else if (auto* rb = std::get_if<ResNetBlockLayer>(&net.layers[d])) {
            rb->u -= lr * acc[d].u;
            rb->v -= lr * acc[d].v;
        }
    }
}

bool net_finite(const NetworkSpec& net) {
    for (const Layer& layer : net.layers) {
        if (const auto* dl = std::get_if<DenseLayer>(&layer)) {
            if (!all_finite(dl->w)) return false;
        } else if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
            if (!all_finite(cv->bank.filters)) return false;
        } else if (const auto* rb = std::get_if<ResNetBlockLayer>(&layer)) {
            if (!all_finite(rb->u) || !all_finite(rb->v)) return false;
        }
    }
    return true;
}

LabeledDataset head_subset(const LabeledDataset& data, int count) {
    LabeledDataset out;
    const int n = std::min(count, data.m());
    out.inputs = data.inputs.topRows(n);
    out.labels.assign(data.labels.begin(), data.labels.begin() + n);
    out.R = data.R;
    return out;
}

void write_lines(const std::string& path, const std::string& header,
                 const std::vector<std::string>& lines) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(errc::io_failure, "cannot open for writing: " + path);
    f << header << "\n";
    for (const std::string& line : lines) f << line << "\n";
    if (!f.good()) throw ValidationError(errc::io_failure, "write failed: " + path);
}

}  // namespace

NetworkSpec init_network(const TrainConfig& cfg) {
    if (cfg.input_dim < 1)
        throw ValidationError(errc::invalid_argument, "init_network: input_dim must be positive");
    if (cfg.arch.empty())
        throw ValidationError(errc::invalid_argument, "init_network: empty architecture");
    std::vector<Layer> layers;
    int dim = cfg.input_dim;
    for (std::size_t i = 0; i < cfg.arch.size(); ++i) {
        const LayerCfg& lc = cfg.arch[i];
        SplitMix64 rng(substream(cfg.seed, i));
        if (lc.kind == LayerCfg::Kind::dense) {
            if (lc.out_dim < 1)
                throw ValidationError(errc::invalid_argument, "init_network: dense width >= 1");
            Matrix w(lc.out_dim, dim);
            const double sigma = std::sqrt(2.0 / dim);
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = sigma * rng.next_gaussian();
            layers.push_back(DenseLayer{std::move(w)});
            dim = lc.out_dim;
        } else {
            FilterBank bank;
            if (cfg.init == TrainConfig::Init::orthogonal_filters) {
                bank = orthonormalize_filters(lc.n, lc.k, substream(cfg.seed, i), lc.s);
                bank.filters *= cfg.filter_scale;
                bank.orthonormal = cfg.filter_scale == 1.0;
            } else {
                Matrix filters(lc.n, lc.k);
                const double sigma = std::sqrt(2.0 / lc.k);
                for (Eigen::Index r = 0; r < filters.rows(); ++r)
                    for (Eigen::Index c = 0; c < filters.cols(); ++c)
                        filters(r, c) = sigma * rng.next_gaussian();
                bank = make_filter_bank(lc.n, lc.k, lc.s, std::move(filters));
            }
            layers.push_back(make_conv_layer(std::move(bank), dim));
            dim = layer_output_dim(layers.back());
        }
    }
    return make_network(std::move(layers), cfg.input_dim);
}

TrainResult sgd_train(NetworkSpec net, const LabeledDataset& train, const LabeledDataset* test,
                      const TrainConfig& cfg) {
    if (cfg.learning_rate < 0.0 || cfg.epochs < 0 || cfg.batch_size < 1)
        throw ValidationError(errc::invalid_argument, "sgd_train: bad hyperparameters");
    if (!all_finite(train.inputs))
        throw ValidationError(errc::nonfinite_input, "sgd_train: non-finite data");
    validate_network(net);
    const int m = train.m();
    const LabeledDataset metrics_data = head_subset(train, cfg.metrics_sample);

    TrainResult result;
    result.history.diverged = false;
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;

    NetworkSpec last_good = net;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SplitMix64 shuffle_rng(substream(cfg.seed, 0x10000ULL + static_cast<std::uint64_t>(epoch)));
        for (int i = m - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        double loss_sum = 0.0;
        for (int start = 0; start < m; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, m - start);
            std::vector<LayerGrads::Entry> acc(net.layers.size());
            for (std::size_t d = 0; d < net.layers.size(); ++d) {
                if (const auto* dl = std::get_if<DenseLayer>(&net.layers[d]))
                    acc[d].w = Matrix::Zero(dl->w.rows(), dl->w.cols());
                else if (const auto* cv = std::get_if<ConvCirculantLayer>(&net.layers[d]))
                    acc[d].filters = Matrix::Zero(cv->bank.n, cv->bank.k);
                else if (const auto* rb = std::get_if<ResNetBlockLayer>(&net.layers[d])) {
                    acc[d].u = Matrix::Zero(rb->u.rows(), rb->u.cols());
                    acc[d].v = Matrix::Zero(rb->v.rows(), rb->v.cols());
                }
            }
            for (int b = 0; b < count; ++b) {
                const int idx = order[static_cast<std::size_t>(start + b)];
                const Vector x = train.inputs.row(idx).transpose();
                const ActivationTrace trace = forward(net, x);
                Vector d_out;
                loss_sum += sample_loss_grad(trace.output(),
                                             train.labels[static_cast<std::size_t>(idx)], cfg, d_out);
                d_out /= count;
                const LayerGrads g = backward(net, trace, d_out);
                for (std::size_t d = 0; d < net.layers.size(); ++d) {
                    if (acc[d].w.size() > 0) acc[d].w += g.layers[d].w;
                    if (acc[d].filters.size() > 0) acc[d].filters += g.layers[d].filters;
                    if (acc[d].u.size() > 0) {
                        acc[d].u += g.layers[d].u;
                        acc[d].v += g.layers[d].v;
                    }
                }
            }
            apply_grads(net, acc, cfg.learning_rate);
        }
        project_filters(net, cfg.constraint, cfg.filter_scale);

        const double epoch_loss = loss_sum / m;
        if (!std::isfinite(epoch_loss) || !net_finite(net)) {
            result.history.diverged = true;
            net = last_good;
            break;
        }
        last_good = net;

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.objective_value = epoch_loss;
        rec.train_acc = 1.0 - zero_one_error(net, train);
        rec.test_acc = (test != nullptr && test->m() > 0) ? 1.0 - zero_one_error(net, *test) : 0.0;
        rec.prod_spectral = layer_norm_report(net).prod_spectral();
        rec.b_jac_sample =
            jacobian_stats(net, metrics_data, cfg.metrics_tol,
                           substream(cfg.seed, 0x20000ULL + static_cast<std::uint64_t>(epoch)),
                           /*include_leave_one=*/false)
                .full_max;
        result.history.epochs.push_back(rec);
    }
    result.net = std::move(net);
    return result;
}

DatasetPair synth_dataset(int p0, int n_class, int m_train, int m_test, std::uint64_t seed,
                          double R) {
    if (p0 < 1 || n_class < 2 || m_train < 1 || m_test < 0)
        throw ValidationError(errc::invalid_argument, "synth_dataset: bad sizes");
    if (!(R > 0.0)) throw ValidationError(errc::invalid_argument, "synth_dataset: R must be > 0");
    const int total = m_train + m_test;
    SplitMix64 mean_rng(substream(seed, 0));
    Matrix means(n_class, p0);
    for (int c = 0; c < n_class; ++c)
        for (int j = 0; j < p0; ++j) means(c, j) = 2.0 * mean_rng.next_gaussian();

    Matrix inputs(total, p0);
    std::vector<int> labels(static_cast<std::size_t>(total));
    SplitMix64 noise_rng(substream(seed, 1));
    for (int i = 0; i < total; ++i) {
        const int label = i % n_class;
        labels[static_cast<std::size_t>(i)] = label;
        for (int j = 0; j < p0; ++j) inputs(i, j) = means(label, j) + noise_rng.next_gaussian();
    }
    double max_norm = 0.0;
    for (int i = 0; i < total; ++i) max_norm = std::max(max_norm, inputs.row(i).norm());
    inputs *= R / max_norm;

    std::vector<int> order(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
    SplitMix64 shuffle_rng(substream(seed, 2));
    for (int i = total - 1; i > 0; --i) {
        const int j = static_cast<int>(shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    auto take = [&](int begin, int count) {
        LabeledDataset out;
        out.inputs.resize(count, p0);
        out.labels.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            out.inputs.row(i) = inputs.row(order[static_cast<std::size_t>(begin + i)]);
            out.labels[static_cast<std::size_t>(i)] =
                labels[static_cast<std::size_t>(order[static_cast<std::size_t>(begin + i)])];
        }
        out.R = R;
        return out;
    };
    DatasetPair pair;
    pair.train = take(0, m_train);
    // revalidate the norm certificate through the checked constructor
    pair.train = make_dataset(std::move(pair.train.inputs), std::move(pair.train.labels), R);
    pair.test = take(m_train, m_test);
    if (m_test > 0)
        pair.test = make_dataset(std::move(pair.test.inputs), std::move(pair.test.labels), R);
    return pair;
}

CapacityComparisonResult run_experiment_fig1a(const TrainConfig& cfg, const DatasetPair& data) {
    int k = 0;
    std::vector<int> n_list;
    for (const LayerCfg& lc : cfg.arch)
        if (lc.kind == LayerCfg::Kind::conv) {
            n_list.push_back(lc.n);
            k = std::max(k, lc.k);
        }
    if (n_list.empty())
        throw ValidationError(errc::invalid_argument, "fig1a: architecture has no conv layers");

    TrainResult trained = sgd_train(init_network(cfg), data.train, &data.test, cfg);
    const NormTable norms = layer_norm_report(trained.net);
    const CapacityTerms terms = capacity_terms_sec5(norms, k, n_list);

    CapacityComparisonResult result;
    result.trained = std::move(trained.net);
    const auto row = [](const char* name, double v) {
        return CapacityComparisonRow{name, v, std::log10(v)};
    };
    result.rows = {row("ours", terms.ours), row("bound1", terms.bound1),
                   row("bound2", terms.bound2), row("bound3", terms.bound3)};
    return result;
}

std::vector<ScaleSweepRow> run_experiment_fig1b(const std::vector<double>& scales, TrainConfig cfg,
                                                const DatasetPair& data) {
    if (scales.empty()) throw ValidationError(errc::invalid_argument, "fig1b: empty scale list");
    std::vector<ScaleSweepRow> rows;
    for (double c : scales) {
        if (!(c > 0.0)) throw ValidationError(errc::invalid_argument, "fig1b: scales must be > 0");
        cfg.filter_scale = c;
        if (cfg.constraint == TrainConfig::Constraint::none)
            cfg.constraint = TrainConfig::Constraint::unit_norm;
        TrainResult trained = sgd_train(init_network(cfg), data.train, &data.test, cfg);
        ScaleSweepRow row;
        row.scale = c;
        row.train_acc = 1.0 - zero_one_error(trained.net, data.train);
        row.test_acc = data.test.m() > 0 ? 1.0 - zero_one_error(trained.net, data.test) : 0.0;
        row.gap = row.train_acc - row.test_acc;
        rows.push_back(row);
    }
    return rows;
}

std::vector<DepthSweepRow> run_experiment_fig1c(const std::vector<int>& depths, TrainConfig cfg,
                                                const DatasetPair& data) {
    if (depths.empty()) throw ValidationError(errc::invalid_argument, "fig1c: empty depth list");
    const int width = cfg.arch.empty() ? 32 : cfg.arch.front().out_dim;
    const int n_class = infer_n_class(data.train);
    std::vector<DepthSweepRow> rows;
    for (std::size_t di = 0; di < depths.size(); ++di) {
        const int depth = depths[di];
        if (depth < 1) throw ValidationError(errc::invalid_argument, "fig1c: depths must be >= 1");
        TrainConfig run_cfg = cfg;
        run_cfg.seed = substream(cfg.seed, 0x1cULL + di);
        run_cfg.arch.clear();
        for (int d = 0; d < depth - 1; ++d)
            run_cfg.arch.push_back(LayerCfg{LayerCfg::Kind::dense, width, 0, 0, 1});
        run_cfg.arch.push_back(LayerCfg{LayerCfg::Kind::dense, n_class, 0, 0, 1});
        TrainResult trained = sgd_train(init_network(run_cfg), data.train, &data.test, run_cfg);
        const double prod = layer_norm_report(trained.net).prod_spectral();
        const double b_jac = jacobian_stats(trained.net, data.train, 1e-8,
                                            substream(run_cfg.seed, 0xface),
                                            /*include_leave_one=*/false)
                                 .full_max;
        DepthSweepRow row;
        row.depth = depth;
        row.log10_b_jac = std::log10(b_jac);
        row.log10_prod_spectral = std::log10(prod);
        row.log10_depth = std::log10(static_cast<double>(depth));
        row.log10_depth_sq = 2.0 * row.log10_depth;
        rows.push_back(row);
    }
    return rows;
}

std::vector<InitDistributionRow> run_experiment_fig2(const TrainConfig& cfg, const DatasetPair& data,
                                                     int n_inits) {
    if (n_inits < 1) throw ValidationError(errc::invalid_argument, "fig2: n_inits must be >= 1");
    std::vector<InitDistributionRow> rows;
    for (int t = 0; t < n_inits; ++t) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = substream(cfg.seed, 0xf2ULL * 131 + static_cast<std::uint64_t>(t));
        NetworkSpec net = init_network(run_cfg);
        if (run_cfg.epochs > 0) net = sgd_train(std::move(net), data.train, &data.test, run_cfg).net;
        InitDistributionRow row;
        row.init_index = t;
        row.prod_spectral = layer_norm_report(net).prod_spectral();
        row.b_jac = jacobian_stats(net, data.train, 1e-8, substream(run_cfg.seed, 0xf2ce),
                                   /*include_leave_one=*/false)
                        .full_max;
        row.log10_b_jac = std::log10(row.b_jac);
        row.log10_prod_spectral = std::log10(row.prod_spectral);
        rows.push_back(row);
    }
    return rows;
}

void write_fig1a_csv(const CapacityComparisonResult& result, const std::string& path) {
    std::vector<std::string> lines;
    for (const auto& r : result.rows)
        lines.push_back(r.bound_name + "," + format_double(r.value) + "," +
                        format_double(r.log10_value));
    write_lines(path, "bound_name,value,log10_value", lines);
}

void write_fig1b_csv(const std::vector<ScaleSweepRow>& rows, const std::string& path) {
    std::vector<std::string> lines;
    for (const auto& r : rows)
        lines.push_back(format_double(r.scale) + "," + format_double(r.train_acc) + "," +
                        format_double(r.test_acc) + "," + format_double(r.gap));
    write_lines(path, "scale,train_acc,test_acc,gap", lines);
}

void write_fig1c_csv(const std::vector<DepthSweepRow>& rows, const std::string& path) {
    std::vector<std::string> lines;
    for (const auto& r : rows)
        lines.push_back(std::to_string(r.depth) + "," + format_double(r.log10_b_jac) + "," +
                        format_double(r.log10_prod_spectral) + "," + format_double(r.log10_depth) +
                        "," + format_double(r.log10_depth_sq));
    write_lines(path, "depth,log10_b_jac,log10_prod_spectral,log10_depth,log10_depth_sq", lines);
}

void write_fig2_csv(const std::vector<InitDistributionRow>& rows, const std::string& path) {
    std::vector<std::string> lines;
    for (const auto& r : rows)
        lines.push_back(std::to_string(r.init_index) + "," + format_double(r.b_jac) + "," +
                        format_double(r.prod_spectral) + "," + format_double(r.log10_b_jac) + "," +
                        format_double(r.log10_prod_spectral));
    write_lines(path, "init_index,b_jac,prod_spectral,log10_b_jac,log10_prod_spectral", lines);
}

}  // namespace gbaudit
