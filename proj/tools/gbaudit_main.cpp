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

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "gbaudit/archive.hpp"
#include "gbaudit/bounds.hpp"
#include "gbaudit/dataset_io.hpp"
#include "gbaudit/erc.hpp"
#include "gbaudit/json_writer.hpp"
#include "gbaudit/report.hpp"
#include "gbaudit/trainer.hpp"

namespace {

using namespace gbaudit;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        write_text_file(out_path, text + "\n");
    }
}

std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

LabeledDataset load_data(const std::string& path, double declared_r) {
    return read_dataset_csv(path, declared_r > 0.0 ? RPolicy::declared(declared_r)
                                                   : RPolicy::observed());
}

std::vector<LayerCfg> parse_arch(const std::string& text) {
    std::vector<LayerCfg> arch;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        const std::size_t comma = text.find(',', begin);
        const std::string item =
            text.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin);
        if (!item.empty()) {
            LayerCfg lc;
            if (item.rfind("dense:", 0) == 0) {
                lc.kind = LayerCfg::Kind::dense;
                lc.out_dim = std::stoi(item.substr(6));
            } else if (item.rfind("conv:", 0) == 0) {
                lc.kind = LayerCfg::Kind::conv;
                const std::string rest = item.substr(5);
                const std::size_t c1 = rest.find(':');
                const std::size_t c2 = rest.find(':', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos)
                    throw ValidationError(errc::invalid_argument,
                                          "arch: conv layers need conv:<n>:<k>:<s>");
                lc.n = std::stoi(rest.substr(0, c1));
                lc.k = std::stoi(rest.substr(c1 + 1, c2 - c1 - 1));
                lc.s = std::stoi(rest.substr(c2 + 1));
            } else {
                throw ValidationError(errc::invalid_argument, "arch: unknown layer spec " + item);
            }
            arch.push_back(lc);
        }
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    if (arch.empty()) throw ValidationError(errc::invalid_argument, "arch: empty");
    return arch;
}

int run(int argc, char** argv) {
    CLI::App app{"gbaudit: margin-based capacity and Jacobian audits for ReLU networks"};
    app.require_subcommand(1);

    // ---- norms ----
    auto* cmd_norms = app.add_subcommand("norms", "per-layer norm/rank table of a weight archive");
    std::string norms_weights, norms_out;
    cmd_norms->add_option("--weights", norms_weights, "GBWT weight archive")->required();
    cmd_norms->add_option("--out", norms_out, "output JSON path (default: stdout)");

    // ---- jacobian ----
    auto* cmd_jac = app.add_subcommand("jacobian", "Jacobian spectral-norm statistics over a dataset");
    std::string jac_weights, jac_data, jac_out;
    int jac_from = 1, jac_to = -1;
    double jac_tol = 1e-8, jac_r = 0.0;
    std::uint64_t jac_seed = 0;
    cmd_jac->add_option("--weights", jac_weights, "GBWT weight archive")->required();
    cmd_jac->add_option("--data", jac_data, "dataset CSV (label, features...)")->required();
    cmd_jac->add_option("--from", jac_from, "first layer of the segment (1-indexed)");
    cmd_jac->add_option("--to", jac_to, "last layer of the segment (default: D)");
    cmd_jac->add_option("--tol", jac_tol, "power-iteration tolerance");
    cmd_jac->add_option("--seed", jac_seed, "RNG seed")->required();
    cmd_jac->add_option("--declared-r", jac_r, "declared input norm bound R (default: observed)");
    cmd_jac->add_option("--out", jac_out, "output JSON path (default: stdout)");

    // ---- bounds ----
    auto* cmd_bounds = app.add_subcommand("bounds", "evaluate every applicable capacity bound");
    std::string bounds_weights, bounds_data, bounds_out, bounds_csv;
    double bounds_gamma = 0.0, bounds_delta = 0.0, bounds_b = 0.0, bounds_tol = 1e-8,
           bounds_r = 0.0;
    int bounds_rank = 0, bounds_k = 0, bounds_s = 0;
    std::vector<int> bounds_n;
    std::uint64_t bounds_seed = 0;
    cmd_bounds->add_option("--weights", bounds_weights, "GBWT weight archive")->required();
    cmd_bounds->add_option("--data", bounds_data, "dataset CSV")->required();
    cmd_bounds->add_option("--gamma", bounds_gamma, "margin")->required();
    cmd_bounds->add_option("--delta", bounds_delta, "confidence level in (0,1)")->required();
    cmd_bounds->add_option("--bounded-loss", bounds_b, "loss bound b (enables the min-form bound)");
    cmd_bounds->add_option("--rank", bounds_rank, "override the numeric rank in formulas");
    cmd_bounds->add_option("--k", bounds_k, "CNN filter length");
    cmd_bounds->add_option("--s", bounds_s, "CNN stride");
    cmd_bounds->add_option("--n", bounds_n, "CNN per-layer filter counts");
    cmd_bounds->add_option("--tol", bounds_tol, "power-iteration tolerance");
    cmd_bounds->add_option("--seed", bounds_seed, "RNG seed")->required();
    cmd_bounds->add_option("--declared-r", bounds_r, "declared input norm bound R");
    cmd_bounds->add_option("--out", bounds_out, "output JSON path")->required();
    cmd_bounds->add_option("--csv", bounds_csv, "also export the values map as CSV");

    // ---- erc ----
    auto* cmd_erc = app.add_subcommand("erc", "empirical Rademacher complexity estimates");
    std::vector<std::string> erc_weights;
    std::string erc_data, erc_mode = "exact-finite", erc_out;
    double erc_gamma = 1.0, erc_step = 0.1, erc_r = 0.0;
    int erc_draws = 100, erc_steps = 0;
    std::vector<double> erc_caps;
    std::uint64_t erc_seed = 0;
    cmd_erc->add_option("--weights", erc_weights, "weight archive(s); repeat for a finite class")
        ->required();
    cmd_erc->add_option("--data", erc_data, "dataset CSV")->required();
    cmd_erc->add_option("--mode", erc_mode, "exact-finite | ascent")
        ->check(CLI::IsMember({"exact-finite", "ascent"}));
    cmd_erc->add_option("--gamma", erc_gamma, "ramp margin");
    cmd_erc->add_option("--draws", erc_draws, "Rademacher draws (ascent)");
    cmd_erc->add_option("--steps", erc_steps, "ascent steps per draw");
    cmd_erc->add_option("--step-size", erc_step, "ascent step size");
    cmd_erc->add_option("--caps", erc_caps, "per-layer spectral caps (ascent)");
    cmd_erc->add_option("--seed", erc_seed, "RNG seed")->required();
    cmd_erc->add_option("--declared-r", erc_r, "declared input norm bound R");
    cmd_erc->add_option("--out", erc_out, "output JSON path (default: stdout)");

    // ---- verify-circulant ----
    auto* cmd_verify = app.add_subcommand(
        "verify-circulant", "orthogonal-filter circulant weight norm certificate");
    int vc_k = 0, vc_s = 0, vc_n = 0, vc_p = 0;
    double vc_tol = 1e-8;
    std::uint64_t vc_seed = 0;
    std::string vc_out;
    cmd_verify->add_option("--k", vc_k, "filter length")->required();
    cmd_verify->add_option("--s", vc_s, "stride")->required();
    cmd_verify->add_option("--n", vc_n, "filter count")->required();
    cmd_verify->add_option("--p", vc_p, "input width")->required();
    cmd_verify->add_option("--seed", vc_seed, "RNG seed")->required();
    cmd_verify->add_option("--tol", vc_tol, "tolerance for the certificate");
    cmd_verify->add_option("--out", vc_out, "output JSON path (default: stdout)");

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "SGD-train a network at desk scale");
    std::string train_arch, train_data, train_out, train_history, train_init = "gaussian_scaled",
                train_objective = "cross_entropy", train_constraint = "none";
    std::vector<int> train_synth;  // p0, n_class, m_train, m_test
    double train_lr = 0.01, train_scale = 1.0, train_gamma = 1.0, train_r = 1.0;
    int train_epochs = 50, train_batch = 32;
    std::uint64_t train_seed = 0;
    cmd_train->add_option("--arch", train_arch, "layers, e.g. conv:3:9:3,dense:10")->required();
    cmd_train->add_option("--data", train_data, "training dataset CSV");
    cmd_train
        ->add_option("--synth", train_synth, "synthetic data: p0 n_class m_train m_test")
        ->expected(4);
    cmd_train->add_option("--init", train_init, "gaussian_scaled | orthogonal_filters")
        ->check(CLI::IsMember({"gaussian_scaled", "orthogonal_filters"}));
    cmd_train->add_option("--objective", train_objective, "cross_entropy | ramp_surrogate")
        ->check(CLI::IsMember({"cross_entropy", "ramp_surrogate"}));
    cmd_train->add_option("--constraint", train_constraint, "none | unit_norm | orthonormal")
        ->check(CLI::IsMember({"none", "unit_norm", "orthonormal"}));
    cmd_train->add_option("--lr", train_lr, "learning rate");
    cmd_train->add_option("--epochs", train_epochs, "epochs");
    cmd_train->add_option("--batch", train_batch, "batch size");
    cmd_train->add_option("--gamma", train_gamma, "ramp margin (ramp_surrogate)");
    cmd_train->add_option("--scale", train_scale, "filter norm scale c");
    cmd_train->add_option("--r", train_r, "synthetic data norm bound R");
    cmd_train->add_option("--seed", train_seed, "RNG seed")->required();
    cmd_train->add_option("--out", train_out, "output weight archive")->required();
    cmd_train->add_option("--history", train_history, "training history CSV");

    // ---- experiment ----
    auto* cmd_exp = app.add_subcommand("experiment", "figure-data experiments");
    std::string exp_name, exp_out_dir;
    std::vector<int> exp_depths = {2, 4, 6, 8, 10};
    std::vector<double> exp_scales = {0.25, 0.5, 1.0, 2.0, 4.0};
    int exp_inits = 30, exp_epochs = -1, exp_mtrain = -1, exp_mtest = -1;
    double exp_lr = -1.0;
    std::uint64_t exp_seed = 0;
    cmd_exp->add_option("name", exp_name, "fig1a | fig1b | fig1c | fig2")
        ->required()
        ->check(CLI::IsMember({"fig1a", "fig1b", "fig1c", "fig2"}));
    cmd_exp->add_option("--out", exp_out_dir, "output directory")->required();
    cmd_exp->add_option("--seed", exp_seed, "RNG seed")->required();
    cmd_exp->add_option("--depths", exp_depths, "depth list (fig1c)");
    cmd_exp->add_option("--scales", exp_scales, "filter scale list (fig1b)");
    cmd_exp->add_option("--n-inits", exp_inits, "initializations (fig2)");
    cmd_exp->add_option("--epochs", exp_epochs, "override training epochs");
    cmd_exp->add_option("--lr", exp_lr, "override learning rate");
    cmd_exp->add_option("--m-train", exp_mtrain, "override training set size");
    cmd_exp->add_option("--m-test", exp_mtest, "override test set size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (cmd_norms->parsed()) {
        const NetworkSpec net = read_weights(norms_weights);
        const NormTable norms = layer_norm_report(net);
        ReportEnvelope env{"norms", {{"weights", norms_weights}}};
        emit(norm_table_json(norms, env), norms_out);
    } else if (cmd_jac->parsed()) {
        const NetworkSpec net = read_weights(jac_weights);
        const LabeledDataset data = load_data(jac_data, jac_r);
        if (jac_to < 0) jac_to = net.depth();
        JacobianStats stats = jacobian_stats(net, data, jac_tol, jac_seed);
        JsonWriter full;
        full.begin_object();
        full.key("tool").value("gbaudit");
        full.key("version").value("1.0.0");
        full.key("command").value("jacobian");
        full.key("config").begin_object();
        full.key("weights").value(jac_weights);
        full.key("data").value(jac_data);
        full.key("from").value(jac_from);
        full.key("to").value(jac_to);
        full.key("tol").value(jac_tol);
        full.key("seed").value(jac_seed);
        full.end_object();
        full.key("timestamp").value(deterministic_timestamp());
        full.key("payload").begin_object();
        full.key("requested").begin_object();
        full.key("from").value(jac_from);
        full.key("to").value(jac_to);
        full.key("per_input").begin_array();
        double req_max = 0.0;
        for (int i = 0; i < data.m(); ++i) {
            const double v = jacobian_op_norm(net, data.inputs.row(i).transpose(), jac_from, jac_to,
                                              jac_tol, substream(jac_seed, 0xc0ffeeULL + i))
                                 .value;
            req_max = std::max(req_max, v);
            full.value(v);
        }
        full.end_array();
        full.key("max").value(req_max);
        full.end_object();
        full.key("stats");
        full.begin_object();
        full.key("full_max").value(stats.full_max);
        full.key("full_argmax").value(stats.full_argmax);
        full.key("leave_one_max").value(stats.leave_one_max);
        full.key("leave_one_argmax_layer").value(stats.leave_one_argmax_layer);
        full.key("leave_one_argmax_input").value(stats.leave_one_argmax_input);
        full.key("prod_layer_bound").value(stats.prod_layer_bound);
        full.key("per_input").begin_array();
        for (const auto& pi : stats.per_input) {
            full.begin_object();
            full.key("full").value(pi.full);
            full.key("prefix").begin_array();
            for (double v : pi.prefix) full.value(v);
            full.end_array();
            full.key("suffix").begin_array();
            for (double v : pi.suffix) full.value(v);
            full.end_array();
            full.end_object();
        }
        full.end_array();
        full.end_object();
        full.end_object();  // payload
        full.end_object();  // envelope
        emit(std::move(full).take(), jac_out);
    } else if (cmd_bounds->parsed()) {
        const NetworkSpec net = read_weights(bounds_weights);
        const LabeledDataset data = load_data(bounds_data, bounds_r);
        std::optional<double> b;
        if (cmd_bounds->count("--bounded-loss") > 0) b = bounds_b;
        std::optional<int> rank;
        if (cmd_bounds->count("--rank") > 0) rank = bounds_rank;
        std::optional<CnnInfo> cnn;
        if (cmd_bounds->count("--k") > 0 || cmd_bounds->count("--n") > 0) {
            if (bounds_k < 1 || bounds_s < 1 || bounds_n.empty())
                throw ValidationError(errc::invalid_argument,
                                      "bounds: --k, --s and --n must be given together");
            cnn = CnnInfo{bounds_k, bounds_s, bounds_n};
        } else {
            // infer from archive conv layers when present
            CnnInfo info;
            for (const Layer& layer : net.layers)
                if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
                    info.k = std::max(info.k, cv->bank.k);
                    info.s = cv->bank.s;
                    info.n_list.push_back(cv->bank.n);
                }
            if (!info.n_list.empty()) cnn = info;
        }
        const BoundReport report = make_bound_report(net, data, bounds_gamma, bounds_delta, b, rank,
                                                     cnn, bounds_tol, bounds_seed);
        ReportEnvelope env{"bounds",
                           {{"weights", bounds_weights},
                            {"data", bounds_data},
                            {"gamma", format_double(bounds_gamma)},
                            {"delta", format_double(bounds_delta)},
                            {"tol", format_double(bounds_tol)},
                            {"seed", fmt_u64(bounds_seed)}}};
        if (b.has_value()) env.config.emplace_back("bounded_loss", format_double(*b));
        if (rank.has_value()) env.config.emplace_back("rank", std::to_string(*rank));
        write_text_file(bounds_out, bound_report_json(report, env) + "\n");
        if (!bounds_csv.empty()) write_text_file(bounds_csv, values_csv(report));
    } else if (cmd_erc->parsed()) {
        const LabeledDataset data = load_data(erc_data, erc_r);
        ReportEnvelope env{"erc",
                           {{"data", erc_data},
                            {"mode", erc_mode},
                            {"gamma", format_double(erc_gamma)},
                            {"seed", fmt_u64(erc_seed)}}};
        if (erc_mode == "exact-finite") {
            FiniteClass cls;
            cls.gamma = erc_gamma;
            for (const std::string& w : erc_weights) cls.members.push_back(read_weights(w));
            const double value = erc_exact_finite(cls, data);
            emit(erc_result_json("exact-finite", value, nullptr, env), erc_out);
        } else {
            if (erc_weights.size() != 1)
                throw ValidationError(errc::invalid_argument, "erc ascent: exactly one --weights");
            const NetworkSpec tmpl = read_weights(erc_weights[0]);
            std::vector<double> caps = erc_caps;
            if (caps.empty()) {
                // default caps: the template's own layer norms
                for (const Layer& layer : tmpl.layers) {
                    if (const auto* dl = std::get_if<DenseLayer>(&layer))
                        caps.push_back(svd_small(dl->w).s(0));
                    else if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer))
                        caps.push_back(svd_small(cv->w).s(0));
                    else if (std::holds_alternative<WidthChangeLayer>(layer))
                        caps.push_back(1.0);
                    else
                        caps.push_back(
                            svd_small(std::get<ResNetBlockLayer>(layer).u).s(0));
                }
            }
            const ErcAscentResult result = erc_ascent(tmpl, caps, data, erc_gamma, erc_draws,
                                                      erc_steps, erc_step, erc_seed);
            emit(erc_result_json("ascent", 0.0, &result, env), erc_out);
        }
    } else if (cmd_verify->parsed()) {
        const FilterBank bank = orthonormalize_filters(vc_n, vc_k, vc_seed, vc_s);
        const Matrix w = conv_weight(bank, vc_p);
        const double measured = spectral_norm(w, std::min(vc_tol, 1e-10), 5000, vc_seed).value;
        const double expected = std::sqrt(static_cast<double>(vc_k) / vc_s);
        double gram_residual;
        if (vc_n == vc_k) {
            const Matrix gram = w.transpose() * w;
            gram_residual = frobenius_norm(
                (gram - (static_cast<double>(vc_k) / vc_s) *
                            Matrix::Identity(gram.rows(), gram.cols()))
                    .eval());
        } else {
            const Matrix fg = bank.filters * bank.filters.transpose();
            gram_residual =
                frobenius_norm((fg - Matrix::Identity(vc_n, vc_n)).eval());
        }
        const bool pass =
            std::abs(measured - expected) <= vc_tol * expected && gram_residual <= 1e-8;
        JsonWriter jw;
        jw.begin_object();
        jw.key("tool").value("gbaudit");
        jw.key("version").value("1.0.0");
        jw.key("command").value("verify-circulant");
        jw.key("config").begin_object();
        jw.key("k").value(vc_k);
        jw.key("s").value(vc_s);
        jw.key("n").value(vc_n);
        jw.key("p").value(vc_p);
        jw.key("seed").value(vc_seed);
        jw.key("tol").value(vc_tol);
        jw.end_object();
        jw.key("timestamp").value(deterministic_timestamp());
        jw.key("payload").begin_object();
        jw.key("spectral_norm").value(measured);
        jw.key("expected").value(expected);
        jw.key("gram_residual").value(gram_residual);
        jw.key("pass").value(pass);
        jw.end_object();
        jw.end_object();
        emit(std::move(jw).take(), vc_out);
        if (!pass) return 2;
    } else if (cmd_train->parsed()) {
        TrainConfig cfg;
        cfg.arch = parse_arch(train_arch);
        cfg.learning_rate = train_lr;
        cfg.epochs = train_epochs;
        cfg.batch_size = train_batch;
        cfg.seed = train_seed;
        cfg.gamma = train_gamma;
        cfg.filter_scale = train_scale;
        cfg.init = train_init == "orthogonal_filters" ? TrainConfig::Init::orthogonal_filters
                                                      : TrainConfig::Init::gaussian_scaled;
        cfg.objective = train_objective == "ramp_surrogate" ? TrainConfig::Objective::ramp_surrogate
                                                            : TrainConfig::Objective::cross_entropy;
        cfg.constraint = train_constraint == "unit_norm"    ? TrainConfig::Constraint::unit_norm
                         : train_constraint == "orthonormal" ? TrainConfig::Constraint::orthonormal
                                                             : TrainConfig::Constraint::none;
        DatasetPair data;
        if (!train_data.empty()) {
            data.train = load_data(train_data, 0.0);
            data.test = data.train;
        } else if (train_synth.size() == 4) {
            data = synth_dataset(train_synth[0], train_synth[1], train_synth[2], train_synth[3],
                                 substream(train_seed, 0xDA7AULL), train_r);
        } else {
            throw ValidationError(errc::invalid_argument, "train: need --data or --synth");
        }
        cfg.input_dim = data.train.dim();
        const TrainResult result = sgd_train(init_network(cfg), data.train, &data.test, cfg);
        write_weights(result.net, train_out);
        if (!train_history.empty()) {
            std::string csv = "epoch,objective,train_acc,test_acc,prod_spectral,b_jac_sample\n";
            for (const EpochRecord& r : result.history.epochs)
                csv += std::to_string(r.epoch) + "," + format_double(r.objective_value) + "," +
                       format_double(r.train_acc) + "," + format_double(r.test_acc) + "," +
                       format_double(r.prod_spectral) + "," + format_double(r.b_jac_sample) + "\n";
            write_text_file(train_history, csv);
        }
        if (result.history.diverged) {
            std::cerr << "train: objective diverged; wrote the last finite state\n";
            return 2;
        }
    } else if (cmd_exp->parsed()) {
        TrainConfig cfg;
        cfg.seed = exp_seed;
        std::uint64_t data_seed = substream(exp_seed, 0xDA7AULL);
        if (exp_name == "fig1c") {
            cfg.input_dim = 32;
            cfg.arch = {LayerCfg{LayerCfg::Kind::dense, 32, 0, 0, 1}};
            cfg.learning_rate = exp_lr > 0 ? exp_lr : 0.02;
            cfg.epochs = exp_epochs >= 0 ? exp_epochs : 30;
            cfg.batch_size = 32;
            const DatasetPair data =
                synth_dataset(32, 10, exp_mtrain > 0 ? exp_mtrain : 1000,
                              exp_mtest >= 0 ? exp_mtest : 250, data_seed, 1.0);
            write_fig1c_csv(run_experiment_fig1c(exp_depths, cfg, data),
                            exp_out_dir + "/fig1c.csv");
        } else {
            // conv desk configuration shared by fig1a, fig1b and fig2
            cfg.input_dim = 63;
            cfg.arch = {LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                        LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                        LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                        LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                        LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                        LayerCfg{LayerCfg::Kind::conv, 0, 3, 9, 3},
                        LayerCfg{LayerCfg::Kind::dense, 63, 0, 0, 1},
                        LayerCfg{LayerCfg::Kind::dense, 10, 0, 0, 1}};
            cfg.init = TrainConfig::Init::orthogonal_filters;
            cfg.constraint = TrainConfig::Constraint::orthonormal;
            cfg.learning_rate = exp_lr > 0 ? exp_lr : 0.05;
            cfg.epochs = exp_epochs >= 0 ? exp_epochs : 25;
            cfg.batch_size = 50;
            const DatasetPair data =
                synth_dataset(63, 10, exp_mtrain > 0 ? exp_mtrain : 2000,
                              exp_mtest >= 0 ? exp_mtest : 500, data_seed, 1.0);
            if (exp_name == "fig1a") {
                write_fig1a_csv(run_experiment_fig1a(cfg, data), exp_out_dir + "/fig1a.csv");
            } else if (exp_name == "fig1b") {
                write_fig1b_csv(run_experiment_fig1b(exp_scales, cfg, data),
                                exp_out_dir + "/fig1b.csv");
            } else {
                if (exp_epochs < 0) cfg.epochs = 0;  // fig2 defaults to at-init distributions
                write_fig2_csv(run_experiment_fig2(cfg, data, exp_inits),
                               exp_out_dir + "/fig2.csv");
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
