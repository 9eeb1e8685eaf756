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

#include "gbaudit/report.hpp"

#include <cstdlib>
#include <fstream>

#include "gbaudit/json_writer.hpp"

namespace gbaudit {

namespace {

constexpr const char* kToolName = "gbaudit";
constexpr const char* kToolVersion = "1.0.0";

bool net_is_resnet(const NetworkSpec& net) {
    bool any_res = false, any_other = false;
    for (const Layer& layer : net.layers) {
        if (std::holds_alternative<ResNetBlockLayer>(layer)) any_res = true;
        else any_other = true;
    }
    if (any_res && any_other)
        throw ValidationError(errc::architecture_mismatch,
                              "bounds: mixed resnet and feedforward layers are not supported");
    return any_res;
}

void begin_envelope(JsonWriter& jw, const ReportEnvelope& envelope) {
    jw.begin_object();
    jw.key("tool").value(kToolName);
    jw.key("version").value(kToolVersion);
    jw.key("command").value(envelope.command);
    jw.key("config").begin_object();
    for (const auto& [k, v] : envelope.config) jw.key(k).value(v);
    jw.end_object();
    jw.key("timestamp").value(deterministic_timestamp());
    jw.key("payload");
}

void emit_jacobian(JsonWriter& jw, const JacobianStats& stats) {
    jw.begin_object();
    jw.key("full_max").value(stats.full_max);
    jw.key("full_argmax").value(stats.full_argmax);
    jw.key("leave_one_max").value(stats.leave_one_max);
    jw.key("leave_one_argmax_layer").value(stats.leave_one_argmax_layer);
    jw.key("leave_one_argmax_input").value(stats.leave_one_argmax_input);
    jw.key("prod_layer_bound").value(stats.prod_layer_bound);
    jw.key("tol").value(stats.tol);
    jw.key("seed").value(stats.seed);
    jw.key("per_input").begin_array();
    for (const auto& pi : stats.per_input) {
        jw.begin_object();
        jw.key("full").value(pi.full);
        jw.key("prefix").begin_array();
        for (double v : pi.prefix) jw.value(v);
        jw.end_array();
        jw.key("suffix").begin_array();
        for (double v : pi.suffix) jw.value(v);
        jw.end_array();
        jw.end_object();
    }
    jw.end_array();
    jw.end_object();
}

void emit_norms(JsonWriter& jw, const NormTable& norms) {
    jw.begin_object();
    jw.key("rows").begin_array();
    for (const NormRow& r : norms.rows) {
        jw.begin_object();
        jw.key("name").value(r.name);
        jw.key("spectral").value(r.spectral);
        jw.key("frobenius").value(r.frobenius);
        jw.key("two_one").value(r.two_one);
        jw.key("rank").value(r.rank);
        jw.key("width").value(r.width);
        jw.key("in_width").value(r.in_width);
        jw.key("stable_ratio").value(r.stable_ratio);
        jw.end_object();
    }
    jw.end_array();
    jw.key("prod_spectral").value(norms.prod_spectral());
    jw.key("prod_frobenius").value(norms.prod_frobenius());
    jw.key("max_spectral").value(norms.max_spectral());
    jw.end_object();
}

}  // namespace

long long deterministic_timestamp() {
    const char* env = std::getenv("SOURCE_DATE_EPOCH");
    if (env == nullptr) return 0;
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    return (end != env && *end == '\0') ? v : 0;
}

BoundReport make_bound_report(const NetworkSpec& net, const LabeledDataset& data, double gamma,
                              double delta, std::optional<double> b,
                              std::optional<int> rank_override, std::optional<CnnInfo> cnn,
                              double tol, std::uint64_t seed) {
    validate_network(net);
    if (data.dim() != net.input_dim)
        throw ValidationError(errc::dimension_mismatch, "bounds: dataset width != network input");
    if (delta <= 0.0 || delta >= 1.0)
        throw ValidationError(errc::invalid_argument, "bounds: delta must be in (0,1)");
    if (gamma <= 0.0) throw ValidationError(errc::invalid_argument, "bounds: gamma must be > 0");

    BoundReport rep;
    rep.m = data.m();
    rep.gamma = gamma;
    rep.R = data.R;
    rep.delta = delta;
    rep.b = b;
    rep.is_resnet = net_is_resnet(net);

    rep.jac = jacobian_stats(net, data, tol, seed);
    rep.norms = layer_norm_report(net, tol, seed);
    if (rank_override.has_value()) {
        if (*rank_override < 1)
            throw ValidationError(errc::invalid_argument, "bounds: rank override must be >= 1");
        for (NormRow& row : rep.norms.rows)
            row.rank = std::min(*rank_override, std::min(row.width, row.in_width));
    }

    const RiskResult risk = empirical_ramp_risk(net, data, gamma);
    rep.emp_ramp_risk = risk.mean;
    rep.max_ramp_loss = risk.max;
    rep.zero_one = zero_one_error(net, data);

    std::vector<WidthOp> width_ops;
    for (const Layer& layer : net.layers)
        if (const auto* wc = std::get_if<WidthChangeLayer>(&layer)) width_ops.push_back(wc->op);
    rep.width_multiplier = width_op_multiplier(width_ops);

    const double sup_loss = risk.max;
    if (rep.is_resnet) {
        rep.resnet_norms = resnet_norm_report(net);
        const int q = rep.resnet_norms->max_q();
        const double b_eff = b.value_or(1.0);
        const double cor3 = bound_cor3_resnet(*rep.resnet_norms, rep.jac, rep.m, gamma, rep.R,
                                              b_eff, q, sup_loss);
        rep.c_net = rep.jac.leave_one_max * rep.resnet_norms->max_vu_sum() * rep.R *
                    std::sqrt(static_cast<double>(rep.m) / q) /
                    (gamma * std::max(sup_loss, kSupLossFloor));
        rep.log_c = log_c_net(rep.c_net);
        rep.values.emplace_back("cor3_resnet", cor3);
        rep.values.emplace_back("width_multiplier", rep.width_multiplier);
        rep.values.emplace_back("gen_error_rhs", gen_error_rhs(risk.mean, cor3, rep.m, delta));
        if (!b.has_value()) rep.notes.push_back("cor3 evaluated with b = 1 (ramp loss bound)");
        return rep;
    }

    const Thm1Breakdown thm1 = bound_thm1_detailed(rep.norms, rep.jac, rep.m, gamma, rep.R, sup_loss);
    rep.c_net = thm1.c_net;
    rep.log_c = thm1.log_c_net;
    rep.rank_sum = thm1.rank_sum;
    rep.mean_rank = thm1.mean_rank;

    rep.values.emplace_back("thm1", thm1.value);
    if (b.has_value())
        rep.values.emplace_back(
            "cor1", bound_cor1(rep.norms, rep.jac, rep.m, gamma, rep.R, sup_loss, *b));
    rep.values.emplace_back("neyshabur15", bound_neyshabur15(rep.norms, rep.m, gamma));
    const double p_max = rep.norms.max_width();
    rep.values.emplace_back("bartlett17", bound_bartlett17(rep.norms, rep.m, gamma, p_max));
    rep.values.emplace_back("neyshabur_pac", bound_neyshabur_pac(rep.norms, rep.m, gamma, p_max));
    rep.values.emplace_back("golowich", bound_golowich(rep.norms, rep.m, gamma));
    if (golowich_stable_rank_one(rep.norms))
        rep.notes.push_back("golowich: all stable ranks are 1, log term vanishes");

    if (cnn.has_value()) {
        const CapacityTerms terms = capacity_terms_sec5(rep.norms, cnn->k, cnn->n_list);
        rep.values.emplace_back("sec5_ours", terms.ours);
        rep.values.emplace_back("sec5_bound1", terms.bound1);
        rep.values.emplace_back("sec5_bound2", terms.bound2);
        rep.values.emplace_back("sec5_bound3", terms.bound3);
        rep.values.emplace_back(
            "cor2_cnn", bound_cor2_cnn(cnn->k, cnn->s, cnn->n_list,
                                       static_cast<int>(cnn->n_list.size()), rep.jac.leave_one_max,
                                       rep.m, gamma, rep.R, b.value_or(1.0), sup_loss));
    }
    rep.values.emplace_back("width_multiplier", rep.width_multiplier);

    // covering-number route, itemized
    rep.alpha = std::min(b.value_or(std::numeric_limits<double>::infinity()),
                         rep.R * rep.jac.full_max / gamma);
    rep.l_w = rep.jac.leave_one_max * rep.R * std::sqrt(2.0 * rep.norms.depth()) *
              std::sqrt(rep.norms.max_spectral()) / gamma;
    double cover_sq = 0.0;
    for (const Layer& layer : net.layers) {
        const Matrix* w = nullptr;
        if (const auto* dl = std::get_if<DenseLayer>(&layer)) w = &dl->w;
        else if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) w = &cv->w;
        if (w == nullptr) continue;
        const auto svd = svd_small(*w);
        const double rank_tol = static_cast<double>(std::max(w->rows(), w->cols())) *
                                std::numeric_limits<double>::epsilon() * svd.s(0);
        for (Eigen::Index i = 0; i < svd.s.size(); ++i)
            if (svd.s(i) > rank_tol) cover_sq += 2.0 * svd.s(i);  // ||U||_F^2 + ||V||_F^2
    }
    rep.k_cover = std::sqrt(cover_sq);
    rep.h_cover = 2.0 * thm1.rank_sum;
    if (rep.alpha > 0.0 && rep.l_w > 0.0 && rep.k_cover > 0.0 && rep.h_cover > 0.0)
        rep.values.emplace_back(
            "dudley_erc", dudley_erc_bound(rep.alpha, rep.l_w, rep.k_cover, rep.h_cover, rep.m));
    rep.values.emplace_back("gen_error_rhs", gen_error_rhs(risk.mean, thm1.value, rep.m, delta));
    return rep;
}

std::string bound_report_json(const BoundReport& rep, const ReportEnvelope& envelope) {
    JsonWriter jw;
    begin_envelope(jw, envelope);
    jw.begin_object();
    jw.key("m").value(rep.m);
    jw.key("gamma").value(rep.gamma);
    jw.key("R").value(rep.R);
    jw.key("delta").value(rep.delta);
    jw.key("b");
    if (rep.b.has_value()) jw.value(*rep.b);
    else jw.null_value();
    jw.key("emp_ramp_risk").value(rep.emp_ramp_risk);
    jw.key("max_ramp_loss").value(rep.max_ramp_loss);
    jw.key("zero_one_error").value(rep.zero_one);
    jw.key("c_net").value(rep.c_net);
    jw.key("log_c_net").value(rep.log_c);
    jw.key("rank_sum").value(rep.rank_sum);
    jw.key("mean_rank").value(rep.mean_rank);
    jw.key("width_multiplier").value(rep.width_multiplier);
    jw.key("ingredients").begin_object();
    jw.key("alpha").value(rep.alpha);
    jw.key("l_w").value(rep.l_w);
    jw.key("k_cover").value(rep.k_cover);
    jw.key("h_cover").value(rep.h_cover);
    jw.end_object();
    jw.key("jacobian");
    emit_jacobian(jw, rep.jac);
    jw.key("norms");
    emit_norms(jw, rep.norms);
    if (rep.resnet_norms.has_value()) {
        jw.key("resnet_norms").begin_array();
        for (const auto& blk : rep.resnet_norms->blocks) {
            jw.begin_object();
            jw.key("u_spectral").value(blk.u_spectral);
            jw.key("v_spectral").value(blk.v_spectral);
            jw.key("p").value(blk.p);
            jw.key("q").value(blk.q);
            jw.end_object();
        }
        jw.end_array();
    }
    jw.key("values").begin_object();
    for (const auto& [name, value] : rep.values) jw.key(name).value(value);
    jw.end_object();
    jw.key("notes").begin_array();
    for (const std::string& note : rep.notes) jw.value(note);
    jw.end_array();
    jw.end_object();  // payload
    jw.end_object();  // envelope
    return std::move(jw).take();
}

std::string jacobian_stats_json(const JacobianStats& stats, const ReportEnvelope& envelope) {
    JsonWriter jw;
    begin_envelope(jw, envelope);
    emit_jacobian(jw, stats);
    jw.end_object();
    return std::move(jw).take();
}

std::string norm_table_json(const NormTable& norms, const ReportEnvelope& envelope) {
    JsonWriter jw;
    begin_envelope(jw, envelope);
    emit_norms(jw, norms);
    jw.end_object();
    return std::move(jw).take();
}

std::string erc_result_json(const std::string& mode, double exact_value,
                            const ErcAscentResult* ascent, const ReportEnvelope& envelope) {
    JsonWriter jw;
    begin_envelope(jw, envelope);
    jw.begin_object();
    jw.key("mode").value(mode);
    if (ascent == nullptr) {
        jw.key("value").value(exact_value);
    } else {
        jw.key("mean").value(ascent->mean);
        jw.key("stddev").value(ascent->stddev);
        jw.key("per_draw").begin_array();
        for (double v : ascent->per_draw) jw.value(v);
        jw.end_array();
    }
    jw.end_object();
    jw.end_object();
    return std::move(jw).take();
}

std::string values_csv(const BoundReport& rep) {
    std::string out = "name,value\n";
    for (const auto& [name, value] : rep.values) out += name + "," + format_double(value) + "\n";
    return out;
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(errc::io_failure, "cannot open for writing: " + path);
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f.good()) throw ValidationError(errc::io_failure, "write failed: " + path);
}

}  // namespace gbaudit
