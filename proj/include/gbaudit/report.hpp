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

#ifndef GBAUDIT_REPORT_HPP
#define GBAUDIT_REPORT_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gbaudit/bounds.hpp"
#include "gbaudit/erc.hpp"

namespace gbaudit {

/// Optional CNN structure information for the circulant-specific bounds.
struct CnnInfo {
    int k = 0;
    int s = 1;
    std::vector<int> n_list;
};

/// Everything the bounds report needs, itemized: the norms table, Jacobian
/// statistics, the conditioning factor, covering ingredients and the final
/// value of every applicable bound.
struct BoundReport {
    int m = 0;
    double gamma = 0.0;
    double R = 0.0;
    double delta = 0.0;
    std::optional<double> b;

    JacobianStats jac;
    NormTable norms;
    bool is_resnet = false;
    std::optional<ResnetNorms> resnet_norms;

    double emp_ramp_risk = 0.0;
    double max_ramp_loss = 0.0;
    double zero_one = 0.0;

    double c_net = 0.0;
    double log_c = 0.0;
    double rank_sum = 0.0;
    double mean_rank = 0.0;

    double alpha = 0.0;
    double l_w = 0.0;
    double k_cover = 0.0;
    double h_cover = 0.0;
    double width_multiplier = 1.0;

    std::vector<std::pair<std::string, double>> values;  ///< stable emission order
    std::vector<std::string> notes;
};

BoundReport make_bound_report(const NetworkSpec& net, const LabeledDataset& data, double gamma,
                              double delta, std::optional<double> b,
                              std::optional<int> rank_override, std::optional<CnnInfo> cnn,
                              double tol, std::uint64_t seed);

/// Envelope for all serialized reports. The timestamp is deterministic: it is
/// taken from SOURCE_DATE_EPOCH when set, else 0, so identical invocations
/// emit identical bytes.
struct ReportEnvelope {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;  ///< flag echo, insertion order
};

long long deterministic_timestamp();

std::string bound_report_json(const BoundReport& report, const ReportEnvelope& envelope);
std::string jacobian_stats_json(const JacobianStats& stats, const ReportEnvelope& envelope);
std::string norm_table_json(const NormTable& norms, const ReportEnvelope& envelope);
std::string erc_result_json(const std::string& mode, double exact_value,
                            const ErcAscentResult* ascent, const ReportEnvelope& envelope);

std::string values_csv(const BoundReport& report);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace gbaudit

#endif  // GBAUDIT_REPORT_HPP
