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

#ifndef GBAUDIT_DATASET_IO_HPP
#define GBAUDIT_DATASET_IO_HPP

#include <optional>
#include <string>

#include "gbaudit/margin.hpp"

namespace gbaudit {

/// How the norm certificate R is obtained from a CSV file: the observed max
/// row norm, or a declared value validated against the data.
struct RPolicy {
    enum class Kind { observed, declared } kind = Kind::observed;
    double declared_value = 0.0;

    static RPolicy observed() { return {}; }
    static RPolicy declared(double value) { return {Kind::declared, value}; }
};

/// CSV layout: one sample per line, integer label first, features after.
LabeledDataset read_dataset_csv(const std::string& path, const RPolicy& policy);
void write_dataset_csv(const LabeledDataset& data, const std::string& path);

}  // namespace gbaudit

#endif  // GBAUDIT_DATASET_IO_HPP
