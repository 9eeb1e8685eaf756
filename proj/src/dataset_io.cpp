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

#include "gbaudit/dataset_io.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "gbaudit/json_writer.hpp"

namespace gbaudit {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        if (comma == std::string::npos) {
            cells.push_back(trim(line.substr(begin)));
            break;
        }
        cells.push_back(trim(line.substr(begin, comma - begin)));
        begin = comma + 1;
    }
    return cells;
}

long parse_int(const std::string& cell, int line_no) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(cell.c_str(), &end, 10);
    if (cell.empty() || end != cell.c_str() + cell.size() || errno != 0)
        throw ValidationError(errc::csv_format, "dataset csv line " + std::to_string(line_no) +
                                                    ": label is not an integer: '" + cell + "'");
    return v;
}

double parse_double(const std::string& cell, int line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || errno != 0)
        throw ValidationError(errc::csv_format, "dataset csv line " + std::to_string(line_no) +
                                                    ": non-numeric cell '" + cell + "'");
    return v;
}

}  // namespace

LabeledDataset read_dataset_csv(const std::string& path, const RPolicy& policy) {
    std::ifstream f(path);
    if (!f) throw ValidationError(errc::io_failure, "read_dataset_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    int line_no = 0;
    std::size_t width = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv(line);
        if (cells.size() < 2)
            throw ValidationError(errc::csv_format, "dataset csv line " + std::to_string(line_no) +
                                                        ": needs a label and at least one feature");
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            throw ValidationError(errc::csv_format,
                                  "dataset csv line " + std::to_string(line_no) + ": ragged row");
        const long label = parse_int(cells[0], line_no);
        if (label < 0)
            throw ValidationError(errc::label_range, "dataset csv line " + std::to_string(line_no) +
                                                         ": label out of range");
        labels.push_back(static_cast<int>(label));
        std::vector<double> feats(width - 1);
        for (std::size_t c = 1; c < width; ++c) feats[c - 1] = parse_double(cells[c], line_no);
        rows.push_back(std::move(feats));
    }
    if (rows.empty()) throw ValidationError(errc::csv_format, "read_dataset_csv: no samples");

    Matrix inputs(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j + 1 < width; ++j)
            inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];

    double observed = 0.0;
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        observed = std::max(observed, inputs.row(i).norm());
    double r = observed;
    if (policy.kind == RPolicy::Kind::declared) {
        if (policy.declared_value + 1e-12 * std::max(1.0, policy.declared_value) < observed)
            throw ValidationError(errc::invalid_argument,
                                  "read_dataset_csv: declared R " +
                                      format_double(policy.declared_value) +
                                      " is below the observed max norm " + format_double(observed));
        r = policy.declared_value;
    }
    return make_dataset(std::move(inputs), std::move(labels), r);
}

void write_dataset_csv(const LabeledDataset& data, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(errc::io_failure, "write_dataset_csv: cannot open " + path);
    for (int i = 0; i < data.m(); ++i) {
        f << data.labels[static_cast<std::size_t>(i)];
        for (int j = 0; j < data.dim(); ++j) f << ',' << format_double(data.inputs(i, j));
        f << '\n';
    }
    if (!f.good()) throw ValidationError(errc::io_failure, "write_dataset_csv: write failed");
}

}  // namespace gbaudit
