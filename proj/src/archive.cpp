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

#include "gbaudit/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "gbaudit/json_writer.hpp"

static_assert(std::endian::native == std::endian::little,
              "archive code assumes a little-endian host");

namespace gbaudit {

namespace {

struct LayerRecord {
    std::string name;
    std::string kind;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::uint64_t offset = 0;
    nlohmann::json meta;
};

void append_matrix(std::string& payload, const Matrix& m) {
    const std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
    const std::size_t base = payload.size();
    payload.resize(base + bytes);
    if (bytes > 0) std::memcpy(payload.data() + base, m.data(), bytes);  // row-major storage
}

void emit_meta_conv(JsonWriter& jw, const ConvCirculantLayer& cv) {
    jw.begin_object();
    jw.key("k").value(cv.bank.k);
    jw.key("s").value(cv.bank.s);
    jw.key("n").value(cv.bank.n);
    jw.key("p_prev").value(cv.p_prev);
    jw.key("orthonormal").value(cv.bank.orthonormal);
    jw.end_object();
}

void emit_meta_width(JsonWriter& jw, const WidthOp& op) {
    jw.begin_object();
    jw.key("op").value(width_op_kind_name(op.kind));
    jw.key("p").value(op.p);
    jw.key("s").value(op.s);
    jw.key("signed").value(op.signed_maxpool);
    jw.end_object();
}

}  // namespace

void write_weights(const NetworkSpec& net, const std::string& path) {
    validate_network(net);
    if (net.layers.empty())
        throw ValidationError(errc::invalid_argument, "write_weights: empty layer list");

    std::string payload;
    JsonWriter jw;
    jw.begin_object();
    jw.key("version").value(kArchiveVersion);
    jw.key("layers").begin_array();
    int idx = 0;
    for (const Layer& layer : net.layers) {
        ++idx;
        auto emit_entry = [&](const std::string& name, const char* kind, const Matrix& m,
                              auto&& emit_meta) {
            if (!all_finite(m))
                throw ValidationError(errc::nan_payload, "write_weights: non-finite weights");
            jw.begin_object();
            jw.key("name").value(name);
            jw.key("kind").value(kind);
            jw.key("rows").value(static_cast<long long>(m.rows()));
            jw.key("cols").value(static_cast<long long>(m.cols()));
            jw.key("offset").value(static_cast<long long>(payload.size()));
            jw.key("meta");
            emit_meta(jw);
            jw.end_object();
            append_matrix(payload, m);
        };
        const std::string base = "layer" + std::to_string(idx);
        auto empty_meta = [](JsonWriter& w) { w.begin_object().end_object(); };
        if (const auto* dl = std::get_if<DenseLayer>(&layer)) {
            emit_entry(base, "dense", dl->w, empty_meta);
        } else if (const auto* cv = std::get_if<ConvCirculantLayer>(&layer)) {
            emit_entry(base, "conv_filters", cv->bank.filters,
                       [&](JsonWriter& w) { emit_meta_conv(w, *cv); });
        } else if (const auto* wc = std::get_if<WidthChangeLayer>(&layer)) {
            const Matrix coeffs = wc->op.kind == WidthOp::Kind::one_by_one_conv
                                      ? Matrix(wc->op.coeffs.transpose())
                                      : Matrix(0, 0);
            emit_entry(base, "width_op", coeffs, [&](JsonWriter& w) { emit_meta_width(w, wc->op); });
        } else {
            const auto& rb = std::get<ResNetBlockLayer>(layer);
            emit_entry(base + ".u", "resnet_u", rb.u, empty_meta);
            emit_entry(base + ".v", "resnet_v", rb.v, empty_meta);
        }
    }
    jw.end_array();
    jw.key("dtype").value("f64le");
    jw.key("order").value("row_major");
    jw.end_object();
    const std::string header = std::move(jw).take();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(errc::io_failure, "write_weights: cannot open " + path);
    f.write(kArchiveMagic, sizeof(kArchiveMagic));
    const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());
    f.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!f.good()) throw ValidationError(errc::io_failure, "write_weights: write failed: " + path);
}

NetworkSpec read_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError(errc::io_failure, "read_weights: cannot open " + path);
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (blob.size() < sizeof(kArchiveMagic) + 4)
        throw ValidationError(errc::truncated_payload, "read_weights: file shorter than header");
    if (std::memcmp(blob.data(), kArchiveMagic, sizeof(kArchiveMagic)) != 0)
        throw ValidationError(errc::bad_magic, "read_weights: bad magic");
    std::uint32_t header_len = 0;
    std::memcpy(&header_len, blob.data() + sizeof(kArchiveMagic), 4);
    const std::size_t header_begin = sizeof(kArchiveMagic) + 4;
    if (blob.size() < header_begin + header_len)
        throw ValidationError(errc::truncated_payload, "read_weights: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(header_begin, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(errc::structure, std::string("read_weights: bad header JSON: ") + e.what());
    }
    if (!header.contains("layers") || !header["layers"].is_array() || header["layers"].empty())
        throw ValidationError(errc::invalid_argument, "read_weights: missing or empty layer list");
    if (header.value("dtype", "") != "f64le" || header.value("order", "") != "row_major")
        throw ValidationError(errc::structure, "read_weights: unsupported dtype or order");

    const char* payload = blob.data() + header_begin + header_len;
    const std::size_t payload_size = blob.size() - header_begin - header_len;

    std::vector<LayerRecord> records;
    for (const auto& j : header["layers"]) {
        LayerRecord rec;
        try {
            rec.name = j.at("name").get<std::string>();
            rec.kind = j.at("kind").get<std::string>();
            rec.rows = j.at("rows").get<std::uint64_t>();
            rec.cols = j.at("cols").get<std::uint64_t>();
            rec.offset = j.at("offset").get<std::uint64_t>();
            rec.meta = j.value("meta", nlohmann::json::object());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(errc::structure,
                                  std::string("read_weights: bad layer entry: ") + e.what());
        }
        records.push_back(std::move(rec));
    }

    // offsets: within payload and nonoverlapping
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
    for (const LayerRecord& rec : records) {
        const std::uint64_t bytes = rec.rows * rec.cols * sizeof(double);
        if (rec.offset + bytes > payload_size)
            throw ValidationError(errc::truncated_payload,
                                  "read_weights: payload truncated for " + rec.name);
        if (bytes > 0) spans.emplace_back(rec.offset, rec.offset + bytes);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second)
            throw ValidationError(errc::overlapping_offsets, "read_weights: overlapping offsets");

    auto load_matrix = [&](const LayerRecord& rec) {
        Matrix m(static_cast<Eigen::Index>(rec.rows), static_cast<Eigen::Index>(rec.cols));
        if (m.size() > 0)
            std::memcpy(m.data(), payload + rec.offset,
                        static_cast<std::size_t>(m.size()) * sizeof(double));
        if (!all_finite(m))
            throw ValidationError(errc::nan_payload, "read_weights: NaN payload in " + rec.name);
        return m;
    };

    std::vector<Layer> layers;
    int input_dim = -1;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const LayerRecord& rec = records[i];
        if (rec.kind == "dense") {
            Matrix w = load_matrix(rec);
            if (input_dim < 0) input_dim = static_cast<int>(w.cols());
            layers.push_back(DenseLayer{std::move(w)});
        } else if (rec.kind == "conv_filters") {
            const int k = rec.meta.value("k", 0);
            const int s = rec.meta.value("s", 0);
            const int n = rec.meta.value("n", 0);
            const int p_prev = rec.meta.value("p_prev", 0);
            const bool ortho = rec.meta.value("orthonormal", false);
            FilterBank bank = make_filter_bank(n, k, s, load_matrix(rec), ortho);
            if (input_dim < 0) input_dim = p_prev;
            layers.push_back(make_conv_layer(std::move(bank), p_prev));
        } else if (rec.kind == "width_op") {
            WidthOp op;
            op.kind = width_op_kind_from_name(rec.meta.value("op", ""));
            op.p = rec.meta.value("p", 0);
            op.s = rec.meta.value("s", 1);
            op.signed_maxpool = rec.meta.value("signed", false);
            if (op.kind == WidthOp::Kind::one_by_one_conv) {
                const Matrix coeffs = load_matrix(rec);
                op.coeffs = coeffs.row(0).transpose();
            }
            if (input_dim < 0) input_dim = op.p;
            layers.push_back(WidthChangeLayer{std::move(op)});
        } else if (rec.kind == "resnet_u") {
            if (i + 1 >= records.size() || records[i + 1].kind != "resnet_v")
                throw ValidationError(errc::structure,
                                      "read_weights: resnet_u must be followed by resnet_v");
            Matrix u = load_matrix(rec);
            Matrix v = load_matrix(records[i + 1]);
            if (input_dim < 0) input_dim = static_cast<int>(u.cols());
            layers.push_back(ResNetBlockLayer{std::move(u), std::move(v)});
            ++i;
        } else if (rec.kind == "resnet_v") {
            throw ValidationError(errc::structure, "read_weights: dangling resnet_v entry");
        } else {
            throw ValidationError(errc::structure, "read_weights: unknown layer kind " + rec.kind);
        }
    }
    return make_network(std::move(layers), input_dim);
}

}  // namespace gbaudit
