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

#ifndef GBAUDIT_JSON_WRITER_HPP
#define GBAUDIT_JSON_WRITER_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "gbaudit/errors.hpp"

namespace gbaudit {

/// Fixed float formatting for every emitted report: 17 significant digits,
/// which round-trips binary64 exactly and keeps golden files byte-stable.
inline std::string format_double(double v) {
    if (!std::isfinite(v))
        throw NumericError(errc::nan_payload, "refusing to serialize a non-finite value");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Minimal streaming JSON emitter with caller-controlled (and therefore
/// canonical) key order. Keys and values are appended in call order; the
/// writer only tracks enough state to place commas.
class JsonWriter {
  public:
    std::string take() && { return std::move(out_); }
    const std::string& str() const { return out_; }

    JsonWriter& begin_object() {
        comma();
        out_ += '{';
        fresh_ = true;
        return *this;
    }
    JsonWriter& end_object() {
        out_ += '}';
        fresh_ = false;
        return *this;
    }
    JsonWriter& begin_array() {
        comma();
        out_ += '[';
        fresh_ = true;
        return *this;
    }
    JsonWriter& end_array() {
        out_ += ']';
        fresh_ = false;
        return *this;
    }
    JsonWriter& key(const std::string& k) {
        comma();
        append_string(k);
        out_ += ':';
        fresh_ = true;
        return *this;
    }
    JsonWriter& value(double v) {
        comma();
        out_ += format_double(v);
        fresh_ = false;
        return *this;
    }
    JsonWriter& value(int v) { return value_integral(static_cast<long long>(v)); }
    JsonWriter& value(long long v) { return value_integral(v); }
    JsonWriter& value(std::uint64_t v) {
        comma();
        out_ += std::to_string(v);
        fresh_ = false;
        return *this;
    }
    JsonWriter& value(bool v) {
        comma();
        out_ += v ? "true" : "false";
        fresh_ = false;
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& value(const std::string& v) {
        comma();
        append_string(v);
        fresh_ = false;
        return *this;
    }
    JsonWriter& null_value() {
        comma();
        out_ += "null";
        fresh_ = false;
        return *this;
    }

  private:
    JsonWriter& value_integral(long long v) {
        comma();
        out_ += std::to_string(v);
        fresh_ = false;
        return *this;
    }
    void comma() {
        if (!fresh_ && !out_.empty()) {
            const char last = out_.back();
            if (last != '{' && last != '[' && last != ':') out_ += ',';
        }
        fresh_ = false;
    }
    void append_string(const std::string& s) {
        out_ += '"';
        for (char c : s) {
            switch (c) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\r': out_ += "\\r"; break;
                case '\t': out_ += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out_ += buf;
                    } else {
                        out_ += c;
                    }
            }
        }
        out_ += '"';
    }

    std::string out_;
    bool fresh_ = true;
};

}  // namespace gbaudit

#endif  // GBAUDIT_JSON_WRITER_HPP
