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

#ifndef GBAUDIT_ERRORS_HPP
#define GBAUDIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gbaudit {

/// Error codes carried by ValidationError / NumericError. Each archive and
/// input failure mode gets its own code so callers (and the CLI) can report
/// precisely what went wrong.
enum class errc {
    invalid_argument,
    dimension_mismatch,
    nonfinite_input,
    degenerate_input,
    structure,
    infeasible,
    architecture_mismatch,
    size_limit,
    bad_magic,
    truncated_payload,
    overlapping_offsets,
    nan_payload,
    csv_format,
    label_range,
    io_failure,
    svd_failure,
    divergence,
};

const char* errc_name(errc c);

class AuditError : public std::runtime_error {
  public:
    AuditError(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    errc code() const { return code_; }

  private:
    errc code_;
};

/// Bad inputs: rejected before any numerics run. CLI exit code 1.
class ValidationError : public AuditError {
  public:
    using AuditError::AuditError;
};

/// Numerics that failed despite valid inputs. CLI exit code 2.
class NumericError : public AuditError {
  public:
    using AuditError::AuditError;
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_argument: return "invalid_argument";
        case errc::dimension_mismatch: return "dimension_mismatch";
        case errc::nonfinite_input: return "nonfinite_input";
        case errc::degenerate_input: return "degenerate_input";
        case errc::structure: return "structure";
        case errc::infeasible: return "infeasible";
        case errc::architecture_mismatch: return "architecture_mismatch";
        case errc::size_limit: return "size_limit";
        case errc::bad_magic: return "bad_magic";
        case errc::truncated_payload: return "truncated_payload";
        case errc::overlapping_offsets: return "overlapping_offsets";
        case errc::nan_payload: return "nan_payload";
        case errc::csv_format: return "csv_format";
        case errc::label_range: return "label_range";
        case errc::io_failure: return "io_failure";
        case errc::svd_failure: return "svd_failure";
        case errc::divergence: return "divergence";
    }
    return "unknown";
}

}  // namespace gbaudit

#endif  // GBAUDIT_ERRORS_HPP
