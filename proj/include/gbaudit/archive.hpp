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

#ifndef GBAUDIT_ARCHIVE_HPP
#define GBAUDIT_ARCHIVE_HPP

#include <string>

#include "gbaudit/network.hpp"

namespace gbaudit {

/// GBWT weight archive: 8-byte magic "GBWT0001", a little-endian u32 header
/// length, a UTF-8 JSON header {version, layers:[{name, kind, rows, cols,
/// offset, meta}], dtype:"f64le", order:"row_major"}, then the concatenated
/// row-major binary64 payload. Matrices round-trip bit-exactly.
inline constexpr char kArchiveMagic[8] = {'G', 'B', 'W', 'T', '0', '0', '0', '1'};
inline constexpr int kArchiveVersion = 1;

void write_weights(const NetworkSpec& net, const std::string& path);
NetworkSpec read_weights(const std::string& path);

}  // namespace gbaudit

#endif  // GBAUDIT_ARCHIVE_HPP
