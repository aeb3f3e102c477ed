/**
 * Copyright 2026 The roofstack Authors
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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace roofstack {

/// Minimal CSV: comma separated, optional double quotes, LF or CRLF rows.
/// The first row is returned as the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name; throws FormatError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Quotes the field only when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

std::string read_text_file(const std::string& path);
/// Writes through a temporary file and rename, so readers never observe a
/// partially written file.
void write_text_file_atomic(const std::string& path, std::string_view text);

}  // namespace roofstack
