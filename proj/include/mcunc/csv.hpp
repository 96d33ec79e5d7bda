/*
   Copyright 2026 The mcunc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mcunc::csv {

struct Row {
  std::size_t line = 0;  // 1-based line in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

/// Reads a comma-separated file with a header line. No quoting; a trailing
/// '\r' is stripped and blank lines are skipped. Every row must have as many
/// fields as the header.
Table read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line);

double parse_double(std::string_view text, std::size_t line);
std::int64_t parse_int(std::string_view text, std::size_t line);

/// 17 significant digits; parses back to the identical double.
std::string format_double(double value);

/// Writes `content` to `path`, throwing ValidationError when the file cannot be opened.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mcunc::csv
