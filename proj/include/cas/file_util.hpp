/*
 * Copyright 2026 The CAS Toolkit Authors.
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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cas {

// Reads the whole file. Throws kIo when it cannot be opened.
std::string ReadFile(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so a
// failed write never leaves a truncated artifact behind.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);

// Splits on '\n', dropping a trailing '\r' and blank lines.
std::vector<std::string> SplitLines(std::string_view text);

void RequireFile(const std::filesystem::path& path);

// Shortest decimal representation that round-trips to the same double.
std::string FormatDouble(double value);

// RFC 4180 quoting when the field needs it.
std::string CsvField(std::string_view field);

}  // namespace cas
