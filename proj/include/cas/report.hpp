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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cas/attribute_dictionary.hpp"
#include "cas/cas_engine.hpp"

namespace cas {

// ---- High / middle / low split -------------------------------------------

struct PartitionSizes {
  size_t high = 0;
  size_t middle = 0;
  size_t low = 0;
};

// high = ceil(0.4 N), middle = min(ceil(0.3 N), N - high), low = the rest.
// Integer arithmetic only.
PartitionSizes ComputePartitionSizes(size_t n);

struct CasPartition {
  std::vector<CasScore> high;
  std::vector<CasScore> middle;
  std::vector<CasScore> low;
};

// Sorted by descending CAS, ties by ascending image_id, then cut by
// ComputePartitionSizes. Throws kValidation on empty input.
CasPartition PartitionByCas(const std::vector<CasScore>& scores);

// ---- Equal-width CAS intervals ---------------------------------------------

inline constexpr size_t kCasBins = 10;

struct CasBin {
  double lower = 0.0;
  double upper = 0.0;
  uint64_t count = 0;
  double mean_cas = 0.0;  // 0 when the bin is empty
};

struct IntervalBinning {
  uint64_t min_cas = 0;
  uint64_t max_cas = 0;
  std::vector<CasBin> bins;
};

// kCasBins bins over [min, max]; value v goes to bin
// floor(kCasBins * (v - min) / (max - min)), the last bin closed on the
// right. When max == min every value lands in the first bin.
IntervalBinning BinCas(const std::vector<uint64_t>& cas_values);
IntervalBinning BinCas(const std::vector<CasScore>& scores);
// Keyed by scope key ("*" for global).
std::map<std::string, IntervalBinning> BinCasByScope(const std::vector<CasScore>& scores, Scope scope);

// ---- Secondary-attribute distribution ----------------------------------------

struct DistributionRow {
  std::string scope_key;
  std::string primary;
  std::string secondary;
  uint64_t count = 0;
  uint32_t rank = 0;
};

// Scope keys ascending, primaries in taxonomy order, then count descending
// with ties by secondary name.
std::vector<DistributionRow> AttributeDistribution(const AnnotatedDataset& annotations, Scope scope);

// ---- Before / after comparison ---------------------------------------------

struct CasComparison {
  CasStatistics before;
  CasStatistics after;
  double delta_mean = 0.0;
  double delta_std = 0.0;
};

// Throws kValidation when the two taxonomy fingerprints differ.
CasComparison CompareCas(const CasStatistics& before, const CasStatistics& after);

// CAS statistics of a resampled stream: frequencies and ranks are rebuilt
// from the drawn multiset (duplicates count), then CAS is scored per draw.
CasStatistics ResampledCasStatistics(const AnnotatedDataset& annotations, const std::vector<size_t>& draws,
                                     Scope scope);

// ---- Tabular output ---------------------------------------------------------

using Cell = std::variant<std::monostate, std::string, int64_t, uint64_t, double>;

struct ReportTable {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

ReportTable PartitionTable(const CasPartition& partition);
ReportTable BinningTable(const std::map<std::string, IntervalBinning>& binnings);
ReportTable DistributionTable(const std::vector<DistributionRow>& rows);
ReportTable ComparisonTable(const CasComparison& comparison);

std::string ToCsv(const ReportTable& table);
// {"kind": str, "columns": [...], "rows": [{column: value}, ...]}
std::string ToJson(const ReportTable& table);

// Writes <dir>/report_<kind>.csv and .json; returns the two file names.
std::vector<std::string> WriteReport(const ReportTable& table, const std::filesystem::path& dir);

}  // namespace cas
