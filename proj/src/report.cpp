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

#include "cas/report.hpp"

#include <algorithm>

#include <json.hpp>

#include "cas/error.hpp"
#include "cas/file_util.hpp"

namespace cas {

PartitionSizes ComputePartitionSizes(size_t n) {
  PartitionSizes sizes;
  sizes.high = (4 * n + 9) / 10;
  sizes.middle = std::min((3 * n + 9) / 10, n - sizes.high);
  sizes.low = n - sizes.high - sizes.middle;
  return sizes;
}

CasPartition PartitionByCas(const std::vector<CasScore>& scores) {
  if (scores.empty()) ThrowValidation("cannot partition an empty score list");
  std::vector<CasScore> sorted = scores;
  std::sort(sorted.begin(), sorted.end(), [](const CasScore& a, const CasScore& b) {
    if (a.cas != b.cas) return a.cas > b.cas;
    return a.image_id < b.image_id;
  });
  const PartitionSizes sizes = ComputePartitionSizes(sorted.size());
  CasPartition out;
  auto first = sorted.begin();
  out.high.assign(first, first + static_cast<std::ptrdiff_t>(sizes.high));
  first += static_cast<std::ptrdiff_t>(sizes.high);
  out.middle.assign(first, first + static_cast<std::ptrdiff_t>(sizes.middle));
  first += static_cast<std::ptrdiff_t>(sizes.middle);
  out.low.assign(first, sorted.end());
  return out;
}

IntervalBinning BinCas(const std::vector<uint64_t>& cas_values) {
  if (cas_values.empty()) ThrowValidation("cannot bin an empty score list");
  IntervalBinning out;
  out.min_cas = *std::min_element(cas_values.begin(), cas_values.end());
  out.max_cas = *std::max_element(cas_values.begin(), cas_values.end());
  const uint64_t range = out.max_cas - out.min_cas;
  const double width = static_cast<double>(range) / kCasBins;

  out.bins.resize(kCasBins);
  std::vector<double> sums(kCasBins, 0.0);
  for (size_t b = 0; b < kCasBins; ++b) {
    out.bins[b].lower = static_cast<double>(out.min_cas) + width * static_cast<double>(b);
    out.bins[b].upper = b + 1 == kCasBins ? static_cast<double>(out.max_cas)
                                          : static_cast<double>(out.min_cas) + width * static_cast<double>(b + 1);
  }
  for (uint64_t v : cas_values) {
    size_t b = 0;
    if (range > 0) b = std::min<size_t>(kCasBins - 1, static_cast<size_t>(kCasBins * (v - out.min_cas) / range));
    ++out.bins[b].count;
    sums[b] += static_cast<double>(v);
  }
  for (size_t b = 0; b < kCasBins; ++b) {
    if (out.bins[b].count > 0) out.bins[b].mean_cas = sums[b] / static_cast<double>(out.bins[b].count);
  }
  return out;
}

IntervalBinning BinCas(const std::vector<CasScore>& scores) {
  std::vector<uint64_t> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.cas);
  return BinCas(values);
}

std::map<std::string, IntervalBinning> BinCasByScope(const std::vector<CasScore>& scores, Scope scope) {
  if (scores.empty()) ThrowValidation("cannot bin an empty score list");
  std::map<std::string, std::vector<uint64_t>> grouped;
  for (const auto& s : scores) {
    grouped[scope == Scope::kPerClass ? s.class_label : std::string(kGlobalScopeKey)].push_back(s.cas);
  }
  std::map<std::string, IntervalBinning> out;
  for (const auto& [key, values] : grouped) out.emplace(key, BinCas(values));
  return out;
}

std::vector<DistributionRow> AttributeDistribution(const AnnotatedDataset& annotations, Scope scope) {
  const FrequencyTable table = BuildFrequencyTable(annotations, scope);
  std::vector<DistributionRow> rows;
  for (const auto& [key, per_primary] : table.entries()) {
    for (size_t p = 0; p < per_primary.size(); ++p) {
      const size_t first = rows.size();
      for (const auto& [secondary, freq] : per_primary[p]) {
        rows.push_back({key, table.primaries()[p], secondary, freq.count, freq.rank});
      }
      std::stable_sort(rows.begin() + static_cast<std::ptrdiff_t>(first), rows.end(),
                       [](const DistributionRow& a, const DistributionRow& b) {
                         if (a.count != b.count) return a.count > b.count;
                         return a.secondary < b.secondary;
                       });
    }
  }
  return rows;
}

CasComparison CompareCas(const CasStatistics& before, const CasStatistics& after) {
  if (before.taxonomy_fingerprint != after.taxonomy_fingerprint) {
    ThrowValidation("cannot compare CAS statistics from different taxonomies ('" + before.taxonomy_fingerprint +
                    "' vs '" + after.taxonomy_fingerprint + "')");
  }
  return {before, after, after.mean - before.mean, after.std - before.std};
}

CasStatistics ResampledCasStatistics(const AnnotatedDataset& annotations, const std::vector<size_t>& draws,
                                     Scope scope) {
  AnnotatedDataset stream;
  stream.primaries = annotations.primaries;
  stream.taxonomy_fingerprint = annotations.taxonomy_fingerprint;
  stream.images.reserve(draws.size());
  for (size_t index : draws) {
    if (index >= annotations.size()) ThrowValidation("draw index " + std::to_string(index) + " is out of range");
    stream.images.push_back(annotations.images[index]);
  }
  CasStatistics stats = ComputeCasStatistics(ComputeCas(stream, scope));
  stats.taxonomy_fingerprint = annotations.taxonomy_fingerprint;
  return stats;
}

ReportTable PartitionTable(const CasPartition& partition) {
  ReportTable table{"partition", {"image_id", "class_label", "cas", "subset"}, {}};
  auto emit = [&](const std::vector<CasScore>& subset, const char* name) {
    for (const auto& s : subset) table.rows.push_back({s.image_id, s.class_label, s.cas, std::string(name)});
  };
  emit(partition.high, "high");
  emit(partition.middle, "middle");
  emit(partition.low, "low");
  return table;
}

ReportTable BinningTable(const std::map<std::string, IntervalBinning>& binnings) {
  ReportTable table{"bins", {"scope_key", "bin", "lower", "upper", "count", "mean_cas"}, {}};
  for (const auto& [key, binning] : binnings) {
    for (size_t b = 0; b < binning.bins.size(); ++b) {
      const CasBin& bin = binning.bins[b];
      Cell mean = bin.count > 0 ? Cell(bin.mean_cas) : Cell(std::monostate{});
      table.rows.push_back({key, static_cast<uint64_t>(b + 1), bin.lower, bin.upper, bin.count, mean});
    }
  }
  return table;
}

ReportTable DistributionTable(const std::vector<DistributionRow>& rows) {
  ReportTable table{"distribution", {"scope_key", "primary", "secondary", "count", "rank"}, {}};
  for (const auto& r : rows) {
    table.rows.push_back({r.scope_key, r.primary, r.secondary, r.count, static_cast<uint64_t>(r.rank)});
  }
  return table;
}

ReportTable ComparisonTable(const CasComparison& comparison) {
  ReportTable table{"compare", {"row", "mean", "std", "n", "taxonomy_fingerprint"}, {}};
  table.rows.push_back({std::string("before"), comparison.before.mean, comparison.before.std, comparison.before.n,
                        comparison.before.taxonomy_fingerprint});
  table.rows.push_back({std::string("after"), comparison.after.mean, comparison.after.std, comparison.after.n,
                        comparison.after.taxonomy_fingerprint});
  table.rows.push_back({std::string("delta"), comparison.delta_mean, comparison.delta_std, std::monostate{},
                        comparison.before.taxonomy_fingerprint});
  return table;
}

namespace {

struct CsvCell {
  std::string operator()(std::monostate) const { return ""; }
  std::string operator()(const std::string& s) const { return CsvField(s); }
  std::string operator()(int64_t v) const { return std::to_string(v); }
  std::string operator()(uint64_t v) const { return std::to_string(v); }
  std::string operator()(double v) const { return FormatDouble(v); }
};

struct JsonCell {
  nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
  nlohmann::ordered_json operator()(const std::string& s) const { return s; }
  nlohmann::ordered_json operator()(int64_t v) const { return v; }
  nlohmann::ordered_json operator()(uint64_t v) const { return v; }
  nlohmann::ordered_json operator()(double v) const { return v; }
};

}  // namespace

std::string ToCsv(const ReportTable& table) {
  std::string out;
  for (size_t c = 0; c < table.columns.size(); ++c) {
    if (c > 0) out += ',';
    out += CsvField(table.columns[c]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += ',';
      out += std::visit(CsvCell{}, row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string ToJson(const ReportTable& table) {
  nlohmann::ordered_json doc;
  doc["kind"] = table.kind;
  doc["columns"] = table.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = std::visit(JsonCell{}, row[c]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::vector<std::string> WriteReport(const ReportTable& table, const std::filesystem::path& dir) {
  const std::string stem = "report_" + table.kind;
  WriteFileAtomic(dir / (stem + ".csv"), ToCsv(table));
  WriteFileAtomic(dir / (stem + ".json"), ToJson(table));
  return {stem + ".csv", stem + ".json"};
}

}  // namespace cas
