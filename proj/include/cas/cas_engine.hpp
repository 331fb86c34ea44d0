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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cas/attribute_dictionary.hpp"

namespace cas {

enum class Scope { kPerClass, kGlobal };

std::string_view ScopeName(Scope scope);
// Accepts "per-class" and "global".
Scope ParseScope(std::string_view name);

// Scope key of an image: its class label for kPerClass, kGlobalScopeKey otherwise.
inline constexpr std::string_view kGlobalScopeKey = "*";

struct SecondaryFrequency {
  uint64_t count = 0;
  uint32_t rank = 0;  // dense rank, 1 = most frequent
};

// Secondary counts and scarcity ranks per (scope key, primary). Only observed
// secondaries appear, so every entry has count > 0 and a rank.
class FrequencyTable {
 public:
  using SecondaryMap = std::map<std::string, SecondaryFrequency>;
  using ScopeMap = std::map<std::string, std::vector<SecondaryMap>, std::less<>>;

  FrequencyTable(Scope scope, std::vector<std::string> primaries);

  Scope scope() const { return scope_; }
  const std::vector<std::string>& primaries() const { return primaries_; }

  std::string ScopeKeyOf(const AnnotatedImage& image) const;

  void Add(const std::string& scope_key, size_t primary_index, const std::string& secondary, uint64_t count = 1);
  // Assigns dense descending-frequency ranks to everything counted so far.
  void Rank();

  // nullopt when the secondary was never observed under that key.
  std::optional<SecondaryFrequency> Lookup(std::string_view scope_key, size_t primary_index,
                                           std::string_view secondary) const;

  const ScopeMap& entries() const { return entries_; }

 private:
  Scope scope_;
  std::vector<std::string> primaries_;
  ScopeMap entries_;
};

// Counts every (scope key, primary, secondary) and ranks them. Throws
// kValidation on an empty dataset.
FrequencyTable BuildFrequencyTable(const AnnotatedDataset& annotations, Scope scope);

struct CasScore {
  std::string image_id;
  std::string class_label;
  std::vector<std::pair<std::string, uint32_t>> components;  // primary -> rank, taxonomy order
  uint64_t cas = 0;                                          // sum of component ranks

  bool operator==(const CasScore&) const = default;
};

// Sum of the scarcity ranks of each image's assigned secondaries. Throws
// kValidation when an assignment has no rank under its scope key.
std::vector<CasScore> CasOf(const AnnotatedDataset& annotations, const FrequencyTable& table);

// Convenience: BuildFrequencyTable followed by CasOf on the same data.
std::vector<CasScore> ComputeCas(const AnnotatedDataset& annotations, Scope scope);

struct CasStatistics {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  uint64_t n = 0;
  std::string taxonomy_fingerprint;  // empty when unknown
};

// Throws kValidation on an empty list.
CasStatistics ComputeCasStatistics(const std::vector<CasScore>& scores);
CasStatistics ComputeCasStatistics(const std::vector<uint64_t>& cas_values);

// CAS JSON lines: {"image_id", "class_label", "cas", "components": {primary: rank}}
std::string SerializeCasScores(const std::vector<CasScore>& scores);
std::vector<CasScore> ParseCasScores(std::string_view jsonl);
std::vector<CasScore> ReadCasScores(const std::filesystem::path& path);
void WriteCasScores(const std::vector<CasScore>& scores, const std::filesystem::path& path);

// {"mean", "std", "n", "std_kind": "population", "taxonomy_fingerprint"?}
std::string SerializeCasStatistics(const CasStatistics& stats);
CasStatistics ParseCasStatistics(std::string_view json_text);

}  // namespace cas
