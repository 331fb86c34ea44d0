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

#include "cas/cas_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "cas/error.hpp"
#include "cas/file_util.hpp"

namespace cas {

using ordered_json = nlohmann::ordered_json;

std::string_view ScopeName(Scope scope) { return scope == Scope::kPerClass ? "per-class" : "global"; }

Scope ParseScope(std::string_view name) {
  if (name == "per-class") return Scope::kPerClass;
  if (name == "global") return Scope::kGlobal;
  throw Error(ErrorKind::kUsage, "unknown scope '" + std::string(name) + "' (expected per-class or global)");
}

FrequencyTable::FrequencyTable(Scope scope, std::vector<std::string> primaries)
    : scope_(scope), primaries_(std::move(primaries)) {}

std::string FrequencyTable::ScopeKeyOf(const AnnotatedImage& image) const {
  return scope_ == Scope::kPerClass ? image.class_label : std::string(kGlobalScopeKey);
}

void FrequencyTable::Add(const std::string& scope_key, size_t primary_index, const std::string& secondary,
                         uint64_t count) {
  auto& per_primary = entries_[scope_key];
  if (per_primary.empty()) per_primary.resize(primaries_.size());
  per_primary.at(primary_index)[secondary].count += count;
}

void FrequencyTable::Rank() {
  for (auto& [key, per_primary] : entries_) {
    for (auto& secondaries : per_primary) {
      std::set<uint64_t, std::greater<>> levels;
      for (const auto& [name, freq] : secondaries) levels.insert(freq.count);
      for (auto& [name, freq] : secondaries) {
        freq.rank = static_cast<uint32_t>(std::distance(levels.begin(), levels.find(freq.count)) + 1);
      }
    }
  }
}

std::optional<SecondaryFrequency> FrequencyTable::Lookup(std::string_view scope_key, size_t primary_index,
                                                         std::string_view secondary) const {
  auto it = entries_.find(scope_key);
  if (it == entries_.end() || primary_index >= it->second.size()) return std::nullopt;
  const auto& secondaries = it->second[primary_index];
  auto s = secondaries.find(std::string(secondary));
  if (s == secondaries.end()) return std::nullopt;
  return s->second;
}

FrequencyTable BuildFrequencyTable(const AnnotatedDataset& annotations, Scope scope) {
  if (annotations.empty()) ThrowValidation("cannot build a frequency table from an empty annotation set");
  FrequencyTable table(scope, annotations.primaries);
  for (const auto& image : annotations.images) {
    if (image.attributes.size() != annotations.primaries.size()) {
      ThrowValidation("image '" + image.image_id + "' has " + std::to_string(image.attributes.size()) +
                      " attributes, expected " + std::to_string(annotations.primaries.size()));
    }
    const std::string key = table.ScopeKeyOf(image);
    for (size_t p = 0; p < image.attributes.size(); ++p) table.Add(key, p, image.attributes[p].secondary);
  }
  table.Rank();
  return table;
}

std::vector<CasScore> CasOf(const AnnotatedDataset& annotations, const FrequencyTable& table) {
  if (annotations.primaries != table.primaries()) {
    ThrowValidation("annotation primaries do not match the frequency table");
  }
  std::vector<CasScore> scores;
  scores.reserve(annotations.size());
  for (const auto& image : annotations.images) {
    const std::string key = table.ScopeKeyOf(image);
    CasScore score{image.image_id, image.class_label, {}, 0};
    for (size_t p = 0; p < image.attributes.size(); ++p) {
      const auto freq = table.Lookup(key, p, image.attributes[p].secondary);
      if (!freq) {
        ThrowValidation("no scarcity rank for '" + annotations.primaries[p] + "/" + image.attributes[p].secondary +
                        "' under scope key '" + key + "'");
      }
      score.components.emplace_back(annotations.primaries[p], freq->rank);
      score.cas += freq->rank;
    }
    scores.push_back(std::move(score));
  }
  return scores;
}

std::vector<CasScore> ComputeCas(const AnnotatedDataset& annotations, Scope scope) {
  return CasOf(annotations, BuildFrequencyTable(annotations, scope));
}

CasStatistics ComputeCasStatistics(const std::vector<uint64_t>& cas_values) {
  if (cas_values.empty()) ThrowValidation("CAS statistics need at least one score");
  double sum = 0.0;
  for (uint64_t v : cas_values) sum += static_cast<double>(v);
  const double mean = sum / static_cast<double>(cas_values.size());
  double squares = 0.0;
  for (uint64_t v : cas_values) {
    const double d = static_cast<double>(v) - mean;
    squares += d * d;
  }
  return {mean, std::sqrt(squares / static_cast<double>(cas_values.size())), cas_values.size(), {}};
}

CasStatistics ComputeCasStatistics(const std::vector<CasScore>& scores) {
  std::vector<uint64_t> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.cas);
  return ComputeCasStatistics(values);
}

std::string SerializeCasScores(const std::vector<CasScore>& scores) {
  std::string out;
  for (const auto& score : scores) {
    ordered_json components = ordered_json::object();
    for (const auto& [primary, rank] : score.components) components[primary] = rank;
    ordered_json doc;
    doc["image_id"] = score.image_id;
    doc["class_label"] = score.class_label;
    doc["cas"] = score.cas;
    doc["components"] = std::move(components);
    out += doc.dump();
    out += '\n';
  }
  return out;
}

std::vector<CasScore> ParseCasScores(std::string_view jsonl) {
  std::vector<CasScore> scores;
  size_t line_no = 0;
  for (const std::string& line : SplitLines(jsonl)) {
    ++line_no;
    const std::string where = "CAS line " + std::to_string(line_no);
    ordered_json doc;
    try {
      doc = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      ThrowFormat(where + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("image_id") || !doc["image_id"].is_string() || !doc.contains("cas") ||
        !doc["cas"].is_number_unsigned()) {
      ThrowFormat(where + ": expected image_id and a non-negative integer cas");
    }
    CasScore score;
    score.image_id = doc["image_id"].get<std::string>();
    if (doc.contains("class_label") && doc["class_label"].is_string()) {
      score.class_label = doc["class_label"].get<std::string>();
    }
    score.cas = doc["cas"].get<uint64_t>();
    if (doc.contains("components") && doc["components"].is_object()) {
      uint64_t sum = 0;
      for (auto it = doc["components"].begin(); it != doc["components"].end(); ++it) {
        if (!it->is_number_unsigned()) ThrowFormat(where + ": component '" + it.key() + "' must be an integer");
        score.components.emplace_back(it.key(), it->get<uint32_t>());
        sum += it->get<uint32_t>();
      }
      if (sum != score.cas) ThrowValidation(where + ": cas " + std::to_string(score.cas) + " != component sum " + std::to_string(sum));
    }
    scores.push_back(std::move(score));
  }
  return scores;
}

std::vector<CasScore> ReadCasScores(const std::filesystem::path& path) { return ParseCasScores(ReadFile(path)); }

void WriteCasScores(const std::vector<CasScore>& scores, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeCasScores(scores));
}

std::string SerializeCasStatistics(const CasStatistics& stats) {
  ordered_json doc;
  doc["mean"] = stats.mean;
  doc["std"] = stats.std;
  doc["n"] = stats.n;
  doc["std_kind"] = "population";
  if (!stats.taxonomy_fingerprint.empty()) doc["taxonomy_fingerprint"] = stats.taxonomy_fingerprint;
  return doc.dump(2) + "\n";
}

CasStatistics ParseCasStatistics(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    ThrowFormat(std::string("CAS statistics: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("mean") || !doc["mean"].is_number() || !doc.contains("std") ||
      !doc["std"].is_number()) {
    ThrowFormat("CAS statistics: expected numeric mean and std");
  }
  CasStatistics stats;
  stats.mean = doc["mean"].get<double>();
  stats.std = doc["std"].get<double>();
  if (doc.contains("n") && doc["n"].is_number_unsigned()) stats.n = doc["n"].get<uint64_t>();
  if (doc.contains("taxonomy_fingerprint") && doc["taxonomy_fingerprint"].is_string()) {
    stats.taxonomy_fingerprint = doc["taxonomy_fingerprint"].get<std::string>();
  }
  return stats;
}

}  // namespace cas
