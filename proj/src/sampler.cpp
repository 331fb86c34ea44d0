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

#include "cas/sampler.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cas/error.hpp"
#include "cas/file_util.hpp"

namespace cas {

using ordered_json = nlohmann::ordered_json;

namespace {

void Normalize(SamplingSchedule& schedule) {
  // Sum the smallest weights first to keep the total tight.
  std::vector<double> sorted = schedule.weights;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double w : sorted) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) ThrowValidation("sampling weights do not sum to a positive finite value");
  schedule.probabilities.resize(schedule.weights.size());
  for (size_t i = 0; i < schedule.weights.size(); ++i) schedule.probabilities[i] = schedule.weights[i] / total;
}

}  // namespace

SamplingSchedule ComputeSchedule(const std::vector<CasScore>& scores, double power, uint64_t seed) {
  if (scores.empty()) ThrowValidation("cannot build a sampling schedule from no scores");
  if (!(power > 0.0) || !std::isfinite(power)) ThrowValidation("power must be a positive finite number");
  SamplingSchedule schedule;
  schedule.power = power;
  schedule.seed = seed;
  for (const auto& score : scores) {
    if (score.cas < 1) ThrowValidation("image '" + score.image_id + "' has cas 0; scarcity scores start at 1");
    const double weight = std::pow(static_cast<double>(score.cas), power);
    if (!std::isfinite(weight)) ThrowValidation("weight of '" + score.image_id + "' overflows");
    schedule.image_ids.push_back(score.image_id);
    schedule.cas.push_back(score.cas);
    schedule.weights.push_back(weight);
  }
  Normalize(schedule);
  return schedule;
}

WeightedSampler::WeightedSampler(const SamplingSchedule& schedule, uint64_t seed) : rng_(seed) {
  if (schedule.probabilities.empty()) ThrowValidation("cannot sample from an empty schedule");
  cdf_.resize(schedule.probabilities.size());
  double running = 0.0;
  for (size_t i = 0; i < cdf_.size(); ++i) {
    running += schedule.probabilities[i];
    cdf_[i] = running;
  }
  // Rounding can leave the total a few ulps under 1; the last positive
  // item takes up the slack so every u in [0, 1) lands somewhere.
  size_t last = cdf_.size();
  while (last > 0 && schedule.probabilities[last - 1] <= 0.0) --last;
  if (last == 0) ThrowValidation("schedule has no positive probability");
  for (size_t i = last - 1; i < cdf_.size(); ++i) cdf_[i] = 1.0;
}

size_t WeightedSampler::Next() {
  const double u = rng_.Uniform01();
  return static_cast<size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
}

std::vector<size_t> WeightedSampler::Draw(size_t n) {
  std::vector<size_t> out(n);
  for (auto& i : out) i = Next();
  return out;
}

std::vector<size_t> Draw(const SamplingSchedule& schedule, size_t n) {
  return WeightedSampler(schedule, schedule.seed).Draw(n);
}

std::string SerializeSchedule(const SamplingSchedule& schedule) {
  ordered_json doc;
  doc["power"] = schedule.power;
  doc["seed"] = schedule.seed;
  ordered_json items = ordered_json::array();
  for (size_t i = 0; i < schedule.size(); ++i) {
    ordered_json item;
    item["image_id"] = schedule.image_ids[i];
    item["cas"] = schedule.cas[i];
    item["weight"] = schedule.weights[i];
    item["p"] = schedule.probabilities[i];
    items.push_back(std::move(item));
  }
  doc["items"] = std::move(items);
  return doc.dump(2) + "\n";
}

SamplingSchedule ParseSchedule(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    ThrowFormat(std::string("schedule: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("power") || !doc["power"].is_number() || !doc.contains("seed") ||
      !doc["seed"].is_number_integer() || !doc.contains("items") || !doc["items"].is_array()) {
    ThrowFormat("schedule: expected power, seed and items");
  }
  SamplingSchedule schedule;
  schedule.power = doc["power"].get<double>();
  schedule.seed = doc["seed"].get<uint64_t>();
  double total = 0.0;
  for (const auto& item : doc["items"]) {
    if (!item.is_object() || !item.contains("image_id") || !item["image_id"].is_string() || !item.contains("weight") ||
        !item["weight"].is_number() || !item.contains("p") || !item["p"].is_number()) {
      ThrowFormat("schedule: each item needs image_id, weight and p");
    }
    schedule.image_ids.push_back(item["image_id"].get<std::string>());
    schedule.cas.push_back(item.contains("cas") && item["cas"].is_number_unsigned() ? item["cas"].get<uint64_t>() : 0);
    const double weight = item["weight"].get<double>();
    const double p = item["p"].get<double>();
    if (!(weight >= 0.0) || !(p >= 0.0) || !std::isfinite(weight)) {
      ThrowValidation("schedule: item '" + schedule.image_ids.back() + "' has a negative or non-finite weight");
    }
    schedule.weights.push_back(weight);
    schedule.probabilities.push_back(p);
    total += p;
  }
  if (schedule.image_ids.empty()) ThrowValidation("schedule has no items");
  if (std::abs(total - 1.0) > 1e-9) ThrowValidation("schedule probabilities sum to " + FormatDouble(total));
  return schedule;
}

SamplingSchedule ReadSchedule(const std::filesystem::path& path) { return ParseSchedule(ReadFile(path)); }

void WriteSchedule(const SamplingSchedule& schedule, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeSchedule(schedule));
}

}  // namespace cas
