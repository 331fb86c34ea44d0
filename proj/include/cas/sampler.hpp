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
#include <string>
#include <string_view>
#include <vector>

#include "cas/cas_engine.hpp"
#include "cas/random.hpp"

namespace cas {

inline constexpr double kDefaultPower = 1.2;

// Scarcity-weighted sampling schedule: weight_i = cas_i^power and
// p_i = weight_i / sum_k weight_k.
struct SamplingSchedule {
  std::vector<std::string> image_ids;
  std::vector<uint64_t> cas;
  std::vector<double> weights;
  std::vector<double> probabilities;
  double power = kDefaultPower;
  uint64_t seed = 0;

  size_t size() const { return image_ids.size(); }
};

// Throws kValidation when scores are empty, a cas is zero, or power <= 0.
SamplingSchedule ComputeSchedule(const std::vector<CasScore>& scores, double power, uint64_t seed);

// i.i.d. draws with replacement from a schedule's categorical distribution,
// by inverse CDF: u = Rng::Uniform01(), index = first i with cdf_i > u.
class WeightedSampler {
 public:
  WeightedSampler(const SamplingSchedule& schedule, uint64_t seed);

  size_t Next();
  std::vector<size_t> Draw(size_t n);

 private:
  std::vector<double> cdf_;
  Rng rng_;
};

// A fresh stream seeded with schedule.seed; identical inputs give identical
// indices.
std::vector<size_t> Draw(const SamplingSchedule& schedule, size_t n);

// {"power", "seed", "items": [{"image_id", "cas", "weight", "p"}]}
std::string SerializeSchedule(const SamplingSchedule& schedule);
SamplingSchedule ParseSchedule(std::string_view json_text);
SamplingSchedule ReadSchedule(const std::filesystem::path& path);
void WriteSchedule(const SamplingSchedule& schedule, const std::filesystem::path& path);

}  // namespace cas
