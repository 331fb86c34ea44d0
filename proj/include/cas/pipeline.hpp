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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cas/augmentation.hpp"
#include "cas/cas_engine.hpp"
#include "cas/embedding_store.hpp"
#include "cas/error.hpp"
#include "cas/random.hpp"
#include "cas/sampler.hpp"

namespace cas {

// Artifact names inside an output directory.
inline constexpr std::string_view kDictionaryKeysFile = "dictionary.case";
inline constexpr std::string_view kDictionarySidecarFile = "dictionary.json";
inline constexpr std::string_view kAnnotationsFile = "annotations.jsonl";
inline constexpr std::string_view kCasFile = "cas.jsonl";
inline constexpr std::string_view kStatsFile = "stats.json";
inline constexpr std::string_view kScheduleFile = "schedule.json";
inline constexpr std::string_view kSamplesFile = "samples.json";
inline constexpr std::string_view kAugmentDir = "augment";
inline constexpr std::string_view kPlanFile = "plan.jsonl";
inline constexpr std::string_view kSummaryFile = "summary.json";

// Sidecar path of a dictionary keys file: same stem, ".json" extension.
std::filesystem::path DictionarySidecarPath(const std::filesystem::path& keys_path);

// ---- Samples ------------------------------------------------------------------

struct SampleDraws {
  uint64_t seed = 0;
  double power = kDefaultPower;
  std::vector<size_t> indices;          // schedule row of each draw
  std::vector<std::string> image_ids;   // image id of each draw
};

SampleDraws DrawSamples(const SamplingSchedule& schedule, size_t n);

// {"seed", "power", "n", "draws": [{"index", "image_id"}]}
std::string SerializeSamples(const SampleDraws& draws);
SampleDraws ParseSamples(std::string_view json_text);
SampleDraws ReadSamples(const std::filesystem::path& path);

// ---- Augmentation batch -------------------------------------------------------

// Shuffles [0, n) with rng (Fisher-Yates) and pairs shuffled element k with
// shuffled element (k + n / 2) mod n. Returns n pairs; n == 1 pairs an
// element with itself.
std::vector<std::pair<size_t, size_t>> PairBatch(size_t n, Rng& rng);

struct AugmentOptions {
  MixMethod method = MixMethod::kCutMix;
  double alpha = kDefaultAlpha;
  uint64_t seed = 0;
  unsigned threads = 1;
};

// Mixes the drawn images pairwise and writes <out_dir>/mix-NNNNN.png plus
// <out_dir>/plan.jsonl. Image files come from the manifest's source_path,
// resolved against image_root. Labels are one-hot over the manifest's sorted
// class labels. The shuffle uses Rng(Mix64(seed)); pair k mixes with
// Rng(DeriveSeed(seed, k)). Plan lines:
//   {"pair": [id_i, id_j], "method", "lambda", "lambda_eff", "box"?, "seed",
//    "output", "classes": [c_i, c_j], "label_coeffs": [a, b]}
void AugmentBatch(const std::vector<std::string>& image_ids, const DatasetManifest& manifest,
                  const std::filesystem::path& image_root, const AugmentOptions& options,
                  const std::filesystem::path& out_dir);

// ---- Full pipeline -----------------------------------------------------------

struct PipelineConfig {
  std::filesystem::path taxonomy;
  std::filesystem::path text_embeddings;
  std::filesystem::path reference_embeddings;
  std::filesystem::path image_embeddings;
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  Scope scope = Scope::kPerClass;
  double power = kDefaultPower;
  double alpha = kDefaultAlpha;
  MixMethod method = MixMethod::kCutMix;
  uint64_t seed = 0;
  size_t samples = 0;  // 0 draws as many samples as there are images
  bool per_class_bins = false;
  unsigned threads = 1;
};

// Reads a JSON config. Relative paths resolve against the config file's
// directory; a missing taxonomy falls back to the bundled default.
// Keys: taxonomy, text_embeddings, reference_embeddings, image_embeddings,
// manifest, output_dir, scope, power, alpha, method, seed, samples,
// per_class_bins, threads.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);

// kValidation for power <= 0 or alpha <= 0; kIo for a missing input file.
void ValidatePipelineConfig(const PipelineConfig& config);

struct PipelineSummary {
  std::vector<std::string> artifacts;  // relative to the output directory
  std::string taxonomy_fingerprint;
  size_t images = 0;
  size_t samples = 0;
  CasStatistics before;  // CAS over the dataset as given
  CasStatistics after;   // CAS recomputed over the drawn samples
};

// {"taxonomy_fingerprint", "images", "samples", "artifacts": [...],
//  "cas_before": {...}, "cas_after": {...}, "delta_mean", "delta_std"}
std::string SerializePipelineSummary(const PipelineSummary& summary);

// Error raised by RunPipeline: the failing stage's error, tagged with the
// stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), stage + ": " + cause.what()), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// build-dict, annotate, cas, weights, sample, augment, report, in order.
// Every artifact lands under config.output_dir. Inputs are checked before
// anything is written. Stage failures surface as StageError.
PipelineSummary RunPipeline(const PipelineConfig& config);

}  // namespace cas
