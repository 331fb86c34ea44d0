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

#include "cas/pipeline.hpp"

#include <cstdio>
#include <map>
#include <numeric>

#include <json.hpp>

#include "cas/attribute_dictionary.hpp"
#include "cas/file_util.hpp"
#include "cas/image_io.hpp"
#include "cas/report.hpp"
#include "cas/taxonomy.hpp"
#include "parallel.hpp"

namespace cas {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path DictionarySidecarPath(const fs::path& keys_path) {
  fs::path sidecar = keys_path;
  sidecar.replace_extension(".json");
  return sidecar;
}

SampleDraws DrawSamples(const SamplingSchedule& schedule, size_t n) {
  SampleDraws out;
  out.seed = schedule.seed;
  out.power = schedule.power;
  out.indices = Draw(schedule, n);
  out.image_ids.reserve(n);
  for (size_t index : out.indices) out.image_ids.push_back(schedule.image_ids[index]);
  return out;
}

std::string SerializeSamples(const SampleDraws& draws) {
  ordered_json doc;
  doc["seed"] = draws.seed;
  doc["power"] = draws.power;
  doc["n"] = draws.indices.size();
  ordered_json items = ordered_json::array();
  for (size_t k = 0; k < draws.indices.size(); ++k) {
    items.push_back({{"index", draws.indices[k]}, {"image_id", draws.image_ids[k]}});
  }
  doc["draws"] = std::move(items);
  return doc.dump(2) + "\n";
}

SampleDraws ParseSamples(std::string_view json_text) {
  try {
    const auto doc = ordered_json::parse(json_text);
    SampleDraws out;
    out.seed = doc.at("seed").get<uint64_t>();
    out.power = doc.at("power").get<double>();
    for (const auto& item : doc.at("draws")) {
      out.indices.push_back(item.at("index").get<size_t>());
      out.image_ids.push_back(item.at("image_id").get<std::string>());
    }
    if (out.indices.size() != doc.at("n").get<size_t>()) ThrowFormat("samples: 'n' does not match the draw count");
    return out;
  } catch (const nlohmann::json::exception& e) {
    ThrowFormat(std::string("samples: ") + e.what());
  }
}

SampleDraws ReadSamples(const fs::path& path) {
  try {
    return ParseSamples(ReadFile(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::pair<size_t, size_t>> PairBatch(size_t n, Rng& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.UniformBelow(i)]);
  std::vector<std::pair<size_t, size_t>> pairs;
  pairs.reserve(n);
  for (size_t k = 0; k < n; ++k) pairs.emplace_back(order[k], order[(k + n / 2) % n]);
  return pairs;
}

namespace {

std::string MixFileName(size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "mix-%05zu.png", k);
  return buf;
}

}  // namespace

void AugmentBatch(const std::vector<std::string>& image_ids, const DatasetManifest& manifest, const fs::path& image_root,
                  const AugmentOptions& options, const fs::path& out_dir) {
  if (image_ids.empty()) ThrowValidation("augment: no samples to mix");
  if (options.alpha <= 0.0) ThrowValidation("augment: alpha must be positive");

  const std::vector<std::string> classes = manifest.ClassLabels();
  std::map<std::string, size_t> class_index;
  for (size_t c = 0; c < classes.size(); ++c) class_index[classes[c]] = c;

  // Resolve and check every file before writing anything.
  std::map<std::string, ImageTensor> images;
  for (const auto& id : image_ids) {
    if (images.count(id)) continue;
    const ManifestEntry* entry = manifest.Find(id);
    if (entry == nullptr) ThrowValidation("augment: image '" + id + "' is not in the manifest");
    if (!entry->source_path) ThrowValidation("augment: image '" + id + "' has no source_path");
    RequireFile(image_root / *entry->source_path);
    images.emplace(id, ImageTensor());
  }
  for (auto& [id, image] : images) image = ReadImage(image_root / *manifest.Find(id)->source_path);

  auto one_hot = [&](const std::string& id) {
    std::vector<double> label(classes.size(), 0.0);
    label[class_index.at(manifest.Find(id)->class_label)] = 1.0;
    return label;
  };

  Rng shuffle_rng(Mix64(options.seed));
  const auto pairs = PairBatch(image_ids.size(), shuffle_rng);
  std::vector<MixPlan> plans(pairs.size());
  fs::create_directories(out_dir);
  detail::ParallelFor(pairs.size(), options.threads, [&](size_t begin, size_t end) {
    for (size_t k = begin; k < end; ++k) {
      const std::string& id_i = image_ids[pairs[k].first];
      const std::string& id_j = image_ids[pairs[k].second];
      Rng rng(DeriveSeed(options.seed, k));
      MixResult mix = MakeMix(options.method, images.at(id_i), images.at(id_j), one_hot(id_i), one_hot(id_j),
                              options.alpha, rng);
      WritePng(mix.image, out_dir / MixFileName(k));
      plans[k] = std::move(mix.plan);
    }
  });

  std::string plan_lines;
  for (size_t k = 0; k < pairs.size(); ++k) {
    const std::string& id_i = image_ids[pairs[k].first];
    const std::string& id_j = image_ids[pairs[k].second];
    const MixPlan& plan = plans[k];
    ordered_json line;
    line["pair"] = {id_i, id_j};
    line["method"] = std::string(MixMethodName(plan.method));
    line["lambda"] = plan.lambda;
    line["lambda_eff"] = plan.lambda_effective;
    if (plan.box) line["box"] = {plan.box->x0, plan.box->y0, plan.box->x1, plan.box->y1};
    line["seed"] = DeriveSeed(options.seed, k);
    line["output"] = MixFileName(k);
    line["classes"] = {manifest.Find(id_i)->class_label, manifest.Find(id_j)->class_label};
    line["label_coeffs"] = {plan.label_coeffs.first, plan.label_coeffs.second};
    plan_lines += line.dump() + "\n";
  }
  WriteFileAtomic(out_dir / kPlanFile, plan_lines);
}

PipelineConfig LoadPipelineConfig(const fs::path& path) {
  const std::string text = ReadFile(path);
  const fs::path base = path.parent_path();
  auto resolve = [&base](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  PipelineConfig config;
  try {
    const auto doc = ordered_json::parse(text);
    if (!doc.is_object()) ThrowFormat("pipeline config must be a JSON object");
    config.taxonomy = doc.contains("taxonomy") ? resolve(doc["taxonomy"].get<std::string>()) : DefaultTaxonomyPath();
    config.text_embeddings = resolve(doc.at("text_embeddings").get<std::string>());
    config.reference_embeddings = resolve(doc.at("reference_embeddings").get<std::string>());
    config.image_embeddings = resolve(doc.at("image_embeddings").get<std::string>());
    config.manifest = resolve(doc.at("manifest").get<std::string>());
    config.output_dir = resolve(doc.value("output_dir", std::string("out")));
    if (doc.contains("scope")) config.scope = ParseScope(doc["scope"].get<std::string>());
    config.power = doc.value("power", kDefaultPower);
    config.alpha = doc.value("alpha", kDefaultAlpha);
    if (doc.contains("method")) config.method = ParseMixMethod(doc["method"].get<std::string>());
    config.seed = doc.value("seed", uint64_t{0});
    config.samples = doc.value("samples", size_t{0});
    config.per_class_bins = doc.value("per_class_bins", false);
    config.threads = doc.value("threads", 1u);
  } catch (const nlohmann::json::exception& e) {
    ThrowFormat(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind() == ErrorKind::kUsage ? ErrorKind::kValidation : e.kind(), path.string() + ": " + e.what());
  }
  return config;
}

void ValidatePipelineConfig(const PipelineConfig& config) {
  if (!(config.power > 0.0)) ThrowValidation("power must be positive");
  if (!(config.alpha > 0.0)) ThrowValidation("alpha must be positive");
  if (config.output_dir.empty()) ThrowValidation("output_dir must be set");
  for (const auto* p : {&config.taxonomy, &config.text_embeddings, &config.reference_embeddings,
                        &config.image_embeddings, &config.manifest}) {
    RequireFile(*p);
  }
}

namespace {

ordered_json StatsJson(const CasStatistics& stats) {
  return ordered_json::parse(SerializeCasStatistics(stats));
}

template <typename Fn>
auto RunStage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

}  // namespace

std::string SerializePipelineSummary(const PipelineSummary& summary) {
  ordered_json doc;
  doc["taxonomy_fingerprint"] = summary.taxonomy_fingerprint;
  doc["images"] = summary.images;
  doc["samples"] = summary.samples;
  doc["artifacts"] = summary.artifacts;
  doc["cas_before"] = StatsJson(summary.before);
  doc["cas_after"] = StatsJson(summary.after);
  doc["delta_mean"] = summary.after.mean - summary.before.mean;
  doc["delta_std"] = summary.after.std - summary.before.std;
  return doc.dump(2) + "\n";
}

PipelineSummary RunPipeline(const PipelineConfig& config) {
  RunStage("config", [&] {
    ValidatePipelineConfig(config);
    return 0;
  });
  const fs::path& out = config.output_dir;
  PipelineSummary summary;
  auto record = [&summary](const fs::path& relative) { summary.artifacts.push_back(relative.generic_string()); };

  const AttributeDictionary dictionary = RunStage("build-dict", [&] {
    const AttributeTaxonomy taxonomy = LoadTaxonomy(config.taxonomy);
    AttributeDictionary dict =
        BuildDictionary(ReadEmbeddings(config.text_embeddings), ReadEmbeddings(config.reference_embeddings), taxonomy);
    SaveDictionary(dict, out / kDictionaryKeysFile, out / kDictionarySidecarFile);
    return dict;
  });
  record(kDictionaryKeysFile);
  record(kDictionarySidecarFile);
  summary.taxonomy_fingerprint = dictionary.fingerprint();

  const DatasetManifest manifest = RunStage("annotate", [&] { return ReadManifest(config.manifest); });
  const AnnotatedDataset annotations = RunStage("annotate", [&] {
    if (manifest.empty()) ThrowValidation("manifest " + config.manifest.string() + " is empty");
    AnnotatedDataset data = AnnotateDataset(dictionary, ReadEmbeddings(config.image_embeddings), manifest,
                                            config.threads);
    if (data.empty()) ThrowValidation("no image embeddings to annotate");
    WriteAnnotations(data, out / kAnnotationsFile);
    return data;
  });
  record(kAnnotationsFile);
  summary.images = annotations.size();

  const std::vector<CasScore> scores = RunStage("cas", [&] {
    std::vector<CasScore> s = ComputeCas(annotations, config.scope);
    CasStatistics stats = ComputeCasStatistics(s);
    stats.taxonomy_fingerprint = annotations.taxonomy_fingerprint;
    WriteCasScores(s, out / kCasFile);
    WriteFileAtomic(out / kStatsFile, SerializeCasStatistics(stats));
    return s;
  });
  record(kCasFile);
  record(kStatsFile);
  summary.before = ComputeCasStatistics(scores);
  summary.before.taxonomy_fingerprint = annotations.taxonomy_fingerprint;

  const SamplingSchedule schedule = RunStage("weights", [&] {
    SamplingSchedule s = ComputeSchedule(scores, config.power, config.seed);
    WriteSchedule(s, out / kScheduleFile);
    return s;
  });
  record(kScheduleFile);

  const SampleDraws draws = RunStage("sample", [&] {
    SampleDraws d = DrawSamples(schedule, config.samples == 0 ? annotations.size() : config.samples);
    WriteFileAtomic(out / kSamplesFile, SerializeSamples(d));
    return d;
  });
  record(kSamplesFile);
  summary.samples = draws.indices.size();

  RunStage("augment", [&] {
    const AugmentOptions options{config.method, config.alpha, config.seed, config.threads};
    AugmentBatch(draws.image_ids, manifest, config.manifest.parent_path(), options, out / kAugmentDir);
    return 0;
  });
  for (size_t k = 0; k < draws.indices.size(); ++k) record(fs::path(kAugmentDir) / MixFileName(k));
  record(fs::path(kAugmentDir) / kPlanFile);

  RunStage("report", [&] {
    std::map<std::string, size_t> row_of;
    for (size_t i = 0; i < annotations.size(); ++i) row_of[annotations.images[i].image_id] = i;
    std::vector<size_t> rows;
    rows.reserve(draws.image_ids.size());
    for (const auto& id : draws.image_ids) rows.push_back(row_of.at(id));
    summary.after = ResampledCasStatistics(annotations, rows, config.scope);

    const Scope bin_scope = config.per_class_bins ? Scope::kPerClass : Scope::kGlobal;
    for (const ReportTable& table :
         {DistributionTable(AttributeDistribution(annotations, config.scope)),
          BinningTable(BinCasByScope(scores, bin_scope)), PartitionTable(PartitionByCas(scores)),
          ComparisonTable(CompareCas(summary.before, summary.after))}) {
      for (const auto& name : WriteReport(table, out)) record(name);
    }
    return 0;
  });

  record(kSummaryFile);
  WriteFileAtomic(out / kSummaryFile, SerializePipelineSummary(summary));
  return summary;
}

}  // namespace cas
