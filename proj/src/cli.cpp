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

#include "cas/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cas/attribute_dictionary.hpp"
#include "cas/cas_engine.hpp"
#include "cas/file_util.hpp"
#include "cas/pipeline.hpp"
#include "cas/report.hpp"
#include "cas/sampler.hpp"
#include "cas/taxonomy.hpp"
#include "parallel.hpp"

namespace cas {

namespace fs = std::filesystem;

namespace {

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown subcommand or flag, bad flag value)\n"
    "  3  I/O error (missing or unreadable input, unwritable output)\n"
    "  4  format error (malformed JSON, JSON lines or CASE file)\n"
    "  5  validation error (well-formed input that violates an invariant)\n"
    "Errors are printed on stderr as one JSON object.\n"
    "CAS_TOOLKIT_THREADS caps the number of worker threads.";

[[noreturn]] void ThrowUsage(const std::string& message) { throw Error(ErrorKind::kUsage, message); }

unsigned EffectiveThreads(unsigned requested) {
  const unsigned resolved = detail::ResolveThreads(requested);
  const unsigned cap = ThreadCapFromEnv();
  return cap > 0 ? std::min(resolved, cap) : resolved;
}

struct Log {
  std::ostream& out;
  void Wrote(const fs::path& path) const { out << "wrote " << path.generic_string() << "\n"; }
};

// ---- Subcommand options ------------------------------------------------------

struct BuildDictArgs {
  std::string taxonomy = DefaultTaxonomyPath().string();
  std::string text;
  std::string references;
  std::string out_dir = ".";
};

struct AnnotateArgs {
  std::string dictionary;
  std::string images;
  std::string manifest;
  unsigned threads = 0;
  std::string out_dir = ".";
};

struct CasArgs {
  std::string annotations;
  std::string scope = "per-class";
  std::string out_dir = ".";
};

struct WeightsArgs {
  std::string cas;
  double power = kDefaultPower;
  uint64_t seed = 0;
  std::string out_dir = ".";
};

struct SampleArgs {
  std::string schedule;
  std::optional<size_t> n;
  std::optional<uint64_t> seed;
  std::string out_dir = ".";
};

struct AugmentArgs {
  std::string samples;
  std::string manifest;
  std::string image_root;
  std::string method = "cutmix";
  double alpha = kDefaultAlpha;
  uint64_t seed = 0;
  unsigned threads = 0;
  std::string out_dir = ".";
};

struct ReportArgs {
  std::string kind;
  std::string annotations;
  std::string cas;
  std::string samples;
  std::string before;
  std::string after;
  std::string scope = "per-class";
  bool per_class = false;
  std::string out_dir = ".";
};

struct SweepArgs {
  std::string cas;
  std::string range = "0.5:1.5:0.1";
  uint64_t seed = 0;
  std::string out_dir = ".";
};

struct PipelineArgs {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<uint64_t> seed;
  std::optional<double> power;
  std::optional<double> alpha;
  std::optional<std::string> method;
  std::optional<std::string> scope;
  std::optional<size_t> samples;
  std::optional<unsigned> threads;
};

// ---- Handlers ------------------------------------------------------------------

void RunBuildDict(const BuildDictArgs& a, const Log& log) {
  for (const auto& p : {a.taxonomy, a.text, a.references}) RequireFile(p);
  const AttributeTaxonomy taxonomy = LoadTaxonomy(a.taxonomy);
  const AttributeDictionary dict = BuildDictionary(ReadEmbeddings(a.text), ReadEmbeddings(a.references), taxonomy);
  const fs::path out(a.out_dir);
  SaveDictionary(dict, out / kDictionaryKeysFile, out / kDictionarySidecarFile);
  log.Wrote(out / kDictionaryKeysFile);
  log.Wrote(out / kDictionarySidecarFile);
}

void RunAnnotate(const AnnotateArgs& a, const Log& log) {
  const fs::path sidecar = DictionarySidecarPath(a.dictionary);
  for (const auto& p : {fs::path(a.dictionary), sidecar, fs::path(a.images), fs::path(a.manifest)}) RequireFile(p);
  const AttributeDictionary dict = LoadDictionary(a.dictionary, sidecar);
  const DatasetManifest manifest = ReadManifest(a.manifest);
  if (manifest.empty()) ThrowValidation("manifest " + a.manifest + " is empty");
  const AnnotatedDataset data =
      AnnotateDataset(dict, ReadEmbeddings(a.images), manifest, EffectiveThreads(a.threads));
  const fs::path out = fs::path(a.out_dir) / kAnnotationsFile;
  WriteAnnotations(data, out);
  log.Wrote(out);
}

void RunCas(const CasArgs& a, const Log& log) {
  RequireFile(a.annotations);
  const Scope scope = ParseScope(a.scope);
  const AnnotatedDataset data = ReadAnnotations(a.annotations);
  const std::vector<CasScore> scores = ComputeCas(data, scope);
  CasStatistics stats = ComputeCasStatistics(scores);
  stats.taxonomy_fingerprint = data.taxonomy_fingerprint;
  const fs::path out(a.out_dir);
  WriteCasScores(scores, out / kCasFile);
  WriteFileAtomic(out / kStatsFile, SerializeCasStatistics(stats));
  log.Wrote(out / kCasFile);
  log.Wrote(out / kStatsFile);
}

void RunWeights(const WeightsArgs& a, const Log& log) {
  RequireFile(a.cas);
  const SamplingSchedule schedule = ComputeSchedule(ReadCasScores(a.cas), a.power, a.seed);
  const fs::path out = fs::path(a.out_dir) / kScheduleFile;
  WriteSchedule(schedule, out);
  log.Wrote(out);
}

void RunSample(const SampleArgs& a, const Log& log) {
  RequireFile(a.schedule);
  SamplingSchedule schedule = ReadSchedule(a.schedule);
  if (a.seed) schedule.seed = *a.seed;
  const SampleDraws draws = DrawSamples(schedule, a.n.value_or(schedule.size()));
  const fs::path out = fs::path(a.out_dir) / kSamplesFile;
  WriteFileAtomic(out, SerializeSamples(draws));
  log.Wrote(out);
}

void RunAugment(const AugmentArgs& a, const Log& log) {
  for (const auto& p : {a.samples, a.manifest}) RequireFile(p);
  const MixMethod method = ParseMixMethod(a.method);
  if (!(a.alpha > 0.0)) ThrowUsage("--alpha must be positive");
  const SampleDraws draws = ReadSamples(a.samples);
  const DatasetManifest manifest = ReadManifest(a.manifest);
  const fs::path root = a.image_root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.image_root);
  AugmentBatch(draws.image_ids, manifest, root, {method, a.alpha, a.seed, EffectiveThreads(a.threads)}, a.out_dir);
  log.Wrote(fs::path(a.out_dir) / kPlanFile);
}

void RunReport(const ReportArgs& a, const Log& log) {
  const Scope scope = ParseScope(a.scope);
  auto need = [](const std::string& value, const char* flag, const std::string& kind) {
    if (value.empty()) ThrowUsage(std::string("--kind ") + kind + " requires " + flag);
    RequireFile(value);
  };

  std::optional<ReportTable> table;
  if (a.kind == "distribution") {
    need(a.annotations, "--annotations", a.kind);
    table = DistributionTable(AttributeDistribution(ReadAnnotations(a.annotations), scope));
  } else if (a.kind == "bins") {
    need(a.cas, "--cas", a.kind);
    table = BinningTable(BinCasByScope(ReadCasScores(a.cas), a.per_class ? Scope::kPerClass : Scope::kGlobal));
  } else if (a.kind == "partition") {
    need(a.cas, "--cas", a.kind);
    table = PartitionTable(PartitionByCas(ReadCasScores(a.cas)));
  } else if (a.kind == "compare") {
    if (!a.before.empty() || !a.after.empty()) {
      need(a.before, "--before", a.kind);
      need(a.after, "--after", a.kind);
      table = ComparisonTable(
          CompareCas(ParseCasStatistics(ReadFile(a.before)), ParseCasStatistics(ReadFile(a.after))));
    } else {
      need(a.annotations, "--annotations (or --before/--after)", a.kind);
      need(a.samples, "--samples", a.kind);
      const AnnotatedDataset data = ReadAnnotations(a.annotations);
      const SampleDraws draws = ReadSamples(a.samples);
      std::map<std::string, size_t> row_of;
      for (size_t i = 0; i < data.size(); ++i) row_of[data.images[i].image_id] = i;
      std::vector<size_t> rows;
      for (const auto& id : draws.image_ids) {
        auto it = row_of.find(id);
        if (it == row_of.end()) ThrowValidation("sampled image '" + id + "' is not in the annotations");
        rows.push_back(it->second);
      }
      CasStatistics before = ComputeCasStatistics(ComputeCas(data, scope));
      before.taxonomy_fingerprint = data.taxonomy_fingerprint;
      table = ComparisonTable(CompareCas(before, ResampledCasStatistics(data, rows, scope)));
    }
  } else {
    ThrowUsage("--kind must be distribution, bins, partition or compare");
  }
  for (const auto& name : WriteReport(*table, a.out_dir)) log.Wrote(fs::path(a.out_dir) / name);
}

void RunSweep(const SweepArgs& a, const Log& log) {
  const std::vector<double> grid = ParseSweepRange(a.range);
  RequireFile(a.cas);
  const std::vector<CasScore> scores = ReadCasScores(a.cas);
  std::vector<std::pair<fs::path, SamplingSchedule>> schedules;
  for (double b : grid) {
    schedules.emplace_back(fs::path(a.out_dir) / ("schedule_b" + FormatDouble(b) + ".json"),
                           ComputeSchedule(scores, b, a.seed));
  }
  for (const auto& [path, schedule] : schedules) {
    WriteSchedule(schedule, path);
    log.Wrote(path);
  }
}

void RunPipelineCommand(const PipelineArgs& a, const Log& log) {
  RequireFile(a.config);
  PipelineConfig config = LoadPipelineConfig(a.config);
  if (a.out_dir) config.output_dir = *a.out_dir;
  if (a.seed) config.seed = *a.seed;
  if (a.power) config.power = *a.power;
  if (a.alpha) config.alpha = *a.alpha;
  if (a.method) config.method = ParseMixMethod(*a.method);
  if (a.scope) config.scope = ParseScope(*a.scope);
  if (a.samples) config.samples = *a.samples;
  config.threads = EffectiveThreads(a.threads.value_or(config.threads));
  const PipelineSummary summary = RunPipeline(config);
  log.Wrote(config.output_dir / kSummaryFile);
  log.out << "cas mean " << FormatDouble(summary.before.mean) << " -> " << FormatDouble(summary.after.mean)
          << ", std " << FormatDouble(summary.before.std) << " -> " << FormatDouble(summary.after.std) << "\n";
}

void ReportError(std::ostream& err, ErrorKind kind, const std::string& message, const std::string& stage = {}) {
  nlohmann::ordered_json doc;
  doc["error"] = std::string(ErrorKindName(kind));
  doc["exit_code"] = ExitCodeFor(kind);
  doc["message"] = message;
  if (!stage.empty()) doc["stage"] = stage;
  err << doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
      return kExitIo;
    case ErrorKind::kFormat:
      return kExitFormat;
    case ErrorKind::kValidation:
      return kExitValidation;
    case ErrorKind::kUsage:
      return kExitUsage;
  }
  return kExitInternal;
}

unsigned ThreadCapFromEnv() {
  const char* value = std::getenv("CAS_TOOLKIT_THREADS");
  if (value == nullptr) return 0;
  unsigned cap = 0;
  const char* end = value + std::char_traits<char>::length(value);
  auto [ptr, ec] = std::from_chars(value, end, cap);
  if (ec != std::errc() || ptr != end) return 0;
  return cap;
}

std::vector<double> ParseSweepRange(const std::string& range) {
  const size_t first = range.find(':');
  const size_t second = first == std::string::npos ? std::string::npos : range.find(':', first + 1);
  if (second == std::string::npos || range.find(':', second + 1) != std::string::npos) {
    ThrowUsage("sweep range must be lo:hi:step, got '" + range + "'");
  }
  auto parse = [&range](std::string_view text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
      ThrowUsage("sweep range must be lo:hi:step, got '" + range + "'");
    }
    return v;
  };
  const std::string_view view(range);
  const double lo = parse(view.substr(0, first));
  const double hi = parse(view.substr(first + 1, second - first - 1));
  const double step = parse(view.substr(second + 1));
  if (!(lo > 0.0) || !(step > 0.0) || hi < lo) ThrowUsage("sweep range needs 0 < lo <= hi and step > 0");
  const auto count = static_cast<size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid;
  for (size_t k = 0; k < count; ++k) grid.push_back(std::round((lo + static_cast<double>(k) * step) * 1e9) / 1e9);
  return grid;
}

int RunSubcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compositional attribute scarcity toolkit", "cas-toolkit"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);

  BuildDictArgs build_dict;
  auto* cmd = app.add_subcommand("build-dict", "Build the visual attribute dictionary");
  cmd->add_option("--taxonomy", build_dict.taxonomy, "Taxonomy JSON")->capture_default_str();
  cmd->add_option("--text", build_dict.text, "Prompt text embeddings (CASE)")->required();
  cmd->add_option("--references", build_dict.references, "Reference image embeddings (CASE)")->required();
  cmd->add_option("--out-dir", build_dict.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunBuildDict(build_dict, {out}); });

  AnnotateArgs annotate;
  cmd = app.add_subcommand("annotate", "Assign one secondary attribute per primary to every image");
  cmd->add_option("--dictionary", annotate.dictionary, "Dictionary keys (CASE); sidecar is the .json sibling")
      ->required();
  cmd->add_option("--images", annotate.images, "Image embeddings (CASE)")->required();
  cmd->add_option("--manifest", annotate.manifest, "Dataset manifest (JSON lines)")->required();
  cmd->add_option("--threads", annotate.threads, "Worker threads, 0 = all cores")->capture_default_str();
  cmd->add_option("--out-dir", annotate.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunAnnotate(annotate, {out}); });

  CasArgs cas_args;
  cmd = app.add_subcommand("cas", "Score compositional attribute scarcity");
  cmd->add_option("--annotations", cas_args.annotations, "Annotations (JSON lines)")->required();
  cmd->add_option("--scope", cas_args.scope, "per-class or global")->capture_default_str();
  cmd->add_option("--out-dir", cas_args.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunCas(cas_args, {out}); });

  WeightsArgs weights;
  cmd = app.add_subcommand("weights", "Turn CAS into a sampling schedule");
  cmd->add_option("--cas", weights.cas, "CAS scores (JSON lines)")->required();
  cmd->add_option("--b", weights.power, "Power applied to CAS")->capture_default_str();
  cmd->add_option("--seed", weights.seed, "Seed stored with the schedule")->capture_default_str();
  cmd->add_option("--out-dir", weights.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunWeights(weights, {out}); });

  SampleArgs sample;
  cmd = app.add_subcommand("sample", "Draw image ids from a schedule");
  cmd->add_option("--schedule", sample.schedule, "Schedule JSON")->required();
  cmd->add_option("--n", sample.n, "Number of draws (default: schedule size)");
  cmd->add_option("--seed", sample.seed, "Override the schedule's seed");
  cmd->add_option("--out-dir", sample.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunSample(sample, {out}); });

  AugmentArgs augment;
  cmd = app.add_subcommand("augment", "Mix drawn images pairwise");
  cmd->add_option("--samples", augment.samples, "Samples JSON")->required();
  cmd->add_option("--manifest", augment.manifest, "Dataset manifest with source_path entries")->required();
  cmd->add_option("--image-root", augment.image_root, "Base for source paths (default: manifest directory)");
  cmd->add_option("--method", augment.method, "cutmix, fmix or saliencymix")->capture_default_str();
  cmd->add_option("--alpha", augment.alpha, "Beta(alpha, alpha) parameter")->capture_default_str();
  cmd->add_option("--seed", augment.seed, "Batch seed")->capture_default_str();
  cmd->add_option("--threads", augment.threads, "Worker threads, 0 = all cores")->capture_default_str();
  cmd->add_option("--out-dir", augment.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunAugment(augment, {out}); });

  ReportArgs report;
  cmd = app.add_subcommand("report", "Write a report as CSV and JSON");
  cmd->add_option("--kind", report.kind, "distribution, bins, partition or compare")->required();
  cmd->add_option("--annotations", report.annotations, "Annotations (distribution, compare)");
  cmd->add_option("--cas", report.cas, "CAS scores (bins, partition)");
  cmd->add_option("--samples", report.samples, "Samples JSON (compare)");
  cmd->add_option("--before", report.before, "Statistics JSON (compare)");
  cmd->add_option("--after", report.after, "Statistics JSON (compare)");
  cmd->add_option("--scope", report.scope, "per-class or global")->capture_default_str();
  cmd->add_flag("--per-class", report.per_class, "Bin each class separately");
  cmd->add_option("--out-dir", report.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunReport(report, {out}); });

  SweepArgs sweep;
  cmd = app.add_subcommand("sweep", "Write one schedule per power value");
  cmd->add_option("--cas", sweep.cas, "CAS scores (JSON lines)")->required();
  cmd->add_option("--b", sweep.range, "Power grid lo:hi:step")->capture_default_str();
  cmd->add_option("--seed", sweep.seed, "Seed stored with each schedule")->capture_default_str();
  cmd->add_option("--out-dir", sweep.out_dir, "Output directory")->capture_default_str();
  cmd->final_callback([&] { RunSweep(sweep, {out}); });

  PipelineArgs pipeline;
  cmd = app.add_subcommand("pipeline", "Run every stage from a JSON config");
  cmd->add_option("--config", pipeline.config, "Pipeline config JSON")->required();
  cmd->add_option("--out-dir", pipeline.out_dir, "Override output_dir");
  cmd->add_option("--seed", pipeline.seed, "Override seed");
  cmd->add_option("--b", pipeline.power, "Override power");
  cmd->add_option("--alpha", pipeline.alpha, "Override alpha");
  cmd->add_option("--method", pipeline.method, "Override method");
  cmd->add_option("--scope", pipeline.scope, "Override scope");
  cmd->add_option("--samples", pipeline.samples, "Override sample count");
  cmd->add_option("--threads", pipeline.threads, "Override worker threads");
  cmd->final_callback([&] { RunPipelineCommand(pipeline, {out}); });

  std::vector<const char*> argv{"cas-toolkit"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    ReportError(err, ErrorKind::kUsage, e.what());
    return kExitUsage;
  } catch (const StageError& e) {
    ReportError(err, e.kind(), e.what(), e.stage());
    return ExitCodeFor(e.kind());
  } catch (const Error& e) {
    ReportError(err, e.kind(), e.what());
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    ReportError(err, ErrorKind::kIo, e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    nlohmann::ordered_json doc{{"error", "internal"}, {"exit_code", kExitInternal}, {"message", e.what()}};
    err << doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
    return kExitInternal;
  }
}

}  // namespace cas
