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

#include "cas/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "cas/augmentation.hpp"
#include "cas/embedding_store.hpp"
#include "cas/error.hpp"
#include "cas/file_util.hpp"
#include "cas/image_io.hpp"
#include "cas/random.hpp"
#include "cas/sampler.hpp"

namespace cas {

namespace {

struct PlantedRow {
  size_t class_index = 0;
  std::vector<size_t> secondaries;  // per primary
};

std::vector<size_t> Permutation(size_t n, Rng& rng) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  for (size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.UniformBelow(i)]);
  return perm;
}

size_t DrawCategorical(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.Uniform01();
  for (size_t k = 0; k + 1 < cdf.size(); ++k) {
    if (u < cdf[k]) return k;
  }
  return cdf.size() - 1;
}

std::vector<PlantedRow> PlantRows(size_t classes, size_t images_per_class, size_t primaries, size_t secondaries,
                                  double zipf_exponent, double rare_probability, Rng& rng) {
  if (classes == 0 || images_per_class == 0 || primaries == 0 || secondaries < 2) {
    ThrowValidation("planted dataset needs classes, images, primaries and at least 2 secondaries");
  }
  std::vector<double> cdf(secondaries - 1);
  double total = 0.0;
  for (size_t k = 0; k < cdf.size(); ++k) total += 1.0 / std::pow(static_cast<double>(k + 1), zipf_exponent);
  double running = 0.0;
  for (size_t k = 0; k < cdf.size(); ++k) {
    running += 1.0 / std::pow(static_cast<double>(k + 1), zipf_exponent);
    cdf[k] = running / total;
  }

  std::vector<PlantedRow> rows;
  rows.reserve(classes * images_per_class);
  for (size_t c = 0; c < classes; ++c) {
    std::vector<std::vector<size_t>> perms;
    for (size_t p = 0; p < primaries; ++p) perms.push_back(Permutation(secondaries, rng));
    for (size_t i = 0; i < images_per_class; ++i) {
      PlantedRow row{c, std::vector<size_t>(primaries)};
      const bool rare = rng.Uniform01() < rare_probability;
      for (size_t p = 0; p < primaries; ++p) {
        row.secondaries[p] = rare ? perms[p][secondaries - 1] : perms[p][DrawCategorical(cdf, rng)];
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string ImageId(size_t class_index, size_t image_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%zu-%04zu", class_index, image_index);
  return buf;
}

AnnotatedDataset ToDataset(const std::vector<PlantedRow>& rows, size_t images_per_class,
                           const AttributeTaxonomy& taxonomy) {
  AnnotatedDataset out;
  for (const auto& p : taxonomy.primaries()) out.primaries.push_back(p.name);
  out.taxonomy_fingerprint = taxonomy.Fingerprint();
  for (size_t r = 0; r < rows.size(); ++r) {
    AnnotatedImage image;
    image.image_id = ImageId(rows[r].class_index, r % images_per_class);
    image.class_label = "c" + std::to_string(rows[r].class_index);
    for (size_t p = 0; p < rows[r].secondaries.size(); ++p) {
      const auto& primary = taxonomy.primaries()[p];
      image.attributes.push_back({primary.name, primary.secondaries[rows[r].secondaries[p]], 1.0});
    }
    out.images.push_back(std::move(image));
  }
  return out;
}

std::vector<float> GaussianUnit(uint32_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.Normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

std::vector<float> Perturbed(std::span<const float> base, double noise, Rng& rng) {
  std::vector<float> out(base.size());
  for (size_t i = 0; i < base.size(); ++i) out[i] = static_cast<float>(base[i] + noise * rng.Normal());
  return out;
}

// Flat class tint with a bright square at a random spot.
ImageTensor FixtureImage(size_t size, size_t class_index, Rng& rng) {
  ImageTensor image(size, size, 3);
  const uint8_t tint[3] = {static_cast<uint8_t>(40 + 37 * class_index % 160),
                           static_cast<uint8_t>(90 + 53 * class_index % 120),
                           static_cast<uint8_t>(60 + 71 * class_index % 140)};
  for (size_t r = 0; r < size; ++r) {
    for (size_t c = 0; c < size; ++c) {
      for (size_t ch = 0; ch < 3; ++ch) {
        const auto jitter = static_cast<uint8_t>(rng.UniformBelow(16));
        image.at(r, c, ch) = static_cast<float>(tint[ch] + jitter) / 255.0f;
      }
    }
  }
  const size_t row = rng.UniformBelow(size - 3);
  const size_t col = rng.UniformBelow(size - 3);
  for (size_t r = row; r < row + 4; ++r) {
    for (size_t c = col; c < col + 4; ++c) {
      for (size_t ch = 0; ch < 3; ++ch) image.at(r, c, ch) = 1.0f;
    }
  }
  return image;
}

}  // namespace

AttributeTaxonomy SyntheticTaxonomy(size_t primaries, size_t secondaries) {
  std::vector<PrimaryAttribute> list;
  for (size_t p = 0; p < primaries; ++p) {
    PrimaryAttribute primary{"p" + std::to_string(p), {}};
    for (size_t s = 0; s < secondaries; ++s) primary.secondaries.push_back("s" + std::to_string(p) + "_" + std::to_string(s));
    list.push_back(std::move(primary));
  }
  return AttributeTaxonomy(std::move(list));
}

AnnotatedDataset PlantedDataset(const PlantedDatasetOptions& options) {
  Rng rng(options.seed);
  const auto rows = PlantRows(options.classes, options.images_per_class, options.primaries, options.secondaries,
                              options.zipf_exponent, options.rare_probability, rng);
  return ToDataset(rows, options.images_per_class, SyntheticTaxonomy(options.primaries, options.secondaries));
}

FixtureSummary WriteFixture(const FixtureOptions& options, const std::filesystem::path& directory) {
  // Subset of the default taxonomy so the fixture reads like real data.
  const AttributeTaxonomy full = LoadTaxonomy(DefaultTaxonomyPath());
  if (full.primary_count() < options.primaries) ThrowValidation("default taxonomy has too few primaries");
  std::vector<PrimaryAttribute> subset;
  for (size_t p = 0; p < options.primaries; ++p) {
    const auto& source = full.primaries()[p];
    if (source.secondaries.size() < options.secondaries) ThrowValidation("default taxonomy has too few secondaries");
    subset.push_back({source.name, {source.secondaries.begin(),
                                    source.secondaries.begin() + static_cast<std::ptrdiff_t>(options.secondaries)}});
  }
  const AttributeTaxonomy taxonomy(std::move(subset), full.prompt_template());

  Rng rng(options.seed);
  const auto rows = PlantRows(options.classes, options.images_per_class, options.primaries, options.secondaries, 1.5,
                              0.08, rng);
  FixtureSummary summary{taxonomy, ToDataset(rows, options.images_per_class, taxonomy)};

  EmbeddingMatrix text(options.dim);
  for (const auto& prompt : RenderPrompts(taxonomy)) text.Append(prompt.id(), GaussianUnit(options.dim, rng));

  EmbeddingMatrix references(options.dim);
  size_t ref_index = 0;
  auto ref_id = [&ref_index] {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ref-%05zu", ref_index++);
    return std::string(buf);
  };
  for (size_t k = 0; k < text.rows(); ++k) {
    for (size_t r = 0; r < options.references_per_secondary; ++r) {
      references.Append(ref_id(), Perturbed(text.row(k), 0.01, rng));
    }
  }
  for (size_t d = 0; d < options.distractors; ++d) references.Append(ref_id(), GaussianUnit(options.dim, rng));

  std::vector<std::vector<float>> class_dirs;
  for (size_t c = 0; c < options.classes; ++c) class_dirs.push_back(GaussianUnit(options.dim, rng));

  EmbeddingMatrix images(options.dim);
  std::vector<ManifestEntry> manifest;
  std::vector<size_t> offsets(options.primaries + 1, 0);
  for (size_t p = 0; p < options.primaries; ++p) offsets[p + 1] = offsets[p] + options.secondaries;
  for (size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> acc(options.dim, 0.0);
    for (size_t p = 0; p < options.primaries; ++p) {
      const auto row = text.row(offsets[p] + rows[r].secondaries[p]);
      for (uint32_t i = 0; i < options.dim; ++i) acc[i] += row[i];
    }
    std::vector<float> values(options.dim);
    for (uint32_t i = 0; i < options.dim; ++i) {
      values[i] = static_cast<float>(acc[i] + 0.5 * class_dirs[rows[r].class_index][i] + 0.02 * rng.Normal());
    }
    const AnnotatedImage& planted = summary.planted.images[r];
    images.Append(planted.image_id, values);
    manifest.push_back({planted.image_id, planted.class_label, "images/" + planted.image_id + ".png"});
    WritePng(FixtureImage(options.image_size, rows[r].class_index, rng),
             directory / "images" / (planted.image_id + ".png"));
  }

  SaveTaxonomy(taxonomy, directory / "taxonomy.json");
  WriteEmbeddings(text, directory / "text.case");
  WriteEmbeddings(references, directory / "references.case");
  WriteEmbeddings(images, directory / "images.case");
  WriteManifest(DatasetManifest(std::move(manifest)), directory / "manifest.jsonl");

  nlohmann::ordered_json config;
  config["taxonomy"] = "taxonomy.json";
  config["text_embeddings"] = "text.case";
  config["reference_embeddings"] = "references.case";
  config["image_embeddings"] = "images.case";
  config["manifest"] = "manifest.jsonl";
  config["scope"] = "per-class";
  config["power"] = kDefaultPower;
  config["alpha"] = kDefaultAlpha;
  config["method"] = "cutmix";
  config["seed"] = 7;
  config["samples"] = rows.size();
  config["output_dir"] = "out";
  WriteFileAtomic(directory / "pipeline.json", config.dump(2) + "\n");
  return summary;
}

}  // namespace cas
