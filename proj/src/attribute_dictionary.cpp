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

#include "cas/attribute_dictionary.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cas/error.hpp"
#include "cas/file_util.hpp"
#include "parallel.hpp"

namespace cas {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kUnitNormTolerance = 1e-6;

std::string ValueId(const std::string& primary, const std::string& secondary) {
  return primary + "/" + secondary;
}

}  // namespace

AttributeDictionary::AttributeDictionary(AttributeTaxonomy taxonomy, EmbeddingMatrix keys,
                                         std::vector<std::string> matched_reference_ids)
    : taxonomy_(std::move(taxonomy)),
      keys_(std::move(keys)),
      matched_reference_ids_(std::move(matched_reference_ids)) {
  if (keys_.rows() != taxonomy_.secondary_count()) {
    ThrowValidation("dictionary has " + std::to_string(keys_.rows()) + " keys but the taxonomy has " +
                    std::to_string(taxonomy_.secondary_count()) + " secondary attributes");
  }
  if (!matched_reference_ids_.empty() && matched_reference_ids_.size() != keys_.rows()) {
    ThrowValidation("matched reference ids are not row-aligned with the dictionary keys");
  }
  offsets_.push_back(0);
  for (const auto& primary : taxonomy_.primaries()) {
    for (const auto& secondary : primary.secondaries) {
      const size_t row = values_.size();
      if (keys_.id(row) != ValueId(primary.name, secondary)) {
        ThrowValidation("dictionary key " + std::to_string(row) + " is '" + keys_.id(row) + "', expected '" +
                        ValueId(primary.name, secondary) + "'");
      }
      const double norm = Norm(keys_.row(row));
      if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        ThrowValidation("dictionary key '" + keys_.id(row) + "' is not unit norm (" + FormatDouble(norm) + ")");
      }
      values_.push_back({primary.name, secondary});
    }
    offsets_.push_back(values_.size());
  }
}

AttributeDictionary BuildDictionary(const EmbeddingMatrix& text_embeddings, const EmbeddingMatrix& reference_images,
                                    const AttributeTaxonomy& taxonomy) {
  const auto prompts = RenderPrompts(taxonomy);
  if (text_embeddings.rows() != prompts.size()) {
    ThrowValidation("text embeddings have " + std::to_string(text_embeddings.rows()) +
                    " rows but the taxonomy renders " + std::to_string(prompts.size()) + " prompts");
  }
  for (size_t k = 0; k < prompts.size(); ++k) {
    if (text_embeddings.id(k) != prompts[k].id()) {
      ThrowValidation("text embedding row " + std::to_string(k) + " is '" + text_embeddings.id(k) + "', expected '" +
                      prompts[k].id() + "'");
    }
  }
  if (reference_images.empty()) ThrowValidation("reference image set is empty");
  if (reference_images.dim() != text_embeddings.dim()) {
    ThrowValidation("reference dimension " + std::to_string(reference_images.dim()) +
                    " differs from text dimension " + std::to_string(text_embeddings.dim()));
  }

  const EmbeddingMatrix text = L2Normalize(text_embeddings);
  const EmbeddingMatrix refs = L2Normalize(reference_images);

  std::vector<float> key_values;
  key_values.reserve(prompts.size() * refs.dim());
  std::vector<std::string> key_ids;
  std::vector<std::string> matched;
  for (size_t k = 0; k < prompts.size(); ++k) {
    size_t best = 0;
    double best_score = Dot(text.row(k), refs.row(0));
    for (size_t r = 1; r < refs.rows(); ++r) {
      const double score = Dot(text.row(k), refs.row(r));
      if (score > best_score) {
        best = r;
        best_score = score;
      }
    }
    auto row = refs.row(best);
    key_values.insert(key_values.end(), row.begin(), row.end());
    key_ids.push_back(prompts[k].id());
    matched.push_back(refs.id(best));
  }
  return AttributeDictionary(taxonomy, EmbeddingMatrix(refs.dim(), std::move(key_values), std::move(key_ids)),
                             std::move(matched));
}

AttributeAssignment AnnotateImage(const AttributeDictionary& dictionary, std::span<const float> image_embedding,
                                  std::string image_id) {
  if (image_embedding.size() != dictionary.dim()) {
    ThrowValidation("image embedding '" + image_id + "' has dimension " + std::to_string(image_embedding.size()) +
                    ", dictionary expects " + std::to_string(dictionary.dim()));
  }
  const double norm = Norm(image_embedding);
  if (norm == 0.0) ThrowValidation("image embedding '" + image_id + "' has zero norm");

  // Positive scaling of the query never changes the argmax, so compare raw
  // dot products and divide by the norm only for the reported similarity.
  AttributeAssignment out{std::move(image_id), {}};
  const auto& keys = dictionary.keys();
  const auto& values = dictionary.values();
  for (size_t p = 0; p < dictionary.taxonomy().primary_count(); ++p) {
    auto [first, last] = dictionary.PrimaryRange(p);
    size_t best = first;
    double best_score = Dot(image_embedding, keys.row(first));
    for (size_t k = first + 1; k < last; ++k) {
      const double score = Dot(image_embedding, keys.row(k));
      if (score > best_score) {
        best = k;
        best_score = score;
      }
    }
    const double cosine = std::clamp(best_score / norm, -1.0, 1.0);
    out.assigned.push_back({values[best].primary, values[best].secondary, cosine});
  }
  return out;
}

AnnotatedDataset AnnotateDataset(const AttributeDictionary& dictionary, const EmbeddingMatrix& images,
                                 const DatasetManifest& manifest, unsigned threads) {
  AnnotatedDataset out;
  for (const auto& primary : dictionary.taxonomy().primaries()) out.primaries.push_back(primary.name);
  out.taxonomy_fingerprint = dictionary.fingerprint();
  out.images.resize(images.rows());

  for (size_t i = 0; i < images.rows(); ++i) {
    const ManifestEntry* entry = manifest.Find(images.id(i));
    if (entry == nullptr) ThrowValidation("image '" + images.id(i) + "' is not in the dataset manifest");
    out.images[i].image_id = entry->image_id;
    out.images[i].class_label = entry->class_label;
  }
  if (images.rows() > 0 && images.dim() != dictionary.dim()) {
    ThrowValidation("image embeddings have dimension " + std::to_string(images.dim()) + ", dictionary expects " +
                    std::to_string(dictionary.dim()));
  }

  detail::ParallelFor(images.rows(), threads, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      out.images[i].attributes = AnnotateImage(dictionary, images.row(i), images.id(i)).assigned;
    }
  });
  return out;
}

void SaveDictionary(const AttributeDictionary& dictionary, const std::filesystem::path& keys_path,
                    const std::filesystem::path& sidecar_path) {
  ordered_json doc;
  doc["taxonomy_fingerprint"] = dictionary.fingerprint();
  doc["prompt_template"] = dictionary.taxonomy().prompt_template();
  ordered_json values = ordered_json::array();
  for (const auto& v : dictionary.values()) values.push_back({v.primary, v.secondary});
  doc["values"] = std::move(values);
  doc["matched_reference_ids"] = dictionary.matched_reference_ids();
  const std::string sidecar = doc.dump(2) + "\n";
  const std::string keys = EncodeEmbeddings(dictionary.keys());
  WriteFileAtomic(keys_path, keys);
  WriteFileAtomic(sidecar_path, sidecar);
}

AttributeDictionary LoadDictionary(const std::filesystem::path& keys_path, const std::filesystem::path& sidecar_path) {
  EmbeddingMatrix keys = ReadEmbeddings(keys_path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(ReadFile(sidecar_path));
  } catch (const ordered_json::parse_error& e) {
    ThrowFormat(sidecar_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("values") || !doc["values"].is_array() ||
      !doc.contains("taxonomy_fingerprint") || !doc["taxonomy_fingerprint"].is_string()) {
    ThrowFormat(sidecar_path.string() + ": expected taxonomy_fingerprint and values");
  }

  std::vector<PrimaryAttribute> primaries;
  for (const auto& pair : doc["values"]) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
      ThrowFormat(sidecar_path.string() + ": each value must be [primary, secondary]");
    }
    const auto primary = pair[0].get<std::string>();
    if (primaries.empty() || primaries.back().name != primary) {
      for (const auto& seen : primaries) {
        if (seen.name == primary) ThrowFormat(sidecar_path.string() + ": values of '" + primary + "' are not contiguous");
      }
      primaries.push_back({primary, {}});
    }
    primaries.back().secondaries.push_back(pair[1].get<std::string>());
  }
  std::string prompt_template(kDefaultPromptTemplate);
  if (doc.contains("prompt_template") && doc["prompt_template"].is_string()) {
    prompt_template = doc["prompt_template"].get<std::string>();
  }
  AttributeTaxonomy taxonomy(std::move(primaries), std::move(prompt_template));
  const auto stored = doc["taxonomy_fingerprint"].get<std::string>();
  if (taxonomy.Fingerprint() != stored) {
    ThrowValidation(sidecar_path.string() + ": taxonomy fingerprint " + stored + " does not match its values (" +
                    taxonomy.Fingerprint() + ")");
  }
  std::vector<std::string> matched;
  if (doc.contains("matched_reference_ids") && doc["matched_reference_ids"].is_array()) {
    matched = doc["matched_reference_ids"].get<std::vector<std::string>>();
  }
  return AttributeDictionary(std::move(taxonomy), std::move(keys), std::move(matched));
}

std::string SerializeAnnotations(const AnnotatedDataset& dataset) {
  std::string out;
  for (const auto& image : dataset.images) {
    ordered_json attributes = ordered_json::object();
    ordered_json similarities = ordered_json::object();
    for (const auto& a : image.attributes) {
      attributes[a.primary] = a.secondary;
      similarities[a.primary] = a.similarity;
    }
    ordered_json doc;
    doc["image_id"] = image.image_id;
    doc["class_label"] = image.class_label;
    doc["attributes"] = std::move(attributes);
    doc["similarities"] = std::move(similarities);
    if (!dataset.taxonomy_fingerprint.empty()) doc["taxonomy_fingerprint"] = dataset.taxonomy_fingerprint;
    out += doc.dump();
    out += '\n';
  }
  return out;
}

AnnotatedDataset ParseAnnotations(std::string_view jsonl) {
  AnnotatedDataset out;
  size_t line_no = 0;
  for (const std::string& line : SplitLines(jsonl)) {
    ++line_no;
    const std::string where = "annotations line " + std::to_string(line_no);
    ordered_json doc;
    try {
      doc = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      ThrowFormat(where + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("image_id") || !doc["image_id"].is_string() ||
        !doc.contains("class_label") || !doc["class_label"].is_string() || !doc.contains("attributes") ||
        !doc["attributes"].is_object()) {
      ThrowFormat(where + ": expected image_id, class_label and attributes");
    }
    const auto& attributes = doc["attributes"];
    if (line_no == 1) {
      for (auto it = attributes.begin(); it != attributes.end(); ++it) out.primaries.push_back(it.key());
      if (doc.contains("taxonomy_fingerprint") && doc["taxonomy_fingerprint"].is_string()) {
        out.taxonomy_fingerprint = doc["taxonomy_fingerprint"].get<std::string>();
      }
    } else {
      std::string fingerprint;
      if (doc.contains("taxonomy_fingerprint") && doc["taxonomy_fingerprint"].is_string()) {
        fingerprint = doc["taxonomy_fingerprint"].get<std::string>();
      }
      if (fingerprint != out.taxonomy_fingerprint) ThrowValidation(where + ": taxonomy fingerprint differs from line 1");
    }
    if (attributes.size() != out.primaries.size()) {
      ThrowValidation(where + ": has " + std::to_string(attributes.size()) + " primary attributes, expected " +
                      std::to_string(out.primaries.size()));
    }
    const ordered_json* similarities = nullptr;
    if (doc.contains("similarities") && doc["similarities"].is_object()) similarities = &doc["similarities"];

    AnnotatedImage image{doc["image_id"].get<std::string>(), doc["class_label"].get<std::string>(), {}};
    for (const auto& primary : out.primaries) {
      auto it = attributes.find(primary);
      if (it == attributes.end() || !it->is_string()) {
        ThrowValidation(where + ": missing secondary for primary '" + primary + "'");
      }
      double similarity = 0.0;
      if (similarities != nullptr) {
        auto s = similarities->find(primary);
        if (s != similarities->end() && s->is_number()) similarity = s->get<double>();
      }
      image.attributes.push_back({primary, it->get<std::string>(), similarity});
    }
    out.images.push_back(std::move(image));
  }
  return out;
}

AnnotatedDataset ReadAnnotations(const std::filesystem::path& path) {
  return ParseAnnotations(ReadFile(path));
}

void WriteAnnotations(const AnnotatedDataset& dataset, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeAnnotations(dataset));
}

}  // namespace cas
