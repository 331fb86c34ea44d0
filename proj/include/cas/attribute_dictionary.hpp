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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cas/embedding_store.hpp"
#include "cas/taxonomy.hpp"

namespace cas {

struct AttributeValue {
  std::string primary;
  std::string secondary;

  bool operator==(const AttributeValue&) const = default;
};

// Visual attribute dictionary: one unit-norm key per secondary attribute,
// row-aligned with its (primary, secondary) value. Keys of one primary are
// contiguous and follow taxonomy order.
class AttributeDictionary {
 public:
  // Validates alignment with the taxonomy and key norms.
  AttributeDictionary(AttributeTaxonomy taxonomy, EmbeddingMatrix keys,
                      std::vector<std::string> matched_reference_ids = {});

  const AttributeTaxonomy& taxonomy() const { return taxonomy_; }
  const EmbeddingMatrix& keys() const { return keys_; }
  const std::vector<AttributeValue>& values() const { return values_; }
  // Which reference row each key was taken from (empty when unknown).
  const std::vector<std::string>& matched_reference_ids() const { return matched_reference_ids_; }
  std::string fingerprint() const { return taxonomy_.Fingerprint(); }
  uint32_t dim() const { return keys_.dim(); }

  // Half-open key row range [first, second) for the primary at index p.
  std::pair<size_t, size_t> PrimaryRange(size_t p) const { return {offsets_[p], offsets_[p + 1]}; }

 private:
  AttributeTaxonomy taxonomy_;
  EmbeddingMatrix keys_;
  std::vector<AttributeValue> values_;
  std::vector<std::string> matched_reference_ids_;
  std::vector<size_t> offsets_;
};

struct AssignedAttribute {
  std::string primary;
  std::string secondary;
  double similarity = 0.0;  // cosine, in [-1, 1]

  bool operator==(const AssignedAttribute&) const = default;
};

struct AttributeAssignment {
  std::string image_id;
  std::vector<AssignedAttribute> assigned;  // one per primary, taxonomy order
};

struct AnnotatedImage {
  std::string image_id;
  std::string class_label;
  std::vector<AssignedAttribute> attributes;  // aligned with AnnotatedDataset::primaries
};

struct AnnotatedDataset {
  std::vector<std::string> primaries;
  std::string taxonomy_fingerprint;  // empty when unknown
  std::vector<AnnotatedImage> images;

  bool empty() const { return images.empty(); }
  size_t size() const { return images.size(); }
};

// For every secondary s (text row k, in RenderPrompts order), the key is the
// reference row with the largest cosine to s's text embedding; ties go to
// the lowest reference row. Reference rows may back several keys.
//
// Text row ids must be the rendered prompt ids ("primary/secondary") in
// order; anything else is kValidation.
AttributeDictionary BuildDictionary(const EmbeddingMatrix& text_embeddings,
                                    const EmbeddingMatrix& reference_images,
                                    const AttributeTaxonomy& taxonomy);

// Per-primary cosine argmax; ties resolve to the earlier secondary.
AttributeAssignment AnnotateImage(const AttributeDictionary& dictionary, std::span<const float> image_embedding,
                                  std::string image_id = {});

// One assignment per image row, in row order. threads == 0 picks the
// hardware concurrency; results do not depend on the thread count.
AnnotatedDataset AnnotateDataset(const AttributeDictionary& dictionary, const EmbeddingMatrix& images,
                                 const DatasetManifest& manifest, unsigned threads = 1);

// Dictionary persistence: keys as a CASE file, plus a JSON sidecar
//   {"taxonomy_fingerprint": str, "prompt_template": str,
//    "values": [[primary, secondary], ...], "matched_reference_ids": [str]}
// The taxonomy is rebuilt from the contiguous values and must reproduce the
// stored fingerprint.
void SaveDictionary(const AttributeDictionary& dictionary, const std::filesystem::path& keys_path,
                    const std::filesystem::path& sidecar_path);
AttributeDictionary LoadDictionary(const std::filesystem::path& keys_path, const std::filesystem::path& sidecar_path);

// Annotations as JSON lines:
//   {"image_id", "class_label", "attributes": {primary: secondary},
//    "similarities": {primary: float}, "taxonomy_fingerprint"}
std::string SerializeAnnotations(const AnnotatedDataset& dataset);
AnnotatedDataset ParseAnnotations(std::string_view jsonl);
AnnotatedDataset ReadAnnotations(const std::filesystem::path& path);
void WriteAnnotations(const AnnotatedDataset& dataset, const std::filesystem::path& path);

}  // namespace cas
