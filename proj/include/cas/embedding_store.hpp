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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cas {

// Dense float32 embeddings, row-major, with one unique text id per row.
// Invariants (enforced by the constructor): dim > 0, every component finite,
// ids unique and non-empty.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(uint32_t dim = 1);
  EmbeddingMatrix(uint32_t dim, std::vector<float> values, std::vector<std::string> ids);

  uint32_t dim() const { return dim_; }
  size_t rows() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  std::span<const float> row(size_t i) const { return {values_.data() + i * dim_, dim_}; }
  const std::string& id(size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& values() const { return values_; }

  // Row index for an id, if present.
  std::optional<size_t> Find(std::string_view id) const;

  // Appends one row; validates like the constructor.
  void Append(std::string id, std::span<const float> values);

  // Bitwise equality of every component (so -0.0 != 0.0 and subnormals count).
  bool BitwiseEqual(const EmbeddingMatrix& other) const;

 private:
  void IndexIds();

  uint32_t dim_;
  std::vector<float> values_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, size_t> index_;
};

// CASE container, all integers little-endian:
//   "CASE" | version u32 = 1 | rows u64 | dim u32 | dtype u8 = 1 (f32) |
//   3 zero bytes | rows*dim f32 | per row: u16 byte length + UTF-8 id.
inline constexpr char kCaseMagic[4] = {'C', 'A', 'S', 'E'};
inline constexpr uint32_t kCaseVersion = 1;
inline constexpr uint8_t kCaseDtypeFloat32 = 1;
inline constexpr size_t kCaseHeaderSize = 24;

std::string EncodeEmbeddings(const EmbeddingMatrix& matrix);
// Throws kFormat for bad magic, version or dtype, truncation, id-count
// mismatch, trailing bytes, non-finite values and duplicate ids.
EmbeddingMatrix DecodeEmbeddings(std::string_view bytes);

EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path);
void WriteEmbeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

// Every row scaled to unit Euclidean norm. Throws kValidation naming the
// row id when a row has zero norm.
EmbeddingMatrix L2Normalize(const EmbeddingMatrix& matrix);

// Euclidean norm accumulated in double.
double Norm(std::span<const float> v);
double Dot(std::span<const float> a, std::span<const float> b);

struct ManifestEntry {
  std::string image_id;
  std::string class_label;
  std::optional<std::string> source_path;

  bool operator==(const ManifestEntry&) const = default;
};

class DatasetManifest {
 public:
  DatasetManifest() = default;
  // Throws kValidation on duplicate or empty image ids.
  explicit DatasetManifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ManifestEntry* Find(std::string_view image_id) const;

  // Sorted distinct class labels.
  std::vector<std::string> ClassLabels() const;

 private:
  std::vector<ManifestEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// JSON lines: {"image_id": str, "class_label": str, "source_path": str?}
DatasetManifest ParseManifest(std::string_view jsonl);
std::string SerializeManifest(const DatasetManifest& manifest);
DatasetManifest ReadManifest(const std::filesystem::path& path);
void WriteManifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace cas
