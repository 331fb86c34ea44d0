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

#include "cas/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include <json.hpp>

#include "cas/error.hpp"
#include "cas/file_util.hpp"

namespace cas {

namespace {

template <typename T>
void PutLe(std::string& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

// Bounds-checked little-endian cursor over the encoded container.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T Get(const char* what) {
    Need(sizeof(T), what);
    uint64_t value = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(value);
  }

  std::string_view Take(size_t n, const char* what) {
    Need(n, what);
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(size_t n, const char* what) {
    if (remaining() < n) ThrowFormat(std::string("CASE: truncated ") + what);
  }

  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(uint32_t dim) : dim_(dim) {
  if (dim_ == 0) ThrowValidation("embedding dimension must be positive");
}

EmbeddingMatrix::EmbeddingMatrix(uint32_t dim, std::vector<float> values, std::vector<std::string> ids)
    : dim_(dim), values_(std::move(values)), ids_(std::move(ids)) {
  if (dim_ == 0) ThrowValidation("embedding dimension must be positive");
  if (values_.size() != ids_.size() * static_cast<size_t>(dim_)) {
    ThrowValidation("embedding payload holds " + std::to_string(values_.size()) + " values, expected " +
                    std::to_string(ids_.size()) + " x " + std::to_string(dim_));
  }
  for (size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      ThrowValidation("embedding row '" + ids_[i / dim_] + "' has a non-finite component");
    }
  }
  IndexIds();
}

void EmbeddingMatrix::IndexIds() {
  index_.clear();
  index_.reserve(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i].empty()) ThrowValidation("embedding row " + std::to_string(i) + " has an empty id");
    if (ids_[i].size() > 0xffff) ThrowValidation("embedding id longer than 65535 bytes");
    if (!index_.emplace(ids_[i], i).second) ThrowValidation("duplicate embedding id '" + ids_[i] + "'");
  }
}

std::optional<size_t> EmbeddingMatrix::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingMatrix::Append(std::string id, std::span<const float> values) {
  if (values.size() != dim_) {
    ThrowValidation("row '" + id + "' has " + std::to_string(values.size()) + " components, expected " +
                    std::to_string(dim_));
  }
  for (float v : values) {
    if (!std::isfinite(v)) ThrowValidation("embedding row '" + id + "' has a non-finite component");
  }
  if (id.empty()) ThrowValidation("embedding id must be non-empty");
  if (id.size() > 0xffff) ThrowValidation("embedding id longer than 65535 bytes");
  if (!index_.emplace(id, ids_.size()).second) ThrowValidation("duplicate embedding id '" + id + "'");
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), values.begin(), values.end());
}

bool EmbeddingMatrix::BitwiseEqual(const EmbeddingMatrix& other) const {
  if (dim_ != other.dim_ || ids_ != other.ids_ || values_.size() != other.values_.size()) return false;
  return std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(float)) == 0;
}

std::string EncodeEmbeddings(const EmbeddingMatrix& matrix) {
  std::string out;
  size_t id_bytes = 0;
  for (const auto& id : matrix.ids()) id_bytes += 2 + id.size();
  out.reserve(kCaseHeaderSize + matrix.values().size() * 4 + id_bytes);

  out.append(kCaseMagic, 4);
  PutLe<uint32_t>(out, kCaseVersion);
  PutLe<uint64_t>(out, matrix.rows());
  PutLe<uint32_t>(out, matrix.dim());
  PutLe<uint8_t>(out, kCaseDtypeFloat32);
  out.append(3, '\0');
  for (float v : matrix.values()) PutLe<uint32_t>(out, std::bit_cast<uint32_t>(v));
  for (const auto& id : matrix.ids()) {
    PutLe<uint16_t>(out, static_cast<uint16_t>(id.size()));
    out.append(id);
  }
  return out;
}

EmbeddingMatrix DecodeEmbeddings(std::string_view bytes) {
  Reader in(bytes);
  if (in.Take(4, "header") != std::string_view(kCaseMagic, 4)) ThrowFormat("CASE: bad magic");
  const auto version = in.Get<uint32_t>("header");
  if (version != kCaseVersion) ThrowFormat("CASE: unsupported version " + std::to_string(version));
  const auto rows = in.Get<uint64_t>("header");
  const auto dim = in.Get<uint32_t>("header");
  const auto dtype = in.Get<uint8_t>("header");
  if (dtype != kCaseDtypeFloat32) ThrowFormat("CASE: unsupported dtype " + std::to_string(dtype));
  if (in.Take(3, "header") != std::string_view("\0\0\0", 3)) ThrowFormat("CASE: reserved bytes not zero");
  if (dim == 0) ThrowFormat("CASE: zero dimension");

  // Guard the multiplication before trusting the header.
  if (rows > in.remaining() / 4 / dim) ThrowFormat("CASE: truncated payload");
  std::vector<float> values(static_cast<size_t>(rows) * dim);
  for (float& v : values) v = std::bit_cast<float>(in.Get<uint32_t>("payload"));

  std::vector<std::string> ids;
  ids.reserve(rows);
  for (uint64_t r = 0; r < rows; ++r) {
    if (in.remaining() == 0) {
      ThrowFormat("CASE: id count mismatch, header declares " + std::to_string(rows) + " rows but only " +
                  std::to_string(r) + " ids are stored");
    }
    const auto length = in.Get<uint16_t>("id section");
    ids.emplace_back(in.Take(length, "id section"));
  }
  if (in.remaining() != 0) ThrowFormat("CASE: id count mismatch, trailing bytes after " + std::to_string(rows) + " ids");

  try {
    return EmbeddingMatrix(dim, std::move(values), std::move(ids));
  } catch (const Error& e) {
    ThrowFormat(std::string("CASE: ") + e.what());
  }
}

EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path) {
  try {
    return DecodeEmbeddings(ReadFile(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void WriteEmbeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeEmbeddings(matrix));
}

double Norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * x;
  return std::sqrt(sum);
}

double Dot(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

EmbeddingMatrix L2Normalize(const EmbeddingMatrix& matrix) {
  std::vector<float> values(matrix.values().size());
  for (size_t r = 0; r < matrix.rows(); ++r) {
    auto row = matrix.row(r);
    const double norm = Norm(row);
    if (norm == 0.0) ThrowValidation("embedding row '" + matrix.id(r) + "' has zero norm");
    for (size_t c = 0; c < row.size(); ++c) {
      values[r * matrix.dim() + c] = static_cast<float>(row[c] / norm);
    }
  }
  return EmbeddingMatrix(matrix.dim(), std::move(values), matrix.ids());
}

DatasetManifest::DatasetManifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].image_id.empty()) ThrowValidation("manifest entry " + std::to_string(i) + " has an empty image_id");
    if (!index_.emplace(entries_[i].image_id, i).second) {
      ThrowValidation("duplicate image_id '" + entries_[i].image_id + "' in manifest");
    }
  }
}

const ManifestEntry* DatasetManifest::Find(std::string_view image_id) const {
  auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<std::string> DatasetManifest::ClassLabels() const {
  std::set<std::string> labels;
  for (const auto& e : entries_) labels.insert(e.class_label);
  return {labels.begin(), labels.end()};
}

DatasetManifest ParseManifest(std::string_view jsonl) {
  using json = nlohmann::json;
  std::vector<ManifestEntry> entries;
  size_t line_no = 0;
  for (const std::string& line : SplitLines(jsonl)) {
    ++line_no;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      ThrowFormat("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    auto field = [&](const char* key) -> std::optional<std::string> {
      auto it = doc.find(key);
      if (it == doc.end() || it->is_null()) return std::nullopt;
      if (!it->is_string()) ThrowFormat("manifest line " + std::to_string(line_no) + ": '" + key + "' must be a string");
      return it->get<std::string>();
    };
    if (!doc.is_object()) ThrowFormat("manifest line " + std::to_string(line_no) + ": expected an object");
    auto image_id = field("image_id");
    auto class_label = field("class_label");
    if (!image_id || !class_label) {
      ThrowFormat("manifest line " + std::to_string(line_no) + ": image_id and class_label are required");
    }
    entries.push_back({*image_id, *class_label, field("source_path")});
  }
  return DatasetManifest(std::move(entries));
}

std::string SerializeManifest(const DatasetManifest& manifest) {
  using json = nlohmann::ordered_json;
  std::string out;
  for (const auto& e : manifest.entries()) {
    json doc = {{"image_id", e.image_id}, {"class_label", e.class_label}};
    if (e.source_path) doc["source_path"] = *e.source_path;
    out += doc.dump();
    out += '\n';
  }
  return out;
}

DatasetManifest ReadManifest(const std::filesystem::path& path) {
  return ParseManifest(ReadFile(path));
}

void WriteManifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeManifest(manifest));
}

}  // namespace cas
