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

#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>

#include "cas/embedding_store.hpp"
#include "cas/error.hpp"
#include "cas/file_util.hpp"
#include "cas/random.hpp"
#include "support/temp_dir.hpp"

namespace cas {

namespace {

std::string Hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 15]);
  }
  return out;
}

EmbeddingMatrix RandomMatrix(size_t rows, uint32_t dim, Rng& rng) {
  std::vector<float> values;
  std::vector<std::string> ids;
  for (size_t r = 0; r < rows; ++r) {
    ids.push_back("row-" + std::to_string(r) + (r % 3 == 0 ? "/é" : ""));
    for (uint32_t c = 0; c < dim; ++c) {
      // Arbitrary finite bit patterns, including subnormals and -0.0.
      uint32_t bits = static_cast<uint32_t>(rng.NextU64());
      float v = std::bit_cast<float>(bits);
      if (!std::isfinite(v)) v = -0.0f;
      values.push_back(v);
    }
  }
  return EmbeddingMatrix(dim, std::move(values), std::move(ids));
}

ErrorKind DecodeKind(const std::string& bytes) {
  try {
    DecodeEmbeddings(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kUsage;
}

}  // namespace

TEST_CASE("1x2 matrix encodes to the documented bytes") {
  const EmbeddingMatrix m(2, {1.0f, 2.0f}, {"a"});
  const std::string bytes = EncodeEmbeddings(m);
  // Header (24) + two f32 (8) + u16 length + "a" (3); built independently.
  CHECK(bytes.size() == 35);
  CHECK(Hex(bytes) == "4341534501000000010000000000000002000000010000000000803f00000040010061");
}

TEST_CASE("3x4 round trip and deterministic bytes") {
  testing::TempDir dir;
  std::vector<float> values(12);
  for (size_t i = 0; i < values.size(); ++i) values[i] = 0.25f * static_cast<float>(i) - 1.0f;
  const EmbeddingMatrix m(4, values, {"x", "y", "z"});
  WriteEmbeddings(m, dir / "a.case");
  WriteEmbeddings(m, dir / "b.case");
  CHECK(ReadFile(dir / "a.case") == ReadFile(dir / "b.case"));
  const EmbeddingMatrix back = ReadEmbeddings(dir / "a.case");
  CHECK(back.rows() == 3);
  CHECK(back.dim() == 4);
  CHECK(back.ids() == m.ids());
  CHECK(back.BitwiseEqual(m));
}

TEST_CASE("randomized round trips are bit exact") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto m = RandomMatrix(rng.UniformBelow(20), static_cast<uint32_t>(1 + rng.UniformBelow(16)), rng);
    const auto back = DecodeEmbeddings(EncodeEmbeddings(m));
    CHECK(back.BitwiseEqual(m));
    CHECK(back.ids() == m.ids());
  }
}

TEST_CASE("zero rows keeps the dimension") {
  const EmbeddingMatrix empty(7);
  const auto back = DecodeEmbeddings(EncodeEmbeddings(empty));
  CHECK(back.rows() == 0);
  CHECK(back.dim() == 7);
}

TEST_CASE("malformed containers") {
  const std::string good = EncodeEmbeddings(EmbeddingMatrix(2, {1.0f, 2.0f, 3.0f, 4.0f}, {"a", "b"}));
  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  CHECK(DecodeKind(bad) == ErrorKind::kFormat);
  bad = good;
  bad[4] = 2;  // version
  CHECK(DecodeKind(bad) == ErrorKind::kFormat);
  bad = good;
  bad[20] = 2;  // dtype
  CHECK(DecodeKind(bad) == ErrorKind::kFormat);
  bad = good;
  bad[21] = 1;  // reserved
  CHECK(DecodeKind(bad) == ErrorKind::kFormat);
  CHECK(DecodeKind(good.substr(0, 30)) == ErrorKind::kFormat);               // payload cut
  CHECK(DecodeKind(good.substr(0, good.size() - 3)) == ErrorKind::kFormat);  // second id missing
  CHECK(DecodeKind(good + "z") == ErrorKind::kFormat);                       // trailing bytes
  CHECK(DecodeKind(good.substr(0, 10)) == ErrorKind::kFormat);
  bad = good;
  bad[8] = 3;  // rows = 3, ids for only 2
  CHECK(DecodeKind(bad) == ErrorKind::kFormat);
}

TEST_CASE("invalid matrices are rejected before any write") {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(EmbeddingMatrix(2, {1.0f, nan}, {"a"}), Error);
  CHECK_THROWS_AS(EmbeddingMatrix(2, {1.0f, 2.0f, 3.0f}, {"a"}), Error);
  CHECK_THROWS_AS(EmbeddingMatrix(1, {1.0f, 2.0f}, {"a", "a"}), Error);
  CHECK_THROWS_AS(EmbeddingMatrix(1, {1.0f}, {""}), Error);
  CHECK_THROWS_AS(EmbeddingMatrix(0, {}, {}), Error);
  EmbeddingMatrix m(2);
  CHECK_THROWS_AS(m.Append("a", std::vector<float>{std::numeric_limits<float>::infinity(), 0.0f}), Error);
  CHECK(m.rows() == 0);
}

TEST_CASE("L2 normalization") {
  const auto n = L2Normalize(EmbeddingMatrix(2, {3.0f, 4.0f, 0.6f, 0.8f}, {"a", "b"}));
  CHECK(n.row(0)[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(n.row(0)[1] == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(std::abs(n.row(1)[0] - 0.6f) <= 1e-7f);
  CHECK(std::abs(n.row(1)[1] - 0.8f) <= 1e-7f);

  try {
    L2Normalize(EmbeddingMatrix(2, {1.0f, 0.0f, 0.0f, 0.0f}, {"ok", "zero-row"}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    CHECK(std::string(e.what()).find("zero-row") != std::string::npos);
  }

  Rng rng(5);
  const auto m = L2Normalize(RandomMatrix(30, 9, rng));
  for (size_t r = 0; r < m.rows(); ++r) {
    if (Norm(m.row(r)) == 0.0) continue;
    CHECK(std::abs(Norm(m.row(r)) - 1.0) <= 1e-6);
  }
}

TEST_CASE("manifest round trip and validation") {
  testing::TempDir dir;
  const DatasetManifest m({{"a", "cat", std::string("img/a.png")}, {"b", "dog", std::nullopt}, {"c", "cat", {}}});
  WriteManifest(m, dir / "m.jsonl");
  const DatasetManifest back = ReadManifest(dir / "m.jsonl");
  CHECK(back.entries() == m.entries());
  CHECK(back.ClassLabels() == std::vector<std::string>{"cat", "dog"});
  REQUIRE(back.Find("b") != nullptr);
  CHECK(back.Find("b")->class_label == "dog");
  CHECK(back.Find("zzz") == nullptr);

  CHECK_THROWS_AS(DatasetManifest({{"a", "x", {}}, {"a", "y", {}}}), Error);
  CHECK_THROWS_AS(ParseManifest("{\"image_id\": \"a\"}\n"), Error);
  CHECK_THROWS_AS(ParseManifest("not json\n"), Error);
  CHECK(ParseManifest("").empty());
}

}  // namespace cas
