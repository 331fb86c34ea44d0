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

#include <cmath>

#include "cas/attribute_dictionary.hpp"
#include "cas/error.hpp"
#include "cas/file_util.hpp"
#include "cas/random.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace cas {

namespace {

EmbeddingMatrix TextFor(const AttributeTaxonomy& t, std::vector<float> values) {
  std::vector<std::string> ids;
  for (const auto& p : RenderPrompts(t)) ids.push_back(p.id());
  const auto dim = static_cast<uint32_t>(values.size() / ids.size());
  return EmbeddingMatrix(dim, std::move(values), std::move(ids));
}

EmbeddingMatrix Refs(uint32_t dim, std::vector<float> values) {
  std::vector<std::string> ids;
  for (size_t r = 0; r < values.size() / dim; ++r) ids.push_back("r" + std::to_string(r));
  return EmbeddingMatrix(dim, std::move(values), std::move(ids));
}

std::vector<float> Gaussian(size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.Normal());
  return v;
}

// Random taxonomy with up to max_p primaries and max_s secondaries each.
AttributeTaxonomy RandomTaxonomy(size_t max_p, size_t max_s, Rng& rng) {
  std::vector<PrimaryAttribute> list;
  const size_t np = 1 + rng.UniformBelow(max_p);
  for (size_t p = 0; p < np; ++p) {
    PrimaryAttribute a{"p" + std::to_string(p), {}};
    const size_t ns = 1 + rng.UniformBelow(max_s);
    for (size_t s = 0; s < ns; ++s) a.secondaries.push_back("s" + std::to_string(s));
    list.push_back(std::move(a));
  }
  return AttributeTaxonomy(std::move(list));
}

}  // namespace

TEST_CASE("frozen 3-secondary / 5-reference example") {
  const AttributeTaxonomy t({{"a", {"x", "y", "z"}}});
  const auto text = TextFor(t, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto refs = Refs(3, {0.9f, 0.1f, 0.2f, 0.1f, 0.2f, 0.95f, 0.5f, 0.5f, 0.0f, 0.2f, 0.8f, 0.3f, -1, 0, 0});
  const AttributeDictionary d = BuildDictionary(text, refs, t);
  // Cosine argmax per text row, computed by hand: [0, 3, 1].
  CHECK(d.matched_reference_ids() == std::vector<std::string>{"r0", "r3", "r1"});
  const auto normalized = L2Normalize(refs);
  for (size_t k = 0; k < 3; ++k) {
    const size_t expected[] = {0, 3, 1};
    for (size_t c = 0; c < 3; ++c) CHECK(d.keys().row(k)[c] == normalized.row(expected[k])[c]);
  }
  CHECK(d.values()[1] == AttributeValue{"a", "y"});
  CHECK(d.fingerprint() == t.Fingerprint());
}

TEST_CASE("self match and forced choice") {
  const AttributeTaxonomy t({{"color", {"black", "white"}}, {"size", {"big"}}});
  Rng rng(3);
  const auto text = L2Normalize(TextFor(t, Gaussian(3 * 6, rng)));
  // References: shuffled copies of every text row plus noise rows.
  std::vector<float> ref_values = Gaussian(2 * 6, rng);
  for (size_t k : {2, 0, 1}) ref_values.insert(ref_values.end(), text.row(k).begin(), text.row(k).end());
  const AttributeDictionary d = BuildDictionary(text, Refs(6, ref_values), t);
  for (size_t k = 0; k < 3; ++k) {
    for (size_t c = 0; c < 6; ++c) CHECK(std::abs(d.keys().row(k)[c] - text.row(k)[c]) <= 1e-6f);
  }

  const AttributeTaxonomy two({{"a", {"x", "y"}}});
  const AttributeDictionary single = BuildDictionary(TextFor(two, {1, 0, 0, 1}), Refs(2, {0.3f, -0.7f}), two);
  CHECK(single.matched_reference_ids() == std::vector<std::string>{"r0", "r0"});
}

TEST_CASE("build errors") {
  const AttributeTaxonomy t({{"a", {"x", "y"}}});
  const auto refs = Refs(2, {1, 0});
  CHECK_THROWS_AS(BuildDictionary(EmbeddingMatrix(2, {1, 0}, {"a/x"}), refs, t), Error);
  CHECK_THROWS_AS(BuildDictionary(EmbeddingMatrix(2, {1, 0, 0, 1}, {"a/y", "a/x"}), refs, t), Error);
  CHECK_THROWS_AS(BuildDictionary(TextFor(t, {1, 0, 0, 1}), EmbeddingMatrix(2), t), Error);
  CHECK_THROWS_AS(BuildDictionary(TextFor(t, {1, 0, 0, 0}), refs, t), Error);
  CHECK_THROWS_AS(BuildDictionary(TextFor(t, {1, 0, 0, 1}), Refs(3, {1, 0, 0}), t), Error);
}

TEST_CASE("random dictionaries match the exhaustive cosine oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const AttributeTaxonomy t = RandomTaxonomy(3, 4, rng);
    const uint32_t dim = 2 + static_cast<uint32_t>(rng.UniformBelow(7));
    const auto text = TextFor(t, Gaussian(t.secondary_count() * dim, rng));
    const auto refs = Refs(dim, Gaussian((1 + rng.UniformBelow(8)) * dim, rng));
    const AttributeDictionary d = BuildDictionary(text, refs, t);
    for (size_t k = 0; k < text.rows(); ++k) {
      CHECK(d.matched_reference_ids()[k] == refs.id(oracle::CosineArgmax(refs, 0, refs.rows(), text.row(k))));
    }
  }
}

TEST_CASE("annotate: exact key hit, forced choice, oracle, scale invariance") {
  Rng rng(23);
  const AttributeTaxonomy t({{"color", {"black", "white", "red"}}, {"shape", {"round"}}});
  const auto text = TextFor(t, Gaussian(4 * 8, rng));
  const auto refs = Refs(8, Gaussian(12 * 8, rng));
  const AttributeDictionary d = BuildDictionary(text, refs, t);

  const auto hit = AnnotateImage(d, d.keys().row(1), "img");
  CHECK(hit.image_id == "img");
  REQUIRE(hit.assigned.size() == 2);
  if (d.matched_reference_ids()[0] != d.matched_reference_ids()[1]) {
    CHECK(hit.assigned[0].secondary == "white");
    CHECK(hit.assigned[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(hit.assigned[1].secondary == "round");

  for (int trial = 0; trial < 50; ++trial) {
    const auto img = Gaussian(8, rng);
    const auto a = AnnotateImage(d, img);
    CHECK(a.assigned[1].secondary == "round");
    const size_t best = oracle::CosineArgmax(d.keys(), 0, 3, img);
    CHECK(a.assigned[0].secondary == d.values()[best].secondary);
    CHECK(a.assigned[0].similarity == doctest::Approx(static_cast<double>(oracle::Cosine(d.keys().row(best), img))));
    std::vector<float> scaled = img;
    for (auto& x : scaled) x *= 37.5f;
    const auto b = AnnotateImage(d, scaled);
    CHECK(b.assigned[0].secondary == a.assigned[0].secondary);
  }
}

TEST_CASE("annotate errors") {
  const AttributeTaxonomy t({{"a", {"x", "y"}}});
  const AttributeDictionary d = BuildDictionary(TextFor(t, {1, 0, 0, 1}), Refs(2, {1, 0, 0, 1}), t);
  CHECK_THROWS_AS(AnnotateImage(d, std::vector<float>{1, 0, 0}), Error);
  CHECK_THROWS_AS(AnnotateImage(d, std::vector<float>{0, 0}), Error);
}

TEST_CASE("annotate dataset") {
  Rng rng(29);
  const AttributeTaxonomy t({{"a", {"x", "y", "z"}}, {"b", {"u", "v"}}});
  const AttributeDictionary d = BuildDictionary(TextFor(t, Gaussian(5 * 6, rng)), Refs(6, Gaussian(9 * 6, rng)), t);

  std::vector<float> values = Gaussian(20 * 6, rng);
  std::copy(values.begin(), values.begin() + 6, values.begin() + 6);  // rows 0 and 1 identical
  std::vector<std::string> ids;
  std::vector<ManifestEntry> entries;
  for (size_t i = 0; i < 20; ++i) {
    ids.push_back("i" + std::to_string(i));
    entries.push_back({ids.back(), i % 2 ? "odd" : "even", {}});
  }
  const EmbeddingMatrix images(6, values, ids);
  const DatasetManifest manifest(entries);

  const AnnotatedDataset one = AnnotateDataset(d, images, manifest, 1);
  const AnnotatedDataset four = AnnotateDataset(d, images, manifest, 4);
  REQUIRE(one.size() == 20);
  CHECK(one.primaries == std::vector<std::string>{"a", "b"});
  CHECK(one.taxonomy_fingerprint == t.Fingerprint());
  CHECK(one.images[0].attributes == one.images[1].attributes);
  for (size_t i = 0; i < 20; ++i) {
    CHECK(one.images[i].image_id == ids[i]);
    CHECK(one.images[i].class_label == (i % 2 ? "odd" : "even"));
    CHECK(one.images[i].attributes == AnnotateImage(d, images.row(i)).assigned);
    CHECK(four.images[i].attributes == one.images[i].attributes);
  }

  CHECK(AnnotateDataset(d, EmbeddingMatrix(6), manifest).empty());
  CHECK_THROWS_AS(AnnotateDataset(d, images, DatasetManifest(std::vector<ManifestEntry>{{"i0", "x", std::nullopt}})), Error);
}

TEST_CASE("dictionary and annotation persistence") {
  testing::TempDir dir;
  Rng rng(31);
  const AttributeTaxonomy t({{"a", {"x", "y"}}, {"b", {"u", "v", "w"}}}, "A {attribute} thing");
  const AttributeDictionary d = BuildDictionary(TextFor(t, Gaussian(5 * 4, rng)), Refs(4, Gaussian(6 * 4, rng)), t);
  SaveDictionary(d, dir / "d.case", dir / "d.json");
  const AttributeDictionary back = LoadDictionary(dir / "d.case", dir / "d.json");
  CHECK(back.taxonomy() == t);
  CHECK(back.keys().BitwiseEqual(d.keys()));
  CHECK(back.matched_reference_ids() == d.matched_reference_ids());

  // A sidecar whose fingerprint no longer matches the values is rejected.
  std::string sidecar = ReadFile(dir / "d.json");
  sidecar.replace(sidecar.find(t.Fingerprint()), 16, "0000000000000000");
  WriteFileAtomic(dir / "bad.json", sidecar);
  CHECK_THROWS_AS(LoadDictionary(dir / "d.case", dir / "bad.json"), Error);

  std::vector<ManifestEntry> entries{{"m1", "c1", {}}, {"m2", "c2", {}}};
  const EmbeddingMatrix images(4, Gaussian(8, rng), {"m1", "m2"});
  const AnnotatedDataset data = AnnotateDataset(d, images, DatasetManifest(entries));
  WriteAnnotations(data, dir / "a.jsonl");
  const AnnotatedDataset parsed = ReadAnnotations(dir / "a.jsonl");
  CHECK(parsed.primaries == data.primaries);
  CHECK(parsed.taxonomy_fingerprint == data.taxonomy_fingerprint);
  REQUIRE(parsed.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(parsed.images[i].image_id == data.images[i].image_id);
    CHECK(parsed.images[i].class_label == data.images[i].class_label);
    CHECK(parsed.images[i].attributes == data.images[i].attributes);
  }
  CHECK_THROWS_AS(ParseAnnotations("{\"image_id\": 1}\n"), Error);
}

}  // namespace cas
