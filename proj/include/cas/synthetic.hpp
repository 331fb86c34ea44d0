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
#include <string>
#include <vector>

#include "cas/attribute_dictionary.hpp"
#include "cas/taxonomy.hpp"

namespace cas {

// Labelled dataset with a skewed attribute distribution and one planted
// rare combination per class.
//
// For every (class, primary) a fixed permutation orders the secondaries.
// A common image draws, independently per primary, one of the first
// (secondaries - 1) permuted entries with Zipf weights 1 / (k + 1)^exponent.
// With probability rare_probability an image instead takes the last permuted
// secondary of every primary at once.
struct PlantedDatasetOptions {
  size_t classes = 5;
  size_t images_per_class = 100;
  size_t primaries = 6;
  size_t secondaries = 8;
  double zipf_exponent = 1.5;
  double rare_probability = 0.08;
  uint64_t seed = 0;
};

// Synthetic taxonomy "p<i>" / "s<i>_<j>" for PlantedDatasetOptions shapes.
AttributeTaxonomy SyntheticTaxonomy(size_t primaries, size_t secondaries);

// Image ids "<class>-<index>", classes "c<k>". The taxonomy fingerprint is
// that of SyntheticTaxonomy.
AnnotatedDataset PlantedDataset(const PlantedDatasetOptions& options);

// Everything the pipeline consumes, written under one directory:
//   taxonomy.json, text.case, references.case, images.case,
//   manifest.jsonl, images/<id>.png, pipeline.json
// Embeddings of one image are the sum of the text embeddings of its planted
// secondaries plus a class direction and noise, so annotation recovers the
// planted attributes.
struct FixtureOptions {
  size_t classes = 5;
  size_t images_per_class = 40;
  size_t primaries = 6;
  size_t secondaries = 8;
  uint32_t dim = 128;
  size_t references_per_secondary = 2;
  size_t distractors = 100;
  size_t image_size = 24;
  uint64_t seed = 20260101;
};

struct FixtureSummary {
  AttributeTaxonomy taxonomy;
  AnnotatedDataset planted;  // ground-truth attributes per image
};

FixtureSummary WriteFixture(const FixtureOptions& options, const std::filesystem::path& directory);

}  // namespace cas
