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
#include <string>
#include <string_view>
#include <vector>

namespace cas {

inline constexpr std::string_view kAttributePlaceholder = "{attribute}";
inline constexpr std::string_view kDefaultPromptTemplate = "The photo is {attribute}";

struct PrimaryAttribute {
  std::string name;
  std::vector<std::string> secondaries;

  bool operator==(const PrimaryAttribute&) const = default;
};

// Two-level attribute hierarchy. Primary order is significant: every
// annotation and CAS component list follows it.
class AttributeTaxonomy {
 public:
  AttributeTaxonomy() = default;

  // Validates names and the template. Throws kValidation on duplicate or
  // empty names (naming the offending "primary/secondary" path) or when the
  // template lacks the placeholder.
  AttributeTaxonomy(std::vector<PrimaryAttribute> primaries,
                    std::string prompt_template = std::string(kDefaultPromptTemplate));

  const std::vector<PrimaryAttribute>& primaries() const { return primaries_; }
  const std::string& prompt_template() const { return prompt_template_; }

  size_t primary_count() const { return primaries_.size(); }
  size_t secondary_count() const;

  // Index of the primary in taxonomy order, or npos.
  size_t FindPrimary(std::string_view name) const;

  // Stable 64-bit FNV-1a digest over the template and every name, rendered
  // as 16 lowercase hex digits. Fields are separated by 0x1F, primaries
  // terminated by 0x1E, so the digest is independent of JSON formatting.
  std::string Fingerprint() const;

  bool operator==(const AttributeTaxonomy&) const = default;

  static constexpr size_t npos = static_cast<size_t>(-1);

 private:
  std::vector<PrimaryAttribute> primaries_;
  std::string prompt_template_ = std::string(kDefaultPromptTemplate);
};

struct RenderedPrompt {
  std::string primary;
  std::string secondary;
  std::string text;

  // "primary/secondary": the row id used for prompt embeddings.
  std::string id() const { return primary + "/" + secondary; }
};

// Parses the JSON taxonomy document
//   {"prompt_template": str, "primaries": [{"name": str, "secondaries": [str]}]}
// Throws kFormat on malformed JSON or schema, kValidation on rule violations.
AttributeTaxonomy ParseTaxonomy(std::string_view json_text);
AttributeTaxonomy LoadTaxonomy(const std::filesystem::path& path);

std::string SerializeTaxonomy(const AttributeTaxonomy& taxonomy);
void SaveTaxonomy(const AttributeTaxonomy& taxonomy, const std::filesystem::path& path);

// One prompt per secondary, concatenated over primaries in taxonomy order.
std::vector<RenderedPrompt> RenderPrompts(const AttributeTaxonomy& taxonomy);

// Substitutes every occurrence of the placeholder.
std::string RenderPrompt(std::string_view prompt_template, std::string_view secondary);

// Path of the shipped 20-primary default taxonomy.
std::filesystem::path DefaultTaxonomyPath();

}  // namespace cas
