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

#include "cas/taxonomy.hpp"

#include <cstdint>
#include <cstdio>
#include <unordered_set>

#include <json.hpp>

#include "cas/error.hpp"
#include "cas/file_util.hpp"

namespace cas {

using json = nlohmann::ordered_json;

AttributeTaxonomy::AttributeTaxonomy(std::vector<PrimaryAttribute> primaries,
                                     std::string prompt_template)
    : primaries_(std::move(primaries)), prompt_template_(std::move(prompt_template)) {
  if (prompt_template_.find(kAttributePlaceholder) == std::string::npos) {
    ThrowValidation("prompt template '" + prompt_template_ + "' lacks the " +
                    std::string(kAttributePlaceholder) + " placeholder");
  }
  if (primaries_.empty()) ThrowValidation("taxonomy has no primary attributes");
  std::unordered_set<std::string> primary_names;
  for (size_t p = 0; p < primaries_.size(); ++p) {
    const PrimaryAttribute& primary = primaries_[p];
    if (primary.name.empty()) ThrowValidation("primaries[" + std::to_string(p) + "] has an empty name");
    if (!primary_names.insert(primary.name).second) {
      ThrowValidation("duplicate primary attribute '" + primary.name + "'");
    }
    if (primary.secondaries.empty()) {
      ThrowValidation("primary attribute '" + primary.name + "' has no secondary attributes");
    }
    std::unordered_set<std::string_view> secondary_names;
    for (const std::string& secondary : primary.secondaries) {
      if (secondary.empty()) ThrowValidation("empty secondary name under '" + primary.name + "'");
      if (!secondary_names.insert(secondary).second) {
        ThrowValidation("duplicate secondary attribute '" + primary.name + "/" + secondary + "'");
      }
    }
  }
}

size_t AttributeTaxonomy::secondary_count() const {
  size_t total = 0;
  for (const auto& primary : primaries_) total += primary.secondaries.size();
  return total;
}

size_t AttributeTaxonomy::FindPrimary(std::string_view name) const {
  for (size_t p = 0; p < primaries_.size(); ++p) {
    if (primaries_[p].name == name) return p;
  }
  return npos;
}

std::string AttributeTaxonomy::Fingerprint() const {
  uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](std::string_view bytes) {
    for (unsigned char c : bytes) {
      hash ^= c;
      hash *= 0x100000001b3ULL;
    }
  };
  mix(prompt_template_);
  mix("\x1e");
  for (const auto& primary : primaries_) {
    mix(primary.name);
    for (const auto& secondary : primary.secondaries) {
      mix("\x1f");
      mix(secondary);
    }
    mix("\x1e");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

AttributeTaxonomy ParseTaxonomy(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    ThrowFormat(std::string("taxonomy: ") + e.what());
  }
  if (!doc.is_object()) ThrowFormat("taxonomy: document must be an object");

  std::string prompt_template(kDefaultPromptTemplate);
  if (auto it = doc.find("prompt_template"); it != doc.end()) {
    if (!it->is_string()) ThrowFormat("taxonomy: prompt_template must be a string");
    prompt_template = it->get<std::string>();
  }
  auto primaries_it = doc.find("primaries");
  if (primaries_it == doc.end() || !primaries_it->is_array()) {
    ThrowFormat("taxonomy: 'primaries' must be an array");
  }

  std::vector<PrimaryAttribute> primaries;
  for (size_t p = 0; p < primaries_it->size(); ++p) {
    const json& entry = (*primaries_it)[p];
    const std::string path = "primaries[" + std::to_string(p) + "]";
    if (!entry.is_object()) ThrowFormat("taxonomy: " + path + " must be an object");
    auto name = entry.find("name");
    if (name == entry.end() || !name->is_string()) ThrowFormat("taxonomy: " + path + ".name must be a string");
    PrimaryAttribute primary{name->get<std::string>(), {}};
    auto secondaries = entry.find("secondaries");
    if (secondaries == entry.end() || !secondaries->is_array()) {
      ThrowFormat("taxonomy: '" + primary.name + "' secondaries must be an array");
    }
    for (const json& s : *secondaries) {
      if (!s.is_string()) ThrowFormat("taxonomy: '" + primary.name + "' has a non-string secondary");
      primary.secondaries.push_back(s.get<std::string>());
    }
    primaries.push_back(std::move(primary));
  }
  return AttributeTaxonomy(std::move(primaries), std::move(prompt_template));
}

AttributeTaxonomy LoadTaxonomy(const std::filesystem::path& path) {
  return ParseTaxonomy(ReadFile(path));
}

std::string SerializeTaxonomy(const AttributeTaxonomy& taxonomy) {
  json doc;
  doc["prompt_template"] = taxonomy.prompt_template();
  json primaries = json::array();
  for (const auto& primary : taxonomy.primaries()) {
    primaries.push_back({{"name", primary.name}, {"secondaries", primary.secondaries}});
  }
  doc["primaries"] = std::move(primaries);
  return doc.dump(2) + "\n";
}

void SaveTaxonomy(const AttributeTaxonomy& taxonomy, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeTaxonomy(taxonomy));
}

std::string RenderPrompt(std::string_view prompt_template, std::string_view secondary) {
  size_t pos = prompt_template.find(kAttributePlaceholder);
  if (pos == std::string_view::npos) {
    ThrowValidation("prompt template '" + std::string(prompt_template) + "' lacks the " +
                    std::string(kAttributePlaceholder) + " placeholder");
  }
  std::string out;
  size_t start = 0;
  while (pos != std::string_view::npos) {
    out.append(prompt_template.substr(start, pos - start));
    out.append(secondary);
    start = pos + kAttributePlaceholder.size();
    pos = prompt_template.find(kAttributePlaceholder, start);
  }
  out.append(prompt_template.substr(start));
  return out;
}

std::vector<RenderedPrompt> RenderPrompts(const AttributeTaxonomy& taxonomy) {
  std::vector<RenderedPrompt> prompts;
  prompts.reserve(taxonomy.secondary_count());
  for (const auto& primary : taxonomy.primaries()) {
    for (const auto& secondary : primary.secondaries) {
      prompts.push_back({primary.name, secondary, RenderPrompt(taxonomy.prompt_template(), secondary)});
    }
  }
  return prompts;
}

std::filesystem::path DefaultTaxonomyPath() {
  return std::filesystem::path(CAS_DATA_DIR) / "default_taxonomy.json";
}

}  // namespace cas
