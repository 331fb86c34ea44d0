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

// Regenerates the bundled pipeline fixture.
//
//   cas-make-fixture [--out DIR] [--seed N]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cas/error.hpp"
#include "cas/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic pipeline fixture", "cas-make-fixture"};
  std::string out = std::string(CAS_DATA_DIR) + "/fixture";
  cas::FixtureOptions options;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", options.seed, "Generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const cas::FixtureSummary summary = cas::WriteFixture(options, out);
    std::cout << "wrote " << summary.planted.size() << " images to " << out << " (taxonomy "
              << summary.taxonomy.Fingerprint() << ")\n";
  } catch (const cas::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
