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

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "cas/attribute_dictionary.hpp"
#include "cas/cli.hpp"
#include "cas/file_util.hpp"
#include "cas/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace cas {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation Run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Invocation inv;
  inv.code = RunSubcommand(args, out, err);
  inv.out = out.str();
  inv.err = err.str();
  return inv;
}

size_t FileCount(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

fs::path WritePlanted(const testing::TempDir& dir) {
  PlantedDatasetOptions options;
  options.images_per_class = 20;
  options.seed = 4;
  const fs::path path = dir / "annotations.jsonl";
  WriteAnnotations(PlantedDataset(options), path);
  return path;
}

}  // namespace

TEST_CASE("sweep range parsing") {
  const auto grid = ParseSweepRange("0.5:1.5:0.1");
  REQUIRE(grid.size() == 11);
  CHECK(grid.front() == 0.5);
  CHECK(grid[7] == 1.2);
  CHECK(grid.back() == 1.5);
  CHECK(ParseSweepRange("1:1:0.5") == std::vector<double>{1.0});
  CHECK(ParseSweepRange("1:2:0.3").size() == 4);
  for (const char* bad : {"", "1:2", "1:2:3:4", "a:2:0.1", "2:1:0.1", "0:1:0.1", "1:2:0", "1:2:-1"}) {
    CAPTURE(bad);
    try {
      ParseSweepRange(bad);
      FAIL("expected usage error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUsage);
    }
  }
}

TEST_CASE("exit code mapping") {
  CHECK(ExitCodeFor(ErrorKind::kUsage) == 2);
  CHECK(ExitCodeFor(ErrorKind::kIo) == 3);
  CHECK(ExitCodeFor(ErrorKind::kFormat) == 4);
  CHECK(ExitCodeFor(ErrorKind::kValidation) == 5);
}

TEST_CASE("help lists exit codes and the thread variable") {
  const Invocation inv = Run({"--help"});
  CHECK(inv.code == 0);
  CHECK(inv.out.find("Exit codes") != std::string::npos);
  CHECK(inv.out.find("5  validation") != std::string::npos);
  CHECK(inv.out.find("CAS_TOOLKIT_THREADS") != std::string::npos);
  for (const char* sub : {"build-dict", "annotate", "cas", "weights", "sample", "augment", "report", "sweep",
                          "pipeline"}) {
    CHECK(inv.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("cas, weights, sample and report chain") {
  testing::TempDir dir;
  const fs::path annotations = WritePlanted(dir);
  const std::string out = (dir / "out").string();

  Invocation inv = Run({"cas", "--annotations", annotations.string(), "--out-dir", out});
  REQUIRE(inv.code == 0);
  CHECK(inv.err.empty());
  CHECK(fs::exists(dir / "out" / "cas.jsonl"));
  CHECK(fs::exists(dir / "out" / "stats.json"));
  CHECK(inv.out.find("wrote") != std::string::npos);

  inv = Run({"weights", "--cas", out + "/cas.jsonl", "--b", "1.2", "--seed", "3", "--out-dir", out});
  REQUIRE(inv.code == 0);
  inv = Run({"sample", "--schedule", out + "/schedule.json", "--n", "25", "--out-dir", out});
  REQUIRE(inv.code == 0);
  const auto samples = nlohmann::json::parse(ReadFile(dir / "out" / "samples.json"));
  CHECK(samples["n"] == 25);
  CHECK(samples["seed"] == 3);

  for (const char* kind : {"bins", "partition"}) {
    inv = Run({"report", "--kind", kind, "--cas", out + "/cas.jsonl", "--out-dir", out});
    CHECK(inv.code == 0);
  }
  inv = Run({"report", "--kind", "distribution", "--annotations", annotations.string(), "--out-dir", out});
  CHECK(inv.code == 0);
  inv = Run({"report", "--kind", "compare", "--annotations", annotations.string(), "--samples",
             out + "/samples.json", "--out-dir", out});
  CHECK(inv.code == 0);
  const auto compare = nlohmann::json::parse(ReadFile(dir / "out" / "report_compare.json"));
  CHECK(compare["rows"].size() == 3);
  for (const char* kind : {"bins", "partition", "distribution", "compare"}) {
    CHECK(fs::exists(dir / "out" / ("report_" + std::string(kind) + ".csv")));
  }

  // Compare from two stats files.
  inv = Run({"report", "--kind", "compare", "--before", out + "/stats.json", "--after", out + "/stats.json",
             "--out-dir", (dir / "cmp").string()});
  CHECK(inv.code == 0);
}

TEST_CASE("sweep writes one schedule per grid value") {
  testing::TempDir dir;
  const fs::path annotations = WritePlanted(dir);
  REQUIRE(Run({"cas", "--annotations", annotations.string(), "--out-dir", dir.path().string()}).code == 0);
  const Invocation inv =
      Run({"sweep", "--cas", (dir / "cas.jsonl").string(), "--b", "0.5:1.5:0.1", "--out-dir", (dir / "sw").string()});
  REQUIRE(inv.code == 0);
  CHECK(FileCount(dir / "sw") == 11);
  CHECK(fs::exists(dir / "sw" / "schedule_b1.2.json"));
  CHECK(fs::exists(dir / "sw" / "schedule_b0.5.json"));
  CHECK(fs::exists(dir / "sw" / "schedule_b1.5.json"));
}

TEST_CASE("errors map to exit codes with a JSON line and no partial output") {
  testing::TempDir dir;
  const fs::path annotations = WritePlanted(dir);
  const std::string out = (dir / "out").string();

  Invocation inv = Run({"cas", "--annotations", (dir / "missing.jsonl").string(), "--out-dir", out});
  CHECK(inv.code == 3);
  CHECK(FileCount(dir / "out") == 0);
  const auto err = nlohmann::json::parse(inv.err);
  CHECK(err["error"] == "io");
  CHECK(err["exit_code"] == 3);
  CHECK(err["message"].is_string());

  CHECK(Run({"cas", "--annotations", annotations.string(), "--bogus"}).code == 2);
  CHECK(Run({"frobnicate"}).code == 2);
  CHECK(Run({}).code == 2);
  CHECK(Run({"cas", "--annotations", annotations.string(), "--scope", "galaxy", "--out-dir", out}).code == 2);

  WriteFileAtomic(dir / "garbage.jsonl", "{not json\n");
  inv = Run({"cas", "--annotations", (dir / "garbage.jsonl").string(), "--out-dir", out});
  CHECK(inv.code == 4);
  CHECK(nlohmann::json::parse(inv.err)["error"] == "format");
  CHECK(FileCount(dir / "out") == 0);

  REQUIRE(Run({"cas", "--annotations", annotations.string(), "--out-dir", out}).code == 0);
  inv = Run({"weights", "--cas", out + "/cas.jsonl", "--b", "-1", "--out-dir", out});
  CHECK(inv.code == 5);
  CHECK(nlohmann::json::parse(inv.err)["error"] == "validation");
  CHECK_FALSE(fs::exists(dir / "out" / "schedule.json"));
}

TEST_CASE("pipeline errors carry the stage") {
  testing::TempDir dir;
  FixtureOptions options;
  options.images_per_class = 4;
  WriteFixture(options, dir / "fx");
  WriteFileAtomic(dir / "fx" / "manifest.jsonl", "");
  const Invocation inv = Run({"pipeline", "--config", (dir / "fx" / "pipeline.json").string()});
  CHECK(inv.code == 5);
  const auto err = nlohmann::json::parse(inv.err);
  CHECK(err["stage"] == "annotate");
}

TEST_CASE("installed binary returns the documented exit codes") {
  testing::TempDir dir;
  const std::string bin = CAS_TOOLKIT_BINARY;
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("--help") == 0);
  CHECK(status("cas --nope") == 2);
  CHECK(status("cas --annotations " + (dir / "missing").string()) == 3);
}

}  // namespace cas
