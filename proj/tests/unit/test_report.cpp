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

#include <json.hpp>

#include "cas/error.hpp"
#include "cas/file_util.hpp"
#include "cas/report.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace cas {

namespace {

std::vector<CasScore> Scores(const std::vector<uint64_t>& cas, const std::string& prefix = "i") {
  std::vector<CasScore> out;
  for (size_t i = 0; i < cas.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "%s%03zu", prefix.c_str(), i);
    out.push_back({id, i % 2 ? "odd" : "even", {}, cas[i]});
  }
  return out;
}

std::vector<uint64_t> CasOfSubset(const std::vector<CasScore>& s) {
  std::vector<uint64_t> v;
  for (const auto& x : s) v.push_back(x.cas);
  return v;
}

}  // namespace

TEST_CASE("partition of 1..10") {
  const auto p = PartitionByCas(Scores({3, 1, 4, 10, 5, 9, 2, 6, 8, 7}));
  CHECK(CasOfSubset(p.high) == std::vector<uint64_t>{10, 9, 8, 7});
  CHECK(CasOfSubset(p.middle) == std::vector<uint64_t>{6, 5, 4});
  CHECK(CasOfSubset(p.low) == std::vector<uint64_t>{3, 2, 1});
}

TEST_CASE("partition ties resolve by id") {
  const auto p = PartitionByCas(Scores(std::vector<uint64_t>(10, 5)));
  REQUIRE(p.high.size() == 4);
  CHECK(p.high[0].image_id == "i000");
  CHECK(p.high[3].image_id == "i003");
  CHECK(p.middle[0].image_id == "i004");
  CHECK(p.low.back().image_id == "i009");
  CHECK_THROWS_AS(PartitionByCas({}), Error);
}

TEST_CASE("partition sizes follow the ceiling rule") {
  auto sizes = ComputePartitionSizes(7);
  CHECK(sizes.high == 3);
  CHECK(sizes.middle == 3);
  CHECK(sizes.low == 1);
  sizes = ComputePartitionSizes(3);
  CHECK(sizes.high == 2);
  CHECK(sizes.middle == 1);
  CHECK(sizes.low == 0);
  for (size_t n = 1; n <= 500; ++n) {
    const auto s = ComputePartitionSizes(n);
    const auto [h, m, l] = oracle::PartitionSizes(n);
    CHECK(s.high == h);
    CHECK(s.middle == m);
    CHECK(s.low == l);
  }
}

TEST_CASE("partition invariants on random scores") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<uint64_t> cas(3 + rng.UniformBelow(60));
    for (auto& c : cas) c = 1 + rng.UniformBelow(15);
    const auto p = PartitionByCas(Scores(cas));
    CHECK(p.high.size() + p.middle.size() + p.low.size() == cas.size());
    std::set<std::string> ids;
    for (const auto* part : {&p.high, &p.middle, &p.low})
      for (const auto& s : *part) ids.insert(s.image_id);
    CHECK(ids.size() == cas.size());
    if (!p.middle.empty()) CHECK(p.high.back().cas >= p.middle.front().cas);
    if (!p.low.empty() && !p.middle.empty()) CHECK(p.middle.back().cas >= p.low.front().cas);
  }
}

TEST_CASE("binning") {
  std::vector<uint64_t> hundred(100);
  for (size_t i = 0; i < 100; ++i) hundred[i] = i + 1;
  const IntervalBinning b = BinCas(hundred);
  REQUIRE(b.bins.size() == 10);
  for (const auto& bin : b.bins) CHECK(bin.count == 10);
  CHECK(b.bins[0].lower == 1.0);
  CHECK(b.bins[9].upper == 100.0);
  CHECK(b.bins[0].mean_cas == 5.5);

  const IntervalBinning same = BinCas(std::vector<uint64_t>{4, 4, 4});
  CHECK(same.bins[0].count == 3);
  for (size_t i = 1; i < 10; ++i) CHECK(same.bins[i].count == 0);
  CHECK_THROWS_AS(BinCas(std::vector<uint64_t>{}), Error);

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<uint64_t> v(1 + rng.UniformBelow(200));
    for (auto& x : v) x = 6 + rng.UniformBelow(1 + rng.UniformBelow(300));
    const IntervalBinning got = BinCas(v);
    const auto expected = oracle::BinCounts(v, 10);
    uint64_t total = 0;
    for (size_t i = 0; i < 10; ++i) {
      CHECK(got.bins[i].count == expected[i]);
      total += got.bins[i].count;
      if (got.bins[i].count > 0) {
        CHECK(got.bins[i].mean_cas >= got.bins[i].lower - 1e-9);
        CHECK(got.bins[i].mean_cas <= got.bins[i].upper + 1e-9);
      }
    }
    CHECK(total == v.size());
  }
}

TEST_CASE("binning by scope") {
  const auto by_class = BinCasByScope(Scores({1, 2, 3, 4, 5, 6}), Scope::kPerClass);
  CHECK(by_class.size() == 2);
  CHECK(by_class.at("even").min_cas == 1);
  CHECK(by_class.at("odd").max_cas == 6);
  const auto global = BinCasByScope(Scores({1, 2, 3}), Scope::kGlobal);
  CHECK(global.count("*") == 1);
}

TEST_CASE("attribute distribution order") {
  AnnotatedDataset data;
  data.primaries = {"color", "size"};
  const std::vector<std::string> colors{"black", "black", "white", "red", "black", "purple",
                                        "white", "red", "black", "white", "red", "black"};
  for (size_t i = 0; i < colors.size(); ++i) {
    data.images.push_back({"i" + std::to_string(i), "k", {{"color", colors[i], 1}, {"size", "big", 1}}});
  }
  const auto rows = AttributeDistribution(data, Scope::kPerClass);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].secondary == "black");
  CHECK(rows[0].count == 5);
  CHECK(rows[1].secondary == "red");
  CHECK(rows[2].secondary == "white");
  CHECK(rows[2].rank == 2);
  CHECK(rows[3].secondary == "purple");
  CHECK(rows[3].rank == 3);
  CHECK(rows[4].primary == "size");
  CHECK(rows[4].count == 12);
  CHECK_THROWS_AS(AttributeDistribution(AnnotatedDataset{}, Scope::kGlobal), Error);
}

TEST_CASE("compare") {
  const CasStatistics before{124.6, 37.6, 1000, "f"};
  const CasStatistics after{129.8, 29.3, 1000, "f"};
  const auto c = CompareCas(before, after);
  CHECK(c.delta_mean == doctest::Approx(5.2));
  CHECK(c.delta_std == doctest::Approx(-8.3));
  const auto same = CompareCas(before, before);
  CHECK(same.delta_mean == 0.0);
  CHECK(same.delta_std == 0.0);
  CHECK_THROWS_AS(CompareCas(before, CasStatistics{1, 1, 1, "g"}), Error);
}

TEST_CASE("resampled statistics recount the drawn multiset") {
  AnnotatedDataset data;
  data.primaries = {"p"};
  for (int i = 0; i < 4; ++i) data.images.push_back({"i" + std::to_string(i), "k", {{"p", i < 3 ? "a" : "b", 1}}});
  // Draw the rare image three times and one common image once: b becomes
  // the frequent secondary, so the common draw gets rank 2.
  const auto s = ResampledCasStatistics(data, {3, 3, 3, 0}, Scope::kPerClass);
  CHECK(s.mean == doctest::Approx(1.25));
  CHECK(s.n == 4);
  CHECK_THROWS_AS(ResampledCasStatistics(data, {9}, Scope::kPerClass), Error);
}

TEST_CASE("csv and json mirror each other") {
  testing::TempDir dir;
  const auto table = BinningTable(BinCasByScope(Scores({1, 1, 9}), Scope::kGlobal));
  const auto files = WriteReport(table, dir.path());
  CHECK(files == std::vector<std::string>{"report_bins.csv", "report_bins.json"});

  const auto csv = SplitLines(ReadFile(dir / "report_bins.csv"));
  const auto json = nlohmann::json::parse(ReadFile(dir / "report_bins.json"));
  CHECK(csv[0] == "scope_key,bin,lower,upper,count,mean_cas");
  REQUIRE(json["rows"].size() == csv.size() - 1);
  CHECK(csv[1] == "*,1,1,1.8,2,1");
  CHECK(json["rows"][0]["count"] == 2);
  CHECK(json["rows"][0]["upper"] == 1.8);
  CHECK(csv[2] == "*,2,1.8,2.6,0,");
  CHECK(json["rows"][1]["mean_cas"].is_null());

  const auto partition = ToCsv(PartitionTable(PartitionByCas(Scores({2, 1}, "a,b"))));
  CHECK(partition.find("\"a,b000\"") != std::string::npos);
}

}  // namespace cas
