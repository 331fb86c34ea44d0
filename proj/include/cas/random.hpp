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

#include <cstdint>
#include <random>

namespace cas {

// Deterministic random stream.
//
// The engine is std::mt19937_64, whose output sequence for a given seed is
// fixed by the C++ standard. Every conversion on top of it is implemented
// here rather than with <random> distributions, whose algorithms are left to
// the standard library vendor:
//   Uniform01       top 53 bits * 2^-53, in [0, 1)
//   UniformBelow(n) rejection on the top of the 64-bit range (unbiased)
//   Normal          Marsaglia polar method, spare value cached
//   Gamma/Beta      Marsaglia-Tsang squeeze in log space; shapes below 1 use
//                   the U^(1/a) boost so Beta(0.2, 0.2) never divides 0 by 0
//
// Uniform01 and UniformBelow are bit-reproducible on every platform; the
// transcendental conversions are reproducible wherever libm agrees.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  double Uniform01();
  // (0, 1): safe to take the logarithm of.
  double UniformOpen01();
  // Uniform integer in [0, n); n must be positive.
  uint64_t UniformBelow(uint64_t n);
  double Normal();
  // log of a Gamma(shape, 1) variate.
  double LogGamma(double shape);
  // Beta(a, b) variate in [0, 1].
  double Beta(double a, double b);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 finalizer; used to derive independent stream seeds.
uint64_t Mix64(uint64_t x);

// Seed of the stream owned by item `index` of a batch: seed XOR Mix64(index).
inline uint64_t DeriveSeed(uint64_t seed, uint64_t index) { return seed ^ Mix64(index); }

}  // namespace cas
