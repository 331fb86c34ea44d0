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

#include "cas/random.hpp"

#include <cmath>

#include "cas/error.hpp"

namespace cas {

double Rng::Uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::UniformOpen01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

uint64_t Rng::UniformBelow(uint64_t n) {
  if (n == 0) ThrowValidation("UniformBelow needs a positive bound");
  // Largest multiple of n that fits; reject draws at or above it.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
  uint64_t x;
  do {
    x = engine_();
  } while (x > limit);
  return x % n;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * Uniform01() - 1.0;
    v = 2.0 * Uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

double Rng::LogGamma(double shape) {
  if (!(shape > 0.0)) ThrowValidation("gamma shape must be positive");
  if (shape < 1.0) {
    // X_a = X_{a+1} * U^{1/a}
    return LogGamma(shape + 1.0) + std::log(UniformOpen01()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = Normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = UniformOpen01();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d) + std::log(v);
  }
}

double Rng::Beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) ThrowValidation("beta parameters must be positive");
  const double log_x = LogGamma(a);
  const double log_y = LogGamma(b);
  // x / (x + y) without leaving log space.
  return 1.0 / (1.0 + std::exp(log_y - log_x));
}

uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace cas
