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

#include "fft.hpp"

#include <cstring>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "cas/error.hpp"

namespace cas::detail {

namespace {

// FFTW's planner is not re-entrant; execution on private buffers is.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

struct PlanDestroy {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard lock(PlannerMutex());
    fftw_destroy_plan(plan);
  }
};

}  // namespace

void Fft2d(std::vector<std::complex<double>>& grid, size_t rows, size_t cols, bool inverse) {
  if (rows == 0 || cols == 0 || grid.size() != rows * cols) ThrowValidation("Fft2d: grid size mismatch");
  const size_t n = rows * cols;
  // fftw_malloc guarantees the same alignment on every call, which keeps the
  // chosen codelets (and therefore the rounding) identical run to run.
  std::unique_ptr<fftw_complex, FftwFree> buffer(fftw_alloc_complex(n));
  if (!buffer) throw std::bad_alloc();
  std::unique_ptr<fftw_plan_s, PlanDestroy> plan;
  {
    std::lock_guard lock(PlannerMutex());
    plan.reset(fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buffer.get(), buffer.get(),
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE));
  }
  if (!plan) ThrowValidation("Fft2d: FFTW could not build a plan");
  static_assert(sizeof(std::complex<double>) == sizeof(fftw_complex));
  std::memcpy(buffer.get(), grid.data(), n * sizeof(fftw_complex));
  fftw_execute(plan.get());
  std::memcpy(static_cast<void*>(grid.data()), buffer.get(), n * sizeof(fftw_complex));
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& z : grid) z *= scale;
  }
}

double FftFrequency(size_t k, size_t n) {
  const size_t half = (n + 1) / 2;
  const double signed_k = k < half ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  return signed_k / static_cast<double>(n);
}

}  // namespace cas::detail
