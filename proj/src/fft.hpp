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

#include <complex>
#include <cstddef>
#include <vector>

namespace cas::detail {

// In-place 2-D DFT of a row-major rows x cols grid. The inverse transform is
// scaled by 1 / (rows * cols) so Inverse(Forward(x)) == x up to rounding.
void Fft2d(std::vector<std::complex<double>>& grid, size_t rows, size_t cols, bool inverse);

// numpy.fft.fftfreq(n)[k]: k / n for k < ceil(n / 2), (k - n) / n after.
double FftFrequency(size_t k, size_t n);

}  // namespace cas::detail
