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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cas/random.hpp"

namespace cas {

inline constexpr double kDefaultAlpha = 0.2;
inline constexpr double kDefaultFmixDecay = 3.0;

// Interleaved (HWC) image with values in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(size_t height, size_t width, size_t channels, float fill = 0.0f);
  // Throws kValidation on a size mismatch or values outside [0, 1].
  ImageTensor(size_t height, size_t width, size_t channels, std::vector<float> pixels);

  size_t height() const { return height_; }
  size_t width() const { return width_; }
  size_t channels() const { return channels_; }
  bool SameShape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  float& at(size_t row, size_t col, size_t ch) { return pixels_[(row * width_ + col) * channels_ + ch]; }
  float at(size_t row, size_t col, size_t ch) const { return pixels_[(row * width_ + col) * channels_ + ch]; }
  const std::vector<float>& pixels() const { return pixels_; }

  bool operator==(const ImageTensor&) const = default;

 private:
  size_t height_ = 0;
  size_t width_ = 0;
  size_t channels_ = 0;
  std::vector<float> pixels_;
};

// Row-major H x W mask of 0/1 bytes.
struct BinaryMask {
  size_t height = 0;
  size_t width = 0;
  std::vector<uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(size_t h, size_t w, uint8_t fill) : height(h), width(w), bits(h * w, fill) {}

  uint8_t at(size_t row, size_t col) const { return bits[row * width + col]; }
  size_t Ones() const;
  // Exact rational ones / (H * W), correctly rounded.
  double Mean() const;
};

// Half-open pixel box: rows [y0, y1), columns [x0, x1).
struct Box {
  int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int64_t Area() const { return (x1 - x0) * (y1 - y0); }
  bool operator==(const Box&) const = default;
};

enum class MixMethod { kCutMix, kFMix, kSaliencyMix };

std::string_view MixMethodName(MixMethod method);
// Accepts "cutmix", "fmix", "saliencymix".
MixMethod ParseMixMethod(std::string_view name);

struct MixPlan {
  MixMethod method = MixMethod::kCutMix;
  double lambda = 1.0;            // drawn from Beta(alpha, alpha)
  double lambda_effective = 1.0;  // realized mask mean
  BinaryMask mask;                // 1 keeps image_i, 0 takes image_j
  std::optional<Box> box;         // cutmix and saliencymix only
  std::pair<size_t, size_t> pair{0, 0};
  std::pair<double, double> label_coeffs{1.0, 0.0};
};

// Beta(alpha, alpha). Throws kValidation for alpha <= 0.
double SampleLambda(double alpha, Rng& rng);

// Side lengths round(h * sqrt(1 - lambda)) and round(w * sqrt(1 - lambda))
// (half away from zero).
std::pair<int64_t, int64_t> CutSize(size_t h, size_t w, double lambda);

// Cut box of CutSize placed with its top-left at (center - side / 2), then
// clipped to the image. The unclipped area is exactly the product of the
// two side lengths.
Box CutBoxAt(size_t h, size_t w, double lambda, int64_t center_row, int64_t center_col);

// Center drawn uniformly over all pixels (row first, then column).
Box CutMixBox(size_t h, size_t w, double lambda, Rng& rng);

// Ones outside the box, zeros inside.
BinaryMask BoxMask(size_t h, size_t w, const Box& box);

// Fourier-mix mask: a complex Gaussian spectrum attenuated by
// 1 / max(f, 1 / max(h, w))^decay is inverse transformed; the real part's
// top round_half_even(lambda * h * w) values become 1 (ties by lower index).
BinaryMask FmixMask(size_t h, size_t w, double lambda, double decay, Rng& rng);

// Spectral-residual saliency map (H x W, row-major): log(1 + |F|) minus its
// circular 3x3 mean, recombined with the phase and inverse transformed,
// squared, then Gaussian smoothed (radius 3, sigma 1.5, clamped borders).
// Frequency bins that carry no energy stay empty. Channels are averaged.
std::vector<double> SaliencyMap(const ImageTensor& image);

// Row-major argmax of SaliencyMap; first maximum wins.
std::pair<size_t, size_t> SaliencyPeak(const ImageTensor& image);

// Label vectors must be probability vectors of equal length (entries >= 0,
// sum within 1e-6 of 1).
void ValidateLabel(const std::vector<double>& label);

struct MixResult {
  ImageTensor image;
  std::vector<double> label;
  MixPlan plan;
};

// Pixelwise x_i * M + x_j * (1 - M), label lambda_eff * y_i + (1 - lambda_eff) * y_j.
MixResult ApplyMask(const ImageTensor& image_i, const ImageTensor& image_j, const std::vector<double>& label_i,
                    const std::vector<double>& label_j, MixPlan plan);

// Draws lambda, builds the method's mask and applies it. For saliencymix the
// box is centered on the saliency peak of image_j, the image the patch is
// taken from.
MixResult MakeMix(MixMethod method, const ImageTensor& image_i, const ImageTensor& image_j,
                  const std::vector<double>& label_i, const std::vector<double>& label_j, double alpha, Rng& rng,
                  double fmix_decay = kDefaultFmixDecay);

// Round half to even, independent of the floating-point environment.
int64_t RoundHalfEven(double x);

}  // namespace cas
