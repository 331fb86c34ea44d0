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

#include "cas/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "cas/error.hpp"
#include "fft.hpp"

namespace cas {

namespace {

constexpr int kSaliencySmoothingRadius = 3;
constexpr double kSaliencySmoothingSigma = 1.5;
// Spectrum bins below this fraction of the peak magnitude count as empty.
constexpr double kEmptyBinRelative = 1e-12;

std::vector<double> Grayscale(const ImageTensor& image) {
  std::vector<double> gray(image.height() * image.width());
  for (size_t r = 0; r < image.height(); ++r) {
    for (size_t c = 0; c < image.width(); ++c) {
      double sum = 0.0;
      for (size_t ch = 0; ch < image.channels(); ++ch) sum += image.at(r, c, ch);
      gray[r * image.width() + c] = sum / static_cast<double>(image.channels());
    }
  }
  return gray;
}

// Separable Gaussian with replicated borders.
std::vector<double> GaussianSmooth(const std::vector<double>& in, size_t h, size_t w, int radius, double sigma) {
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& k : kernel) k /= total;

  auto clamp = [](int64_t i, size_t n) { return static_cast<size_t>(std::clamp<int64_t>(i, 0, static_cast<int64_t>(n) - 1)); };
  std::vector<double> tmp(in.size()), out(in.size());
  for (size_t r = 0; r < h; ++r) {
    for (size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * in[r * w + clamp(static_cast<int64_t>(c) + k, w)];
      tmp[r * w + c] = acc;
    }
  }
  for (size_t r = 0; r < h; ++r) {
    for (size_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp[clamp(static_cast<int64_t>(r) + k, h) * w + c];
      out[r * w + c] = acc;
    }
  }
  return out;
}

}  // namespace

ImageTensor::ImageTensor(size_t height, size_t width, size_t channels, float fill)
    : height_(height), width_(width), channels_(channels), pixels_(height * width * channels, fill) {
  if (height == 0 || width == 0 || channels == 0) ThrowValidation("image dimensions must be positive");
  if (!(fill >= 0.0f && fill <= 1.0f)) ThrowValidation("pixel values must lie in [0, 1]");
}

ImageTensor::ImageTensor(size_t height, size_t width, size_t channels, std::vector<float> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0 || channels == 0) ThrowValidation("image dimensions must be positive");
  if (pixels_.size() != height * width * channels) ThrowValidation("pixel buffer size does not match the image shape");
  for (float v : pixels_) {
    if (!(v >= 0.0f && v <= 1.0f)) ThrowValidation("pixel values must lie in [0, 1]");
  }
}

size_t BinaryMask::Ones() const { return static_cast<size_t>(std::count(bits.begin(), bits.end(), uint8_t{1})); }

double BinaryMask::Mean() const {
  return static_cast<double>(Ones()) / static_cast<double>(height * width);
}

std::string_view MixMethodName(MixMethod method) {
  switch (method) {
    case MixMethod::kCutMix:
      return "cutmix";
    case MixMethod::kFMix:
      return "fmix";
    case MixMethod::kSaliencyMix:
      return "saliencymix";
  }
  return "unknown";
}

MixMethod ParseMixMethod(std::string_view name) {
  if (name == "cutmix") return MixMethod::kCutMix;
  if (name == "fmix") return MixMethod::kFMix;
  if (name == "saliencymix") return MixMethod::kSaliencyMix;
  throw Error(ErrorKind::kUsage, "unknown mix method '" + std::string(name) + "' (expected cutmix, fmix or saliencymix)");
}

int64_t RoundHalfEven(double x) {
  const double floor = std::floor(x);
  const double diff = x - floor;
  auto f = static_cast<int64_t>(floor);
  if (diff > 0.5) return f + 1;
  if (diff < 0.5) return f;
  return (f % 2 == 0) ? f : f + 1;
}

double SampleLambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) ThrowValidation("alpha must be a positive finite number");
  return rng.Beta(alpha, alpha);
}

std::pair<int64_t, int64_t> CutSize(size_t h, size_t w, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) ThrowValidation("lambda must lie in [0, 1]");
  const double ratio = std::sqrt(1.0 - lambda);
  return {static_cast<int64_t>(std::round(static_cast<double>(h) * ratio)),
          static_cast<int64_t>(std::round(static_cast<double>(w) * ratio))};
}

Box CutBoxAt(size_t h, size_t w, double lambda, int64_t center_row, int64_t center_col) {
  const auto [cut_h, cut_w] = CutSize(h, w, lambda);
  const int64_t y0 = center_row - cut_h / 2;
  const int64_t x0 = center_col - cut_w / 2;
  const auto H = static_cast<int64_t>(h);
  const auto W = static_cast<int64_t>(w);
  Box box{std::clamp<int64_t>(x0, 0, W), std::clamp<int64_t>(y0, 0, H), std::clamp<int64_t>(x0 + cut_w, 0, W),
          std::clamp<int64_t>(y0 + cut_h, 0, H)};
  return box;
}

Box CutMixBox(size_t h, size_t w, double lambda, Rng& rng) {
  const auto row = static_cast<int64_t>(rng.UniformBelow(h));
  const auto col = static_cast<int64_t>(rng.UniformBelow(w));
  return CutBoxAt(h, w, lambda, row, col);
}

BinaryMask BoxMask(size_t h, size_t w, const Box& box) {
  BinaryMask mask(h, w, 1);
  for (int64_t r = box.y0; r < box.y1; ++r) {
    for (int64_t c = box.x0; c < box.x1; ++c) mask.bits[static_cast<size_t>(r) * w + static_cast<size_t>(c)] = 0;
  }
  return mask;
}

BinaryMask FmixMask(size_t h, size_t w, double lambda, double decay, Rng& rng) {
  if (h == 0 || w == 0) ThrowValidation("mask dimensions must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) ThrowValidation("lambda must lie in [0, 1]");
  if (!(decay > 0.0)) ThrowValidation("fmix decay must be positive");

  const double min_freq = 1.0 / static_cast<double>(std::max(h, w));
  std::vector<std::complex<double>> spectrum(h * w);
  for (size_t r = 0; r < h; ++r) {
    const double fy = detail::FftFrequency(r, h);
    for (size_t c = 0; c < w; ++c) {
      const double fx = detail::FftFrequency(c, w);
      const double f = std::max(std::sqrt(fx * fx + fy * fy), min_freq);
      const double scale = 1.0 / std::pow(f, decay);
      const double re = rng.Normal();
      const double im = rng.Normal();
      spectrum[r * w + c] = {re * scale, im * scale};
    }
  }
  detail::Fft2d(spectrum, h, w, /*inverse=*/true);

  const size_t n = h * w;
  const auto ones = static_cast<size_t>(std::clamp<int64_t>(RoundHalfEven(lambda * static_cast<double>(n)), 0,
                                                            static_cast<int64_t>(n)));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return spectrum[a].real() > spectrum[b].real(); });
  BinaryMask mask(h, w, 0);
  for (size_t k = 0; k < ones; ++k) mask.bits[order[k]] = 1;
  return mask;
}

std::vector<double> SaliencyMap(const ImageTensor& image) {
  const size_t h = image.height();
  const size_t w = image.width();
  if (h == 0 || w == 0) ThrowValidation("saliency needs a non-empty image");
  const std::vector<double> gray = Grayscale(image);

  std::vector<std::complex<double>> spectrum(gray.begin(), gray.end());
  detail::Fft2d(spectrum, h, w, /*inverse=*/false);

  std::vector<double> magnitude(h * w), log_amplitude(h * w);
  double peak = 0.0;
  for (size_t i = 0; i < spectrum.size(); ++i) {
    magnitude[i] = std::abs(spectrum[i]);
    peak = std::max(peak, magnitude[i]);
    log_amplitude[i] = std::log1p(magnitude[i]);
  }
  const double empty_threshold = peak * kEmptyBinRelative;

  // Circular 3x3 mean: the spectrum is periodic.
  std::vector<std::complex<double>> residual(h * w);
  for (size_t r = 0; r < h; ++r) {
    for (size_t c = 0; c < w; ++c) {
      const size_t i = r * w + c;
      if (magnitude[i] <= empty_threshold) continue;
      double local = 0.0;
      for (size_t dr : {h - 1, size_t{0}, size_t{1}}) {
        for (size_t dc : {w - 1, size_t{0}, size_t{1}}) {
          local += log_amplitude[((r + dr) % h) * w + (c + dc) % w];
        }
      }
      const double amplitude = std::exp(log_amplitude[i] - local / 9.0);
      residual[i] = spectrum[i] * (amplitude / magnitude[i]);
    }
  }
  detail::Fft2d(residual, h, w, /*inverse=*/true);

  std::vector<double> energy(h * w);
  for (size_t i = 0; i < energy.size(); ++i) energy[i] = std::norm(residual[i]);
  return GaussianSmooth(energy, h, w, kSaliencySmoothingRadius, kSaliencySmoothingSigma);
}

std::pair<size_t, size_t> SaliencyPeak(const ImageTensor& image) {
  const std::vector<double> map = SaliencyMap(image);
  const size_t best = static_cast<size_t>(std::max_element(map.begin(), map.end()) - map.begin());
  return {best / image.width(), best % image.width()};
}

void ValidateLabel(const std::vector<double>& label) {
  if (label.empty()) ThrowValidation("label vector is empty");
  double sum = 0.0;
  for (double v : label) {
    if (!(v >= 0.0) || !std::isfinite(v)) ThrowValidation("label entries must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) ThrowValidation("label vector sums to " + std::to_string(sum) + ", expected 1");
}

MixResult ApplyMask(const ImageTensor& image_i, const ImageTensor& image_j, const std::vector<double>& label_i,
                    const std::vector<double>& label_j, MixPlan plan) {
  if (!image_i.SameShape(image_j)) ThrowValidation("images to mix must have the same shape");
  if (plan.mask.height != image_i.height() || plan.mask.width != image_i.width()) {
    ThrowValidation("mask shape does not match the images");
  }
  ValidateLabel(label_i);
  ValidateLabel(label_j);
  if (label_i.size() != label_j.size()) ThrowValidation("label vectors cover different class sets");

  const size_t h = image_i.height(), w = image_i.width(), channels = image_i.channels();
  std::vector<float> pixels(h * w * channels);
  for (size_t r = 0; r < h; ++r) {
    for (size_t c = 0; c < w; ++c) {
      const ImageTensor& source = plan.mask.at(r, c) ? image_i : image_j;
      for (size_t ch = 0; ch < channels; ++ch) pixels[(r * w + c) * channels + ch] = source.at(r, c, ch);
    }
  }

  plan.lambda_effective = plan.mask.Mean();
  plan.label_coeffs = {plan.lambda_effective, 1.0 - plan.lambda_effective};
  std::vector<double> label(label_i.size());
  for (size_t k = 0; k < label.size(); ++k) {
    label[k] = plan.label_coeffs.first * label_i[k] + plan.label_coeffs.second * label_j[k];
  }
  return {ImageTensor(h, w, channels, std::move(pixels)), std::move(label), std::move(plan)};
}

MixResult MakeMix(MixMethod method, const ImageTensor& image_i, const ImageTensor& image_j,
                  const std::vector<double>& label_i, const std::vector<double>& label_j, double alpha, Rng& rng,
                  double fmix_decay) {
  if (!image_i.SameShape(image_j)) ThrowValidation("images to mix must have the same shape");
  const size_t h = image_i.height(), w = image_i.width();
  MixPlan plan;
  plan.method = method;
  plan.lambda = SampleLambda(alpha, rng);
  switch (method) {
    case MixMethod::kCutMix:
      plan.box = CutMixBox(h, w, plan.lambda, rng);
      plan.mask = BoxMask(h, w, *plan.box);
      break;
    case MixMethod::kFMix:
      plan.mask = FmixMask(h, w, plan.lambda, fmix_decay, rng);
      break;
    case MixMethod::kSaliencyMix: {
      const auto [row, col] = SaliencyPeak(image_j);
      plan.box = CutBoxAt(h, w, plan.lambda, static_cast<int64_t>(row), static_cast<int64_t>(col));
      plan.mask = BoxMask(h, w, *plan.box);
      break;
    }
  }
  return ApplyMask(image_i, image_j, label_i, label_j, std::move(plan));
}

}  // namespace cas
