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

#include "cas/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <vector>

#include "cas/error.hpp"
#include "cas/file_util.hpp"

namespace cas {

namespace {

uint8_t ToByte(float v) { return static_cast<uint8_t>(std::floor(static_cast<double>(v) * 255.0 + 0.5)); }

ImageTensor DecodePng(std::string_view bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    ThrowFormat(std::string("PNG: ") + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const size_t channels = color ? 3 : 1;
  std::vector<uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    ThrowFormat("PNG: " + message);
  }
  std::vector<float> pixels(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) pixels[i] = raw[i] / 255.0f;
  return ImageTensor(image.height, image.width, channels, std::move(pixels));
}

// Skips whitespace and '#' comments, then parses one decimal header field.
size_t PpmHeaderField(std::string_view bytes, size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  size_t value = 0;
  size_t digits = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + static_cast<size_t>(bytes[pos] - '0');
    ++pos;
    if (++digits > 9) ThrowFormat("PPM: header value too large");
  }
  if (digits == 0) ThrowFormat("PPM: malformed header");
  return value;
}

ImageTensor DecodePpm(std::string_view bytes) {
  const size_t channels = bytes[1] == '6' ? 3 : 1;
  size_t pos = 2;
  const size_t width = PpmHeaderField(bytes, pos);
  const size_t height = PpmHeaderField(bytes, pos);
  const size_t maxval = PpmHeaderField(bytes, pos);
  if (maxval != 255) ThrowFormat("PPM: only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) ThrowFormat("PPM: malformed header");
  ++pos;
  const size_t count = width * height * channels;
  if (bytes.size() - pos < count) ThrowFormat("PPM: truncated pixel data");
  std::vector<float> pixels(count);
  for (size_t i = 0; i < count; ++i) pixels[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0f;
  return ImageTensor(height, width, channels, std::move(pixels));
}

}  // namespace

ImageTensor ReadImage(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  try {
    if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
      return DecodePng(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5')) return DecodePpm(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
  ThrowFormat(path.string() + ": not a PNG or binary PPM/PGM image");
}

std::string EncodePng(const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) ThrowValidation("PNG output supports 1 or 3 channels");
  std::vector<uint8_t> raw(image.pixels().size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = ToByte(image.pixels()[i]);

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    ThrowIo(std::string("PNG: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    ThrowIo(std::string("PNG: ") + png.message);
  }
  out.resize(size);
  return out;
}

void WritePng(const ImageTensor& image, const std::filesystem::path& path) { WriteFileAtomic(path, EncodePng(image)); }

std::string EncodePpm(const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) ThrowValidation("PPM output supports 1 or 3 channels");
  std::string out = (image.channels() == 3 ? "P6\n" : "P5\n") + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n255\n";
  for (float v : image.pixels()) out.push_back(static_cast<char>(ToByte(v)));
  return out;
}

}  // namespace cas
