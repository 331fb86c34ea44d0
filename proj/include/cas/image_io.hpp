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

#include <filesystem>
#include <string>

#include "cas/augmentation.hpp"

namespace cas {

// 8-bit PNG (gray, gray+alpha, RGB, RGBA; alpha dropped) or binary PPM/PGM
// (P6/P5, maxval 255), decoded to [0, 1] by /255. Format is chosen by the
// file signature, not the extension.
ImageTensor ReadImage(const std::filesystem::path& path);

// 8-bit PNG; each value is scaled by 255 and rounded half up.
std::string EncodePng(const ImageTensor& image);
void WritePng(const ImageTensor& image, const std::filesystem::path& path);

std::string EncodePpm(const ImageTensor& image);

}  // namespace cas
