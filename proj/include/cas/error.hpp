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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cas {

enum class ErrorKind {
  kIo,          // file missing, unreadable, unwritable
  kFormat,      // malformed document or binary container
  kValidation,  // well-formed input that violates an invariant
  kUsage,       // bad flags or arguments
};

std::string_view ErrorKindName(ErrorKind kind);

// Every failure raised by the toolkit. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void ThrowIo(const std::string& message) {
  throw Error(ErrorKind::kIo, message);
}
[[noreturn]] inline void ThrowFormat(const std::string& message) {
  throw Error(ErrorKind::kFormat, message);
}
[[noreturn]] inline void ThrowValidation(const std::string& message) {
  throw Error(ErrorKind::kValidation, message);
}

}  // namespace cas
