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

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cas/error.hpp"

namespace cas {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitFormat = 4,
  kExitValidation = 5,
};

int ExitCodeFor(ErrorKind kind);

// Parses "lo:hi:step" into the inclusive grid lo, lo + step, ..., each value
// rounded to 1e-9. Throws kUsage on a malformed or empty range.
std::vector<double> ParseSweepRange(const std::string& range);

// Runs one cas-toolkit invocation; args excludes the program name. Errors
// are reported on err as a single JSON object
//   {"error": kind, "exit_code": n, "message": str, "stage"?: str}
// and mapped to the ExitCode values.
int RunSubcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Worker cap from CAS_TOOLKIT_THREADS (0 when unset or invalid).
unsigned ThreadCapFromEnv();

}  // namespace cas
