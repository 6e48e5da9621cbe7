// Copyright 2026 the planereg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace planereg {

/// Malformed or inconsistent input data (files, manifests, shapes).
/// Mapped to exit code 2 by the CLI.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure during optimization (NaN/Inf loss and the like).
/// Mapped to exit code 3 by the CLI.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raw rotation output that cannot be repaired into a rotation matrix
/// (zero or parallel 6D columns, zero quaternion).
class DegenerateEncoding : public std::domain_error {
 public:
  explicit DegenerateEncoding(const std::string& what) : std::domain_error(what) {}
};

}  // namespace planereg
