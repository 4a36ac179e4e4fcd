// Copyright 2026 The lanekeep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LANEKEEP_ERRORS_HPP_
#define LANEKEEP_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lanekeep {

// Precondition violations on arguments (ranges, sizes, unsupported values).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// G1 clothoid root-find did not converge.
class FittingError : public std::runtime_error {
 public:
  FittingError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Segment chain has a gap or kink at `junction` (index of the later segment).
class ContinuityError : public std::runtime_error {
 public:
  ContinuityError(const std::string& what, std::size_t junction)
      : std::runtime_error(what), junction_(junction) {}
  std::size_t junction() const { return junction_; }

 private:
  std::size_t junction_;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Controller could not produce a valid command (no lane reference, QP cap).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lanekeep

#endif  // LANEKEEP_ERRORS_HPP_
