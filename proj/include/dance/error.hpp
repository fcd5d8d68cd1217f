/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dance {

/// Invalid shapes, widths or hyper-parameters supplied by the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its contract (non-scalar loss,
/// non-square cost matrix, empty label vector, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised from a training loop. Carries the phase name and the iteration
/// at which the problem was detected.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::string phase, std::size_t iteration, const std::string& what)
      : std::runtime_error(phase + " iteration " + std::to_string(iteration) + ": " + what),
        phase_(std::move(phase)),
        iteration_(iteration) {}

  const std::string& phase() const noexcept { return phase_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::string phase_;
  std::size_t iteration_;
};

/// Gradient contained NaN/Inf. Thrown by the optimizer, rewrapped as a
/// TrainingError by the loop that owns the phase/iteration context.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files (CSV cells, tensor containers, config lines).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dance
