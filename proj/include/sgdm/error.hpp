#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sgdm {

/// Precondition violated by a caller-supplied value.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An optimizer trajectory left the finite / bounded region.
class Diverged : public std::runtime_error {
 public:
  Diverged(std::int64_t step, const std::string& what)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

/// Problem generation failed (singular system, minimizer search did not converge, ...).
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Test direction has zero asymptotic variance under the sandwich covariance.
class DegenerateDirection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration could not be resolved.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgdm
