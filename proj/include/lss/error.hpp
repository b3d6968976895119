#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lss {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes disagree with the model truncation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A ModelSpec or SimConfig violates one or more structural invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Generator matrix is not a valid (or not an irreducible) CTMC generator.
class GeneratorError : public Error {
 public:
  using Error::Error;
};

/// Euler-Maruyama iterate left the finite region ‖u‖ ≤ 1e12.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t step, double time, long trajectory = -1);

  std::size_t step() const { return step_; }
  double time() const { return time_; }
  /// Index inside an ensemble, or -1 for a single run.
  long trajectory() const { return trajectory_; }

 private:
  std::size_t step_;
  double time_;
  long trajectory_;
};

/// The hypotheses an experiment needs are not met, so there is nothing to test.
class RefusalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration document or command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lss
