#pragma once

#include <stdexcept>
#include <string>

namespace vgnav {

/// Cholesky factorization failed even after the maximum diagonal jitter.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training data cannot support a fit (e.g. every input identical).
class DegenerateData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid user configuration: unknown class labels, out-of-range thresholds,
/// missing files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vgnav
