#pragma once

#include <stdexcept>
#include <string>

namespace stochfield {

/// Invalid user-supplied parameters (lattice shape, config values, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN/Inf, singular kernels, positivity loss and similar runtime failures.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A kernel whose real part is too small to define a normalizable density.
class DegenerateKernelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A quantity that must be real came out with a significant imaginary part.
class ConventionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace stochfield
