#pragma once

#include <stdexcept>
#include <string>

namespace trotterbound {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands disagree on qubit count or vector length.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A request exceeds the dense or matrix-free size caps.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument (out-of-range time, bad probability, bad builder input).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Iterative refinement ran out of budget before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Norm drift, overlaps above one, or non-physical density matrices.
class NumericalHealthError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace trotterbound
