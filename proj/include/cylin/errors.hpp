#pragma once

#include <stdexcept>
#include <string>

namespace cylin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or element counts disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf was produced, or a numerical routine could not proceed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Configuration, manifest or checkpoint contents are inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cylin
