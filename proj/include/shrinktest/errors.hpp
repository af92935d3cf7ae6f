#pragma once

#include <stdexcept>
#include <string>

namespace shrinktest {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: parameters out of range, malformed config, missing columns.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numeric routine failed to reach its target (quadrature, root finding).
class NumericError : public Error {
 public:
  using Error::Error;
};

// m_0 >= alpha: every observation would be rejected, no finite threshold.
class AlwaysRejectError : public NumericError {
 public:
  using NumericError::NumericError;
};

// m_x stays below alpha over the whole search bracket.
class NoCrossingError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace shrinktest
