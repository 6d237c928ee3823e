#pragma once

#include <stdexcept>
#include <string>

namespace tsdeconv {

/// Shape or extent mismatch between tensors that must agree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated input file (dataset, checkpoint, feature bundle).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value produced where a finite result is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tsdeconv
