#pragma once

#include <stdexcept>
#include <string>

namespace afflabel {

// Malformed input, violated preconditions, mismatched shapes.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A decomposition or statistic could not be computed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace afflabel
