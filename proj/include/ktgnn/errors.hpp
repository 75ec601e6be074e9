#pragma once

#include <stdexcept>
#include <string>

namespace ktgnn {

/// Malformed input: bad ids, dimension mismatches, unparsable files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss or gradient went non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or API misuse (bad shapes, out-of-range arguments).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ktgnn
