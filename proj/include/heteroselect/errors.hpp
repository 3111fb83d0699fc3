#pragma once

#include <stdexcept>
#include <string>

namespace heteroselect {

/// Malformed arguments: wrong lengths, non power-of-two sizes, bad parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every model was filtered out of the collection; n is too small for the
/// requested (gamma, theta, epsilon, delta).
class EmptyCollection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A per-block variance estimate fell below the floor. Under the Gaussian
/// model this happens with probability zero, so it signals malformed data.
class DegenerateVariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace heteroselect
