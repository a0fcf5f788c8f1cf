#pragma once

#include <stdexcept>
#include <string>

namespace spinkernel {

// Bad input: invalid parameters, mismatched shapes, malformed config.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to deliver a result meeting its contract
// (non-convergence, singular system, divergent bound requested as a number).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinkernel
