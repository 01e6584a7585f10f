#pragma once

#include <stdexcept>
#include <string>

namespace nlform {

/// Caller-supplied values violate an operation's contract.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A stated precondition does not hold for the given inputs.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computation would exceed its configured budget.
struct ResourceLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative numerical routine failed to reach its tolerance.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The operation does not support this representation or model.
struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writing records or summaries failed.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nlform
