#pragma once

#include <stdexcept>
#include <string>

namespace ncflab {

/// Raised when an argument violates an operation's precondition.
struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot reach its stated accuracy.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an internal consistency check fails (a construction that
/// should be impossible by design).
struct consistency_error : std::logic_error {
  using std::logic_error::logic_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw invalid_input(what);
}

}  // namespace ncflab
