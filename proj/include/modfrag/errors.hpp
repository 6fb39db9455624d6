#pragma once

#include <stdexcept>
#include <string>

namespace modfrag {

/// Input rejected by a precondition or type invariant. The CLI maps this to
/// exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace modfrag
