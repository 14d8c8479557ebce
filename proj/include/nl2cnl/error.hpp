#pragma once

#include <stdexcept>
#include <string>

namespace nl2cnl {

// Common base so callers can catch everything the toolkit throws with one
// handler.  Concrete error types live next to the module that raises them.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nl2cnl
