#pragma once

#include <stdexcept>
#include <string>

namespace fsml {

// Bad usage, bad config, bad input files. CLI exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure at runtime: conditioning, non-finite values. CLI exit code 1.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fsml
