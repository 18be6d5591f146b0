#pragma once

#include <stdexcept>
#include <string>

namespace minifunc {

/// Malformed input data (files, vectors that leave the simplex, bad labels).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter combinations that violate a documented precondition.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values, solver breakdown, infeasible programs.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace minifunc
