#pragma once

#include <stdexcept>
#include <string>

namespace psv {

/// Base class for all errors raised by this library.
class error : public std::runtime_error {
public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad arguments, malformed configuration, violated preconditions.
class validation_error : public error {
public:
  explicit validation_error(const std::string& what) : error(what) {}
};

/// A marching run produced NaN or a nonphysical state.
class divergence_error : public error {
public:
  divergence_error(const std::string& what, long step, int i, int j)
      : error(what), step(step), cell_i(i), cell_j(j) {}
  long step;
  int cell_i;
  int cell_j;
};

/// An estimator could not produce a result (degenerate inputs, failed search).
class estimator_error : public error {
public:
  explicit estimator_error(const std::string& what) : error(what) {}
};

} // namespace psv
