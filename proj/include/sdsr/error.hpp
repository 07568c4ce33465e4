#pragma once

#include <stdexcept>
#include <string>

namespace sdsr {

/// Operands of a binary operation do not have congruent shapes.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, parsed or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver produced a non-finite value.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

private:
  int iteration_;
};

}  // namespace sdsr
