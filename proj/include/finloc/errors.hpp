#pragma once

#include <stdexcept>
#include <string>

namespace finloc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A value outside its documented domain (non-finite input, negative
// probability, and the like).
struct InvalidInputError : Error {
  using Error::Error;
};

// A box whose width or height collapsed to zero or below.
struct DegenerateBoxError : Error {
  using Error::Error;
};

// Mismatched tensor or container dimensions.
struct ShapeError : Error {
  using Error::Error;
};

// An index referring outside the container it is paired with.
struct IndexError : Error {
  using Error::Error;
};

// A rejected configuration value or key.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed textual input (CSV, JSON).
struct ParseError : Error {
  using Error::Error;
};

// Filesystem-level failure.
struct IoError : Error {
  using Error::Error;
};

// Training produced a non-finite loss or an unusable geometry; carries the
// step where the run broke down.
struct DivergenceError : Error {
  DivergenceError(const std::string& message, int step_in, double loss_in)
      : Error(message), step(step_in), loss(loss_in) {}

  int step = 0;
  double loss = 0.0;
};

}  // namespace finloc
