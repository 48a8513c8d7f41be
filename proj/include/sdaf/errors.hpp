#pragma once

#include <stdexcept>
#include <string>

namespace sdaf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration values (bad n, alpha out of range, mu <= 2, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Field shape does not match the domain or another field.
struct ShapeError : Error {
  using Error::Error;
};

// Geometric preconditions violated (outside tubular neighborhood,
// cut-locus pairs, non-tangent inputs, maps too far apart).
struct GeometryError : Error {
  using Error::Error;
};

// Iterative method failed to reach its tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

// Corrupt or incompatible on-disk data.
struct ArchiveError : Error {
  using Error::Error;
};

}  // namespace sdaf
