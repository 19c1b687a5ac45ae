#pragma once

#include <stdexcept>
#include <string>

namespace iongrid {

// Precondition / usage violations: invalid arguments, malformed config,
// lattices too small, out-of-range indices. The CLI maps these to exit code 2.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Species-name lookup failure, kept distinct from other domain errors so
// callers can list the known names.
class UnknownSpeciesError : public DomainError {
 public:
  explicit UnknownSpeciesError(const std::string& msg) : DomainError(msg) {}
};

// Numeric failures: instability (non-positive eigenvalue, radicand <= 0),
// solver non-convergence, divergent sums, out-of-range thermal arguments.
// The CLI maps these to exit code 1.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace iongrid
