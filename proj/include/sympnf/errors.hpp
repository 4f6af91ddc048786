// errors.hpp : exception types used across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace sympnf {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// mismatched spaces / wrong matrix sizes
struct DimensionError : Error {
  using Error::Error;
};

// wrong number of family members, bad argument counts
struct ArityError : Error {
  using Error::Error;
};

// syntax errors from the expression parser (carries a position)
struct ParseError : Error {
  std::size_t position;
  ParseError(const std::string& msg, std::size_t pos)
      : Error(msg + " (at position " + std::to_string(pos) + ")"),
        position(pos) {}
};

// family fails the Cartan / nondegeneracy conditions
struct NondegeneracyError : Error {
  using Error::Error;
};

// classification disagreed across random draws
struct InstabilityError : Error {
  using Error::Error;
};

// eigenvector pairing or rank decisions became numerically ambiguous
struct NumericalDegeneracyError : Error {
  using Error::Error;
};

// point left the declared domain (carries the exit time when known)
struct DomainEscapeError : Error {
  double exit_time;
  DomainEscapeError(const std::string& msg, double t)
      : Error(msg), exit_time(t) {}
};

// adaptive step size underflowed
struct StiffnessError : Error {
  using Error::Error;
};

// vector field failed the fibration-tangency precheck
struct NotInAlgebraError : Error {
  using Error::Error;
};

// map failed the symplectic / system-preservation probe checks
struct NotSystemPreservingError : Error {
  using Error::Error;
};

// precondition violations (origin not fixed, non-homogeneous moment map, ...)
struct PreconditionError : Error {
  using Error::Error;
};

// point lies outside the declared model domain
struct OutOfDomainError : Error {
  using Error::Error;
};

// traced orbit does not close (separatrix or escape)
struct OpenCycleError : Error {
  double exit_time;
  OpenCycleError(const std::string& msg, double t) : Error(msg), exit_time(t) {}
};

// energy is not a regular value
struct RegularityError : Error {
  using Error::Error;
};

// malformed model / plateau / group specifications
struct SpecError : Error {
  using Error::Error;
};

// periodic-orbit search failed to converge
struct NotFoundError : Error {
  using Error::Error;
};

}  // namespace sympnf
