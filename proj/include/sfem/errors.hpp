// Exception types used across the library.
#ifndef SFEM_ERRORS_HPP
#define SFEM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sfem {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested resource exceeds a hard guard (e.g. icosphere subdivision depth).
struct ResourceLimitError : Error {
  using Error::Error;
};

// Degenerate or invalid geometry (zero-area triangle, point outside the
// tubular neighborhood of the reference sphere, broken mesh topology).
struct GeometryError : Error {
  using Error::Error;
};

// Local chart for the numeric coefficient pipeline could not be built.
struct ChartError : Error {
  using Error::Error;
};

// A linear solve produced non-finite values or a factorization failed.
struct SolverError : Error {
  using Error::Error;
};

// Inconsistent user input (dimension mismatches, bad config values).
struct InputError : Error {
  using Error::Error;
};

// Iterative method exhausted its budget. Carries the last residuals in
// the message so failures are diagnosable.
struct ConvergenceError : Error {
  using Error::Error;
};

// The active-set subproblem is infeasible or its KKT system is singular
// beyond the rank-deficiency the solver is prepared to handle.
struct DegenerateProblemError : Error {
  using Error::Error;
};

} // namespace sfem

#endif
