#ifndef LMR_ERRORS_HPP
#define LMR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lmr {

// Bad input: dimension mismatches, non-finite values, schema violations.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: singular systems, underflow, domain errors.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative solver hit its iteration cap without meeting its tolerance.
struct NonConvergenceError : std::runtime_error {
  explicit NonConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lmr

#endif
