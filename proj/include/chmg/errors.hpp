#pragma once

#include <stdexcept>
#include <string>

namespace chmg {

/// Invalid run parameters or malformed configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate geometry or inconsistent field/mesh pairing during assembly.
class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization failures and invalid numerical input (zero pivots, non-SPD).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver breakdown or non-convergence.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by MINRES when the preconditioner produced a negative inner product.
class PreconditionerError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace chmg
