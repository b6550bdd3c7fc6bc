// Shared scalar/matrix aliases, error types, and library-wide tolerances.
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cavfb {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// Tolerances used by type invariants (validation factories, runtime guards).
inline constexpr double kHermitianTol = 1e-12;   // max |rho - rho^dag| element
inline constexpr double kTraceTol = 1e-10;       // |Tr rho - 1|
inline constexpr double kKetNormTol = 1e-12;     // | ||psi|| - 1 |
inline constexpr double kTruncationGuard = 1e-10;  // top Fock level population

// Base for runtime numerical failures (CLI maps these to exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Population leaked into the top truncated Fock level beyond the guard.
struct TruncationOverflowError : NumericalError {
  using NumericalError::NumericalError;
};

// Trace left the configured tolerance band during integration.
struct TraceDriftError : NumericalError {
  using NumericalError::NumericalError;
};

// State norm drifted during unitary propagation.
struct NormDriftError : NumericalError {
  using NumericalError::NumericalError;
};

// Per-step jump probability exceeded the first-order scheme's safety bound.
struct StepSizeError : NumericalError {
  using NumericalError::NumericalError;
};

// NaN/Inf appeared in an evolving state.
struct NonFiniteError : NumericalError {
  using NumericalError::NumericalError;
};

// Bad run configuration (CLI maps this to exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cavfb
