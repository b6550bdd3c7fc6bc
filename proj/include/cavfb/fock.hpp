// Truncated Fock-space primitives: kets, density matrices, mode operators,
// coherent states, the feedback superoperator, and two-mode embedding.
#pragma once

#include <cmath>
#include <utility>

#include "cavfb/types.hpp"

namespace cavfb {

// Truncation dimension of a single cavity mode (number of retained Fock
// levels |0>..|dim-1>).
struct FockDim {
  int value;
  explicit FockDim(int d) : value(d) {
    if (d < 2) throw std::invalid_argument("FockDim: need at least 2 levels");
  }
};

// Normalized pure state. Construct through the factories so the unit-norm
// invariant always holds.
class Ket {
 public:
  static Ket normalized(CVector amps) {
    if (amps.size() < 2) throw std::invalid_argument("Ket: need dim >= 2");
    if (!amps.allFinite()) throw std::invalid_argument("Ket: non-finite amplitude");
    const double norm = amps.norm();
    if (norm < 1e-14) throw std::invalid_argument("Ket: zero vector");
    return Ket(amps / norm);
  }

  static Ket basis(int n, FockDim dim) {
    if (n < 0 || n >= dim.value)
      throw std::invalid_argument("Ket::basis: level outside truncation");
    CVector v = CVector::Zero(dim.value);
    v(n) = 1.0;
    return Ket(std::move(v));
  }

  const CVector& amplitudes() const { return amps_; }
  int dim() const { return static_cast<int>(amps_.size()); }

 private:
  explicit Ket(CVector v) : amps_(std::move(v)) {}
  CVector amps_;
};

// Density matrix with validated construction (`validated`, `pure`) and a
// trusted fast path (`raw`) for integrator output that is hermitized and
// trace-guarded by the integrator itself.
class DensityMatrix {
 public:
  static DensityMatrix validated(CMatrix m) {
    if (m.rows() != m.cols() || m.rows() < 2)
      throw std::invalid_argument("DensityMatrix: need square matrix, dim >= 2");
    if (!m.allFinite())
      throw std::invalid_argument("DensityMatrix: non-finite element");
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermitianTol)
      throw std::invalid_argument("DensityMatrix: not Hermitian within 1e-12");
    const double tr_err = std::abs(m.trace().real() - 1.0) + std::abs(m.trace().imag());
    if (tr_err > kTraceTol)
      throw std::invalid_argument("DensityMatrix: trace differs from 1 beyond 1e-10");
    // Symmetrize away the sub-tolerance asymmetry so elements() is exactly Hermitian.
    CMatrix h = 0.5 * (m + m.adjoint().eval());
    return DensityMatrix(std::move(h));
  }

  static DensityMatrix pure(const Ket& psi) {
    CMatrix m = psi.amplitudes() * psi.amplitudes().adjoint();
    return DensityMatrix(std::move(m));
  }

  // Caller guarantees Hermiticity/trace (used by integrators and analytic
  // propagators whose output is Hermitian by construction).
  static DensityMatrix raw(CMatrix m) { return DensityMatrix(std::move(m)); }

  const CMatrix& elements() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  double trace_real() const { return m_.trace().real(); }
  // Tr(rho^2); for Hermitian rho this equals the squared Frobenius norm.
  double purity() const { return m_.squaredNorm(); }
  double top_population() const { return m_(dim() - 1, dim() - 1).real(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

// Dense matrices for a, a^dag, n = a^dag a, and sqrt(n) on the truncated space.
struct ModeOps {
  CMatrix a;
  CMatrix a_dag;
  CMatrix n_hat;
  CMatrix sqrt_n;
};

inline ModeOps mode_ops(FockDim dim) {
  const int d = dim.value;
  ModeOps ops;
  ops.a = CMatrix::Zero(d, d);
  for (int n = 1; n < d; ++n) ops.a(n - 1, n) = std::sqrt(double(n));
  ops.a_dag = ops.a.adjoint();
  ops.n_hat = CMatrix::Zero(d, d);
  ops.sqrt_n = CMatrix::Zero(d, d);
  for (int n = 0; n < d; ++n) {
    ops.n_hat(n, n) = double(n);
    ops.sqrt_n(n, n) = std::sqrt(double(n));
  }
  return ops;
}

// Feedback superoperator: the photon number lost to the detector is restored
// by an instantaneous raise, so on matrix elements the map is the index shift
// rho'(n+1, m+1) = rho(n, m) with rho'(0, m) = rho'(n, 0) = 0.
// Requires the top truncated level to be essentially empty, otherwise the
// shift would push real population past the cutoff.
inline DensityMatrix feedback_map(const DensityMatrix& rho,
                                  double guard = kTruncationGuard) {
  const int d = rho.dim();
  if (rho.top_population() > guard)
    throw TruncationOverflowError(
        "feedback_map: top Fock level population exceeds truncation guard");
  CMatrix out = CMatrix::Zero(d, d);
  out.block(1, 1, d - 1, d - 1) = rho.elements().block(0, 0, d - 1, d - 1);
  return DensityMatrix::raw(std::move(out));
}

// Coherent state |alpha> truncated to dim levels and renormalized. The bound
// |alpha|^2 <= dim/2 keeps the discarded Poisson tail negligible (< 1e-10
// at the bound for dim >= 32).
inline Ket coherent_state(Complex alpha, FockDim dim) {
  const double nbar = std::norm(alpha);
  if (nbar > 0.5 * dim.value)
    throw std::invalid_argument(
        "coherent_state: |alpha|^2 exceeds dim/2, truncation would bite");
  CVector v(dim.value);
  // c_n = alpha^n / sqrt(n!) * e^{-|alpha|^2/2}, built by recurrence.
  Complex c = std::exp(Complex(-0.5 * nbar, 0.0));
  v(0) = c;
  for (int n = 1; n < dim.value; ++n) {
    c *= alpha / std::sqrt(double(n));
    v(n) = c;
  }
  return Ket::normalized(std::move(v));
}

// Lift a single-mode operator to mode 1 or mode 2 of a two-mode product
// space with row-major composite index i = n1*d2 + n2.
inline CMatrix tensor_embed(const CMatrix& op, int mode_index, FockDim d1,
                            FockDim d2) {
  if (mode_index != 1 && mode_index != 2)
    throw std::invalid_argument("tensor_embed: mode_index must be 1 or 2");
  const int da = d1.value, db = d2.value;
  const int expect = (mode_index == 1) ? da : db;
  if (op.rows() != expect || op.cols() != expect)
    throw std::invalid_argument("tensor_embed: operator dim mismatch");
  CMatrix out = CMatrix::Zero(da * db, da * db);
  if (mode_index == 1) {
    for (int i = 0; i < da; ++i)
      for (int j = 0; j < da; ++j)
        if (op(i, j) != Complex(0.0, 0.0))
          for (int k = 0; k < db; ++k) out(i * db + k, j * db + k) = op(i, j);
  } else {
    for (int i = 0; i < db; ++i)
      for (int j = 0; j < db; ++j)
        if (op(i, j) != Complex(0.0, 0.0))
          for (int k = 0; k < da; ++k) out(k * db + i, k * db + j) = op(i, j);
  }
  return out;
}

}  // namespace cavfb
