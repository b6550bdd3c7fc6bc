// Shared test utilities: seeded random states and metric helpers.
#pragma once

#include <random>

#include "cavfb/fock.hpp"

namespace testutil {

using cavfb::CMatrix;
using cavfb::Complex;
using cavfb::CVector;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g) {
  return double(g() >> 11) * 0x1.0p-53;
}

inline CVector random_vector(int dim, std::mt19937_64& g) {
  CVector v(dim);
  for (int i = 0; i < dim; ++i)
    v(i) = Complex(2.0 * uniform(g) - 1.0, 2.0 * uniform(g) - 1.0);
  return v;
}

inline cavfb::Ket random_ket(int dim, std::mt19937_64& g) {
  return cavfb::Ket::normalized(random_vector(dim, g));
}

// Full-rank random state via a Gram matrix.
inline cavfb::DensityMatrix random_density(int dim, std::mt19937_64& g) {
  CMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i) a.col(i) = random_vector(dim, g);
  CMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint().eval());
  return cavfb::DensityMatrix::validated(std::move(rho));
}

// Random state whose top `clear_top` levels carry no population (so raising
// maps stay inside the truncation).
inline cavfb::DensityMatrix random_density_clear_top(int dim, int clear_top,
                                                     std::mt19937_64& g) {
  const int live = dim - clear_top;
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int i = 0; i < live; ++i) a.col(i).head(live) = random_vector(live, g);
  CMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint().eval());
  return cavfb::DensityMatrix::validated(std::move(rho));
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace testutil
