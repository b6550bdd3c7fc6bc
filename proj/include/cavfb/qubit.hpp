// Polarization qubit encoded in two cavity modes:
//   |psi> = alpha |n>_1 |m>_2 + beta |m>_1 |n>_2,  n != m,
// both modes decaying (and fed back) with the same rate and efficiency.
// Closed-form worst-case fidelity, grid-based numerical minimization, and
// the optimal-encoding search.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "cavfb/fock.hpp"
#include "cavfb/liouville.hpp"
#include "cavfb/parallel.hpp"
#include "cavfb/types.hpp"

namespace cavfb {

struct QubitSpec {
  int n;
  int m;
  Complex alpha;
  Complex beta;

  QubitSpec(int n_, int m_, Complex alpha_, Complex beta_)
      : n(n_), m(m_), alpha(alpha_), beta(beta_) {
    if (n < 0 || m < 0) throw std::invalid_argument("QubitSpec: negative level");
    if (n == m) throw std::invalid_argument("QubitSpec: levels must differ");
    const double norm2 = std::norm(alpha) + std::norm(beta);
    if (std::abs(norm2 - 1.0) > 1e-12)
      throw std::invalid_argument("QubitSpec: |alpha|^2 + |beta|^2 must be 1");
  }
};

struct TwoModeDims {
  int d1;
  int d2;
  int composite() const { return d1 * d2; }
  // Row-major composite index |n1, n2> -> n1*d2 + n2.
  int index(int n1, int n2) const { return n1 * d2 + n2; }
};

struct TwoModeState {
  TwoModeDims dims;
  DensityMatrix rho;
};

// Smallest truncation that holds the qubit: the feedback equation never
// moves population above the initial top level.
inline TwoModeState make_qubit(const QubitSpec& spec) {
  const int d = std::max(spec.n, spec.m) + 1;
  const TwoModeDims dims{d, d};
  CVector psi = CVector::Zero(dims.composite());
  psi(dims.index(spec.n, spec.m)) = spec.alpha;
  psi(dims.index(spec.m, spec.n)) = spec.beta;
  return {dims, DensityMatrix::pure(Ket::normalized(std::move(psi)))};
}

namespace detail {

// Independent feedback channels on each mode; elementwise form of
// (L (x) 1 + 1 (x) L) with the single-mode generator L of liouville.hpp.
inline void two_mode_rhs(const CMatrix& rho, const TwoModeDims& dims,
                         double gamma, double eta,
                         const std::vector<double>& sqrt_int, CMatrix& out) {
  const int d1 = dims.d1, d2 = dims.d2, D = dims.composite();
  const double loss = (1.0 - eta) * gamma;
  for (int j = 0; j < D; ++j) {
    const int m1 = j / d2, m2 = j % d2;
    for (int i = 0; i < D; ++i) {
      const int n1 = i / d2, n2 = i % d2;
      Complex v = gamma *
                  (eta * (sqrt_int[n1] * sqrt_int[m1] + sqrt_int[n2] * sqrt_int[m2]) -
                   0.5 * (n1 + m1 + n2 + m2)) *
                  rho(i, j);
      if (n1 + 1 < d1 && m1 + 1 < d1)
        v += loss * sqrt_int[n1 + 1] * sqrt_int[m1 + 1] * rho(i + d2, j + d2);
      if (n2 + 1 < d2 && m2 + 1 < d2)
        v += loss * sqrt_int[n2 + 1] * sqrt_int[m2 + 1] * rho(i + 1, j + 1);
      out(i, j) = v;
    }
  }
}

}  // namespace detail

// RK4-evolve a two-mode state to dimensionless time gamma_t. dt = 0 picks a
// step of about 1e-3 in gamma*t, which holds the global error far below the
// 1e-8 tolerances used downstream.
inline TwoModeState evolve_two_mode(const TwoModeState& state,
                                    const FeedbackParams& p, double gamma_t,
                                    double dt = 0.0) {
  if (gamma_t < 0.0)
    throw std::invalid_argument("evolve_two_mode: gamma_t must be >= 0");
  if (gamma_t == 0.0) return state;
  const double t_final = gamma_t / p.gamma;
  long n_steps;
  if (dt > 0.0) {
    n_steps = detail::step_count(t_final, dt);
  } else {
    n_steps = std::max<long>(16, std::llround(gamma_t / 1e-3));
  }
  const double h = t_final / double(n_steps);

  const int dmax = std::max(state.dims.d1, state.dims.d2);
  const auto sq = detail::sqrt_table(dmax + 1);
  CMatrix rho = state.rho.elements();
  auto rhs_fn = [&](const CMatrix& x, CMatrix& out) {
    detail::two_mode_rhs(x, state.dims, p.gamma, p.eta, sq, out);
  };
  detail::rk4_evolve(rho, h, n_steps, rhs_fn, [&](long s, const CMatrix& st) {
    if (!st.allFinite())
      throw NonFiniteError("evolve_two_mode: non-finite state");
    if (std::abs(st.trace().real() - 1.0) > 1e-8)
      throw TraceDriftError("evolve_two_mode: trace drift at step " +
                            std::to_string(s));
  });
  return {state.dims, DensityMatrix::raw(std::move(rho))};
}

// Tr(rho_a rho_b); equals survival fidelity <psi|rho_b|psi> when rho_a is the
// pure initial state.
inline double fidelity(const TwoModeState& a, const TwoModeState& b) {
  if (a.dims.d1 != b.dims.d1 || a.dims.d2 != b.dims.d2)
    throw std::invalid_argument("fidelity: dimension mismatch");
  return (a.rho.elements() * b.rho.elements()).trace().real();
}

// Worst-case (over the Bloch sphere) fidelity of the (n, m) encoding after
// dimensionless time gamma_t:
//   F_min = (1/2) [ e^{-(1-eta) gamma t (n+m)}
//                 + e^{-gamma t (n + m - 2 eta sqrt(n m))} ]
// The first term is population survival of the equal-weight superposition,
// the second its coherence survival.
inline double min_fidelity_closed(int n, int m, double eta, double gamma_t) {
  if (n < 0 || m < 0) throw std::invalid_argument("min_fidelity_closed: negative level");
  if (n == m) throw std::invalid_argument("min_fidelity_closed: levels must differ");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("min_fidelity_closed: eta must lie in [0, 1]");
  if (gamma_t < 0.0)
    throw std::invalid_argument("min_fidelity_closed: gamma_t must be >= 0");
  const double pop = std::exp(-(1.0 - eta) * gamma_t * (n + m));
  const double coh =
      std::exp(-gamma_t * (n + m - 2.0 * eta * std::sqrt(double(n) * double(m))));
  return 0.5 * (pop + coh);
}

struct MinFidelityResult {
  double f_min;
  Complex alpha;  // argmin amplitudes
  Complex beta;
};

// Brute-force minimum of the survival fidelity over initial qubit states:
// a |alpha|^2 axis of `grid` points (relative phase 0) plus an 8-point
// relative-phase ring at |alpha|^2 = 1/2. The fidelity depends on the phase
// only through |alpha beta|^2, so the ring is a flatness check rather than a
// search dimension.
inline MinFidelityResult min_fidelity_numeric(int n, int m,
                                              const FeedbackParams& p,
                                              double gamma_t, int grid = 128,
                                              unsigned threads = 1) {
  if (grid < 2) throw std::invalid_argument("min_fidelity_numeric: grid must be >= 2");
  std::vector<std::pair<Complex, Complex>> candidates;
  candidates.reserve(grid + 8);
  for (int i = 0; i < grid; ++i) {
    const double a2 = double(i) / double(grid - 1);
    candidates.emplace_back(Complex(std::sqrt(a2), 0.0),
                            Complex(std::sqrt(1.0 - a2), 0.0));
  }
  const double inv_sqrt2 = std::sqrt(0.5);
  for (int j = 0; j < 8; ++j) {
    const double phi = 2.0 * M_PI * double(j) / 8.0;
    candidates.emplace_back(Complex(inv_sqrt2, 0.0),
                            inv_sqrt2 * Complex(std::cos(phi), std::sin(phi)));
  }

  std::vector<double> fid(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    const TwoModeState q0 =
        make_qubit(QubitSpec(n, m, candidates[i].first, candidates[i].second));
    const TwoModeState qt = evolve_two_mode(q0, p, gamma_t);
    fid[i] = fidelity(q0, qt);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < fid.size(); ++i)
    if (fid[i] < fid[best]) best = i;
  return {fid[best], candidates[best].first, candidates[best].second};
}

struct OptimalQubit {
  int n;
  int m;
  double f_min;
};

// Best (n, m) encoding with 0 <= m < n and n + m <= n_plus_m_max, by the
// closed-form worst-case fidelity. Ties keep the lower-excitation pair.
inline OptimalQubit optimal_qubit(double eta, double gamma_t, int n_plus_m_max) {
  if (n_plus_m_max < 1)
    throw std::invalid_argument("optimal_qubit: n_plus_m_max must be >= 1");
  OptimalQubit best{-1, -1, -1.0};
  for (int total = 1; total <= n_plus_m_max; ++total) {
    for (int m = 0; 2 * m < total; ++m) {
      const int n = total - m;
      const double f = min_fidelity_closed(n, m, eta, gamma_t);
      if (f > best.f_min) best = {n, m, f};
    }
  }
  return best;
}

struct ErrorScaling {
  double exact;       // worst-case fidelity of the (1, 0) encoding
  double linearized;  // 1 - gamma t (1 - eta/2)
};

// Small-time error budget of the single-photon qubit. Valid regime
// gamma_t <= 0.2 (the linearization degrades beyond that).
inline ErrorScaling error_probability_scaling(double eta, double gamma_t) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("error_probability_scaling: eta must lie in [0, 1]");
  if (!(gamma_t >= 0.0 && gamma_t <= 0.2))
    throw std::invalid_argument(
        "error_probability_scaling: valid for 0 <= gamma_t <= 0.2");
  const double exact = 0.5 * (std::exp(-(1.0 - eta) * gamma_t) + std::exp(-gamma_t));
  return {exact, 1.0 - gamma_t * (1.0 - 0.5 * eta)};
}

}  // namespace cavfb
