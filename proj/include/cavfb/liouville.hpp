// Feedback master equation for a single lossy mode: right-hand side,
// fixed-step RK4 integration, analytic propagators, and decay-rate helpers.
//
// Master equation (gamma = bare loss rate, eta = detection efficiency):
//   d rho / dt = eta*gamma * sqrt(n) rho sqrt(n)
//              + (1-eta)*gamma * a rho a^dag
//              - (gamma/2) {n, rho}
// The detected-loss term is the feedback map applied to the loss channel,
// which collapses to sqrt(n) rho sqrt(n). On matrix elements:
//   d rho_nm / dt = gamma*(eta*sqrt(n*m) - (n+m)/2) rho_nm
//                 + (1-eta)*gamma*sqrt((n+1)(m+1)) rho_{n+1,m+1}
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "cavfb/fock.hpp"
#include "cavfb/types.hpp"

namespace cavfb {

struct FeedbackParams {
  double gamma;  // cavity energy decay rate
  double eta;    // detector efficiency in [0, 1]
  FeedbackParams(double gamma_, double eta_) : gamma(gamma_), eta(eta_) {
    if (!(gamma > 0.0)) throw std::invalid_argument("FeedbackParams: gamma must be > 0");
    if (!(eta >= 0.0 && eta <= 1.0))
      throw std::invalid_argument("FeedbackParams: eta must lie in [0, 1]");
  }
};

struct IntegratorConfig {
  double dt;
  double t_final;
  double trace_tolerance = 1e-8;
  // Keep every `sample_stride`-th step in the trajectory (1 = all steps,
  // 0 = endpoints only). The final state is always kept.
  int sample_stride = 1;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("IntegratorConfig: dt must be > 0");
    if (!(t_final >= 0.0))
      throw std::invalid_argument("IntegratorConfig: t_final must be >= 0");
    if (t_final > 0.0 && dt > t_final)
      throw std::invalid_argument("IntegratorConfig: dt exceeds t_final");
    if (!(trace_tolerance > 0.0))
      throw std::invalid_argument("IntegratorConfig: trace_tolerance must be > 0");
    if (sample_stride < 0)
      throw std::invalid_argument("IntegratorConfig: sample_stride must be >= 0");
  }
};

// Dephasing laws with analytic propagators: the feedback-corrected law
// (exponent grows with (sqrt n - sqrt m)^2) and ordinary phase diffusion
// (exponent grows with (n - m)^2).
enum class DiffusionKind { SquareRoot, Standard };

namespace detail {

// Elementwise right-hand side; out may not alias rho.
inline void feedback_rhs(const CMatrix& rho, double gamma, double eta,
                         const std::vector<double>& sqrt_int, CMatrix& out) {
  const int d = static_cast<int>(rho.rows());
  const double loss = (1.0 - eta) * gamma;
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      Complex v = gamma * (eta * sqrt_int[n] * sqrt_int[m] - 0.5 * (n + m)) * rho(n, m);
      if (n + 1 < d && m + 1 < d)
        v += loss * sqrt_int[n + 1] * sqrt_int[m + 1] * rho(n + 1, m + 1);
      out(n, m) = v;
    }
  }
}

inline std::vector<double> sqrt_table(int count) {
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = std::sqrt(double(i));
  return t;
}

// Classic RK4 sweep with preallocated stages. `rhs(x, out)` must be
// time-independent; `on_step(step_index, state)` fires after each step.
template <class RhsFn, class StepFn>
void rk4_evolve(CMatrix& rho, double dt, long n_steps, RhsFn&& rhs,
                StepFn&& on_step) {
  const auto rows = rho.rows(), cols = rho.cols();
  CMatrix k1(rows, cols), k2(rows, cols), k3(rows, cols), k4(rows, cols),
      tmp(rows, cols);
  for (long s = 0; s < n_steps; ++s) {
    rhs(rho, k1);
    tmp = rho + (0.5 * dt) * k1;
    rhs(tmp, k2);
    tmp = rho + (0.5 * dt) * k2;
    rhs(tmp, k3);
    tmp = rho + dt * k3;
    rhs(tmp, k4);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    // The exact flow preserves Hermiticity; restore it against roundoff so
    // sampled states satisfy the DensityMatrix invariant exactly.
    rho = 0.5 * (rho + rho.adjoint().eval());
    on_step(s, rho);
  }
}

inline long step_count(double t_final, double dt) {
  if (t_final <= 0.0) return 0;
  const double n = t_final / dt;
  long steps = static_cast<long>(std::llround(n));
  if (std::abs(n - double(steps)) > 1e-9 * std::max(1.0, n) || steps < 1)
    steps = static_cast<long>(std::ceil(n - 1e-12));
  return steps;
}

}  // namespace detail

// d rho / dt under the feedback master equation.
inline DensityMatrix rhs(const DensityMatrix& rho, const FeedbackParams& p) {
  const int d = rho.dim();
  const auto sq = detail::sqrt_table(d + 1);
  CMatrix out(d, d);
  detail::feedback_rhs(rho.elements(), p.gamma, p.eta, sq, out);
  return DensityMatrix::raw(std::move(out));
}

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  const DensityMatrix& final_state() const { return states.back(); }
};

// Fixed-step RK4 integration of the feedback master equation. The trace is
// monitored every step against cfg.trace_tolerance; the state is never
// renormalized, so trace drift is a reported error rather than hidden.
inline Trajectory integrate(const DensityMatrix& rho0, const FeedbackParams& p,
                            const IntegratorConfig& cfg) {
  cfg.validate();
  const int d = rho0.dim();
  const auto sq = detail::sqrt_table(d + 1);
  const long n_steps = detail::step_count(cfg.t_final, cfg.dt);
  // Last step may be shorter when t_final is not a multiple of dt.
  const double last_dt = (n_steps > 0) ? cfg.t_final - (n_steps - 1) * cfg.dt : 0.0;

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);
  if (n_steps == 0) return traj;

  CMatrix rho = rho0.elements();
  auto rhs_fn = [&](const CMatrix& x, CMatrix& out) {
    detail::feedback_rhs(x, p.gamma, p.eta, sq, out);
  };
  auto check_and_sample = [&](long step, const CMatrix& state, double t) {
    if (!state.allFinite())
      throw NonFiniteError("integrate: non-finite state at t=" + std::to_string(t));
    if (std::abs(state.trace().real() - 1.0) > cfg.trace_tolerance)
      throw TraceDriftError("integrate: trace drift beyond tolerance at t=" +
                            std::to_string(t));
    const bool is_last = (step == n_steps - 1);
    if (is_last || (cfg.sample_stride > 0 && (step + 1) % cfg.sample_stride == 0)) {
      traj.times.push_back(t);
      traj.states.push_back(DensityMatrix::raw(state));
    }
  };

  detail::rk4_evolve(rho, cfg.dt, n_steps - 1, rhs_fn,
                     [&](long s, const CMatrix& state) {
                       check_and_sample(s, state, (s + 1) * cfg.dt);
                     });
  // Final (possibly short) step lands exactly on t_final.
  detail::rk4_evolve(rho, last_dt, 1, rhs_fn, [&](long, const CMatrix& state) {
    check_and_sample(n_steps - 1, state, cfg.t_final);
  });
  return traj;
}

// Closed-form dephasing propagator: multiplies each off-diagonal element by
// exp(-(gamma t / 2) * (sqrt n - sqrt m)^2)   (SquareRoot, perfect feedback)
// exp(-(gamma t / 2) * (n - m)^2)             (Standard phase diffusion)
// Populations are untouched; gamma_t is the dimensionless product gamma*t.
inline DensityMatrix propagate_analytic(const DensityMatrix& rho0,
                                        DiffusionKind kind, double gamma_t) {
  if (gamma_t < 0.0)
    throw std::invalid_argument("propagate_analytic: gamma_t must be >= 0");
  const int d = rho0.dim();
  CMatrix out(d, d);
  for (int n = 0; n < d; ++n) {
    for (int m = 0; m < d; ++m) {
      const double gap = (kind == DiffusionKind::SquareRoot)
                             ? std::sqrt(double(n)) - std::sqrt(double(m))
                             : double(n - m);
      out(n, m) = rho0.elements()(n, m) * std::exp(-0.5 * gamma_t * gap * gap);
    }
  }
  return DensityMatrix::raw(std::move(out));
}

// Closed-form solution of the plain damped cavity (no feedback, eta = 0):
//   rho_nm(t) = sum_k sqrt(C(n+k,k) C(m+k,k)) (1-e^{-gamma t})^k
//               e^{-gamma t (n+m)/2} rho_{n+k,m+k}(0)
// Truncation makes this exact only when the cutoff holds the full support,
// which the guard on rho0 enforces for the use cases here.
inline DensityMatrix damped_cavity_analytic(const DensityMatrix& rho0,
                                            double gamma_t) {
  if (gamma_t < 0.0)
    throw std::invalid_argument("damped_cavity_analytic: gamma_t must be >= 0");
  const int d = rho0.dim();
  const double s = 1.0 - std::exp(-gamma_t);
  CMatrix out = CMatrix::Zero(d, d);
  for (int n = 0; n < d; ++n) {
    for (int m = 0; m < d; ++m) {
      const double damp = std::exp(-0.5 * gamma_t * (n + m));
      Complex acc(0.0, 0.0);
      for (int k = 0; n + k < d && m + k < d; ++k) {
        // ln C(n+k,k) via lgamma keeps large binomials stable.
        const double lc = 0.5 * (std::lgamma(double(n + k + 1)) - std::lgamma(double(k + 1)) -
                                 std::lgamma(double(n + 1)) + std::lgamma(double(m + k + 1)) -
                                 std::lgamma(double(k + 1)) - std::lgamma(double(m + 1)));
        acc += std::exp(lc) * std::pow(s, double(k)) * rho0.elements()(n + k, m + k);
      }
      out(n, m) = damp * acc;
    }
  }
  return DensityMatrix::raw(std::move(out));
}

// Decay rate of the coherence rho_nm under the feedback master equation:
//   rate = gamma * ((n+m)/2 - eta*sqrt(n*m))
inline double offdiag_rate(int n, int m, const FeedbackParams& p) {
  if (n < 0 || m < 0) throw std::invalid_argument("offdiag_rate: negative level");
  return p.gamma * (0.5 * (n + m) - p.eta * std::sqrt(double(n) * double(m)));
}

// (sqrt n - sqrt m)^2 <= |n - m| for all Fock pairs: the feedback-corrected
// dephasing exponent never exceeds the ordinary phase-diffusion exponent.
// Returns {corrected_exponent, standard_exponent}.
inline std::pair<double, double> decay_inequality_check(int n, int m) {
  if (n < 0 || m < 0)
    throw std::invalid_argument("decay_inequality_check: negative level");
  const double gap = std::sqrt(double(n)) - std::sqrt(double(m));
  return {gap * gap, std::abs(double(n - m))};
}

// <a> = sum_n sqrt(n+1) rho_{n+1,n}
inline Complex mean_amplitude(const DensityMatrix& rho) {
  const int d = rho.dim();
  Complex acc(0.0, 0.0);
  for (int n = 0; n + 1 < d; ++n)
    acc += std::sqrt(double(n + 1)) * rho.elements()(n + 1, n);
  return acc;
}

// Semiclassical amplitude decay factors for a coherent state of mean photon
// number nbar under perfect feedback:
//   factorized: exp(-(gamma t / 2) (sqrt(nbar+1) - sqrt(nbar))^2)
//   large_n:    exp(-gamma t / (8 nbar))
struct AmplitudeDecay {
  double factorized;
  double large_n;
};

inline AmplitudeDecay semiclassical_amplitude(double nbar, double gamma_t) {
  if (!(nbar > 0.0))
    throw std::invalid_argument("semiclassical_amplitude: nbar must be > 0");
  if (gamma_t < 0.0)
    throw std::invalid_argument("semiclassical_amplitude: gamma_t must be >= 0");
  const double gap = std::sqrt(nbar + 1.0) - std::sqrt(nbar);
  return {std::exp(-0.5 * gamma_t * gap * gap), std::exp(-gamma_t / (8.0 * nbar))};
}

}  // namespace cavfb
