// Adiabatic passage that raises every cavity Fock state by one photon: a
// three-level atom (g1, e, g2) crosses the cavity while a classical control
// pulse Omega(t) couples g1-e and the cavity mode g(t) couples e-g2.
//
// Within the manifold {|g1,n>, |e,n>, |g2,n+1>} the resonant rotating-frame
// Hamiltonian is (phase convention fixed so the dark state is real):
//   <e,n|H|g1,n>   = +i Omega(t)
//   <e,n|H|g2,n+1> = -i g(t) sqrt(n+1)
// with zero diagonal. The instantaneous dark state
//   (g sqrt(n+1), 0, Omega) / sqrt(Omega^2 + (n+1) g^2)
// connects |g1,n> (early, g on first) to |g2,n+1> (late, Omega on last), so
// the counterintuitive order — cavity pulse before control pulse — transfers
// n -> n+1 without populating the lossy excited state.
#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "cavfb/fock.hpp"
#include "cavfb/types.hpp"

namespace cavfb {

// Two Gaussian pulses on the crossing window [0, t_cross]:
//   g(t)     = g_max     exp(-((t - t_center_g)     / width)^2)
//   Omega(t) = omega_max exp(-((t - t_center_omega) / width)^2)
// Invariants: both [t_center +- 3 width] windows inside [0, t_cross], and
// the cavity pulse peaks first (counterintuitive order).
struct PulseSchedule {
  double g_max;
  double omega_max;
  double t_center_g;
  double t_center_omega;
  double width;
  double t_cross;

  void validate() const {
    if (!(g_max > 0.0) || !(omega_max > 0.0))
      throw std::invalid_argument("PulseSchedule: peak couplings must be > 0");
    if (!(width > 0.0)) throw std::invalid_argument("PulseSchedule: width must be > 0");
    if (!(t_cross > 0.0))
      throw std::invalid_argument("PulseSchedule: t_cross must be > 0");
    if (!(t_center_g < t_center_omega))
      throw std::invalid_argument(
          "PulseSchedule: cavity pulse must peak before the control pulse");
    for (double c : {t_center_g, t_center_omega})
      if (c - 3.0 * width < 0.0 || c + 3.0 * width > t_cross)
        throw std::invalid_argument(
            "PulseSchedule: [t_center +- 3 width] must lie inside [0, t_cross]");
  }

  // Default geometry: centers at 0.43 and 0.57 of the window, width 0.14 of
  // the window, equal peaks sized so min(g,Omega)*t_cross = pulse_area.
  static PulseSchedule standard(double t_cross, double pulse_area = 100.0) {
    if (!(t_cross > 0.0) || !(pulse_area > 0.0))
      throw std::invalid_argument("PulseSchedule::standard: need positive inputs");
    PulseSchedule s{pulse_area / t_cross, pulse_area / t_cross, 0.43 * t_cross,
                    0.57 * t_cross, 0.14 * t_cross, t_cross};
    s.validate();
    return s;
  }
};

struct PulseValue {
  double g;
  double omega;
};

inline PulseValue pulse_value(const PulseSchedule& s, double t) {
  if (t < -1e-12 || t > s.t_cross * (1.0 + 1e-12))
    throw std::invalid_argument("pulse_value: t outside [0, t_cross]");
  const double xg = (t - s.t_center_g) / s.width;
  const double xo = (t - s.t_center_omega) / s.width;
  return {s.g_max * std::exp(-xg * xg), s.omega_max * std::exp(-xo * xo)};
}

// Manifold Hamiltonian in the ordered basis (|g1,n>, |e,n>, |g2,n+1>).
inline Eigen::Matrix3cd lambda_hamiltonian(const PulseSchedule& s, double t, int n) {
  if (n < 0) throw std::invalid_argument("lambda_hamiltonian: negative photon number");
  const PulseValue pv = pulse_value(s, t);
  const double gn = pv.g * std::sqrt(double(n + 1));
  const Complex i_unit(0.0, 1.0);
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(1, 0) = i_unit * pv.omega;
  h(0, 1) = -i_unit * pv.omega;
  h(1, 2) = -i_unit * gn;
  h(2, 1) = i_unit * gn;
  return h;
}

// Instantaneous zero-eigenvalue eigenstate of the manifold Hamiltonian.
inline Eigen::Vector3cd dark_state(const PulseSchedule& s, double t, int n) {
  if (n < 0) throw std::invalid_argument("dark_state: negative photon number");
  const PulseValue pv = pulse_value(s, t);
  const double gn = pv.g * std::sqrt(double(n + 1));
  const double denom = std::sqrt(gn * gn + pv.omega * pv.omega);
  if (!(denom > 0.0))
    throw std::invalid_argument("dark_state: both pulses vanish, state degenerate");
  Eigen::Vector3cd v;
  v << Complex(gn / denom, 0.0), Complex(0.0, 0.0), Complex(pv.omega / denom, 0.0);
  return v;
}

// Joint atom-field pure state organized by manifold: amplitudes[n] holds the
// components on (|g1,n>, |e,n>, |g2,n+1>) for n = 0 .. d-2. The unpaired
// levels |g2,0> and |g1,d-1> are constants of the motion (the latter only by
// the truncation guard, which keeps it empty).
struct ManifoldState {
  std::vector<Eigen::Vector3cd> amplitudes;
  Complex g2_vacuum{0.0, 0.0};
  Complex g1_top{0.0, 0.0};

  static ManifoldState ground(const Ket& field, double guard = kTruncationGuard) {
    const int d = field.dim();
    if (std::norm(field.amplitudes()(d - 1)) > guard)
      throw TruncationOverflowError(
          "ManifoldState::ground: top field level populated, raise would overflow");
    ManifoldState st;
    st.amplitudes.assign(d - 1, Eigen::Vector3cd::Zero());
    for (int n = 0; n < d - 1; ++n) st.amplitudes[n](0) = field.amplitudes()(n);
    st.g1_top = field.amplitudes()(d - 1);
    return st;
  }

  double norm() const {
    double n2 = std::norm(g2_vacuum) + std::norm(g1_top);
    for (const auto& a : amplitudes) n2 += a.squaredNorm();
    return std::sqrt(n2);
  }

  double excited_population() const {
    double p = 0.0;
    for (const auto& a : amplitudes) p += std::norm(a(1));
    return p;
  }
};

struct CrossingResult {
  DensityMatrix final_field;      // reduced field state after the crossing
  double transfer_fidelity;       // overlap with the one-photon-raised input
  double max_excited_population;  // max over the crossing
  double final_transfer_population;  // weight that ended in the g2 branch
  // Time series, sampled every sample_stride steps plus the endpoint.
  std::vector<double> times;
  std::vector<double> dark_overlap;
  std::vector<double> excited_population;
};

namespace detail {

// One RK4 step of i dpsi/dt = H psi for a single manifold, with the pulse
// pair evaluated at the step start / midpoint / end.
inline void manifold_rk4_step(Eigen::Vector3cd& psi, double h, double gn0,
                              double om0, double gnm, double omm, double gn1,
                              double om1) {
  auto deriv = [](const Eigen::Vector3cd& y, double gn, double om) {
    // -i H y with the convention above is real-coefficient:
    return Eigen::Vector3cd(-om * y(1), om * y(0) - gn * y(2), gn * y(1));
  };
  const Eigen::Vector3cd k1 = deriv(psi, gn0, om0);
  const Eigen::Vector3cd k2 = deriv(psi + (0.5 * h) * k1, gnm, omm);
  const Eigen::Vector3cd k3 = deriv(psi + (0.5 * h) * k2, gnm, omm);
  const Eigen::Vector3cd k4 = deriv(psi + h * k3, gn1, om1);
  psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

// Propagate a cavity field through one atomic crossing. The atom enters in
// g1 and is traced out at the end; the manifolds evolve independently, so
// the unitary is applied once per Fock column and recombined with the input
// matrix elements. dt is advisory: the actual step is t_cross / round(t_cross/dt).
inline CrossingResult simulate_crossing(const DensityMatrix& field,
                                        const PulseSchedule& schedule,
                                        double dt, long sample_stride = 100) {
  schedule.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_crossing: dt must be > 0");
  if (sample_stride < 1)
    throw std::invalid_argument("simulate_crossing: sample_stride must be >= 1");
  const int d = field.dim();
  if (field.top_population() > kTruncationGuard)
    throw TruncationOverflowError(
        "simulate_crossing: top field level populated, raise would overflow");

  const long n_steps = std::max<long>(1, std::llround(schedule.t_cross / dt));
  const double h = schedule.t_cross / double(n_steps);
  const int n_cols = d - 1;  // evolved columns; the top level rides frozen

  std::vector<Eigen::Vector3cd> cols(n_cols);
  std::vector<double> root(n_cols);
  for (int n = 0; n < n_cols; ++n) {
    cols[n] = Eigen::Vector3cd(1.0, 0.0, 0.0);
    root[n] = std::sqrt(double(n + 1));
  }

  std::vector<double> times, dark_overlap, excited_series;
  double max_excited = 0.0;
  const auto diag_weights = field.elements().diagonal();

  auto record = [&](double t) {
    double dark = 0.0, excited = 0.0;
    for (int n = 0; n < n_cols; ++n) {
      const double w = diag_weights(n).real();
      const Eigen::Vector3cd dk = dark_state(schedule, t, n);
      dark += w * std::norm(dk.dot(cols[n]));
      excited += w * std::norm(cols[n](1));
    }
    times.push_back(t);
    dark_overlap.push_back(dark);
    excited_series.push_back(excited);
  };
  record(0.0);

  for (long s = 0; s < n_steps; ++s) {
    const double t0 = double(s) * h;
    const double t1 = (s == n_steps - 1) ? schedule.t_cross : t0 + h;
    const PulseValue p0 = pulse_value(schedule, t0);
    const PulseValue pm = pulse_value(schedule, t0 + 0.5 * h);
    const PulseValue p1 = pulse_value(schedule, t1);
    double excited = 0.0;
    for (int n = 0; n < n_cols; ++n) {
      detail::manifold_rk4_step(cols[n], h, p0.g * root[n], p0.omega,
                                pm.g * root[n], pm.omega, p1.g * root[n],
                                p1.omega);
      excited += diag_weights(n).real() * std::norm(cols[n](1));
    }
    if (excited > max_excited) max_excited = excited;
    if ((s + 1) % sample_stride == 0 || s == n_steps - 1) record(t1);
  }

  for (int n = 0; n < n_cols; ++n)
    if (std::abs(cols[n].norm() - 1.0) > 1e-8)
      throw NormDriftError("simulate_crossing: column norm drift beyond 1e-8");

  // Reduced field: the g1/e branches keep the photon number, the g2 branch
  // carries it up by one; atomic orthogonality kills all cross terms.
  CMatrix out = CMatrix::Zero(d, d);
  const CMatrix& in = field.elements();
  double transferred = 0.0;
  for (int n = 0; n < n_cols; ++n) {
    for (int m = 0; m < n_cols; ++m) {
      const Complex keep = cols[n](0) * std::conj(cols[m](0)) +
                           cols[n](1) * std::conj(cols[m](1));
      out(n, m) += in(n, m) * keep;
      out(n + 1, m + 1) += in(n, m) * cols[n](2) * std::conj(cols[m](2));
    }
    transferred += in(n, n).real() * std::norm(cols[n](2));
    // Frozen-top cross terms (atom stays g1 there).
    out(n, d - 1) += in(n, d - 1) * cols[n](0);
    out(d - 1, n) += in(d - 1, n) * std::conj(cols[n](0));
  }
  out(d - 1, d - 1) += in(d - 1, d - 1);
  out = 0.5 * (out + out.adjoint().eval());

  const DensityMatrix target = feedback_map(field);
  DensityMatrix final_field = DensityMatrix::raw(std::move(out));
  const double transfer_fidelity =
      (target.elements() * final_field.elements()).trace().real();
  return CrossingResult{std::move(final_field), transfer_fidelity,
                        max_excited,            transferred,
                        std::move(times),       std::move(dark_overlap),
                        std::move(excited_series)};
}

// Timescale hierarchy required for the crossing to work: the pulse area must
// dominate 1 (adiabaticity), while photon loss (nbar*gamma) and spontaneous
// emission (gamma_e) must stay slow on the crossing time.
struct AdiabaticityReport {
  static constexpr double kThreshold = 10.0;
  double ratio_pulse;  // min(g_max, omega_max) * t_cross
  double ratio_decay;  // 1 / (t_cross * nbar * gamma)
  double ratio_spont;  // 1 / (t_cross * gamma_e)
  bool pass_pulse;
  bool pass_decay;
  bool pass_spont;
  bool all_pass() const { return pass_pulse && pass_decay && pass_spont; }
};

inline AdiabaticityReport adiabaticity_check(const PulseSchedule& s, double nbar,
                                             double gamma, double gamma_e) {
  s.validate();
  if (nbar < 0.0 || gamma < 0.0 || gamma_e < 0.0)
    throw std::invalid_argument("adiabaticity_check: rates must be >= 0");
  const double inf = std::numeric_limits<double>::infinity();
  AdiabaticityReport r;
  r.ratio_pulse = std::min(s.g_max, s.omega_max) * s.t_cross;
  r.ratio_decay = (nbar * gamma > 0.0) ? 1.0 / (s.t_cross * nbar * gamma) : inf;
  r.ratio_spont = (gamma_e > 0.0) ? 1.0 / (s.t_cross * gamma_e) : inf;
  r.pass_pulse = r.ratio_pulse >= AdiabaticityReport::kThreshold;
  r.pass_decay = r.ratio_decay >= AdiabaticityReport::kThreshold;
  r.pass_spont = r.ratio_spont >= AdiabaticityReport::kThreshold;
  return r;
}

}  // namespace cavfb
