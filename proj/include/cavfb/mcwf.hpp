// Monte-Carlo wavefunction unraveling of the feedback master equation.
//
// Two jump channels: a detected loss immediately followed by the feedback
// raise (net operator sqrt(eta*gamma) * sqrt(n)) and an undetected loss
// (sqrt((1-eta)*gamma) * a). Their C^dag C sum to gamma*n, so the no-jump
// drift is the same with or without feedback.
//
// First-order scheme per step: p_k = dt <psi|C_k^dag C_k|psi>; with
// probability p_k apply C_k and renormalize, otherwise apply
// (1 - dt/2 sum_k C_k^dag C_k) and renormalize.
#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "cavfb/fock.hpp"
#include "cavfb/liouville.hpp"
#include "cavfb/parallel.hpp"
#include "cavfb/types.hpp"

namespace cavfb {

enum class ChannelLabel { FeedbackDetection, UndetectedLoss };

inline const char* channel_name(ChannelLabel label) {
  return label == ChannelLabel::FeedbackDetection ? "feedback_detection"
                                                  : "undetected_loss";
}

// Jump operator with the rate folded in: op = sqrt(rate) * (bare operator).
struct JumpChannel {
  ChannelLabel label;
  CMatrix op;
};

inline std::vector<JumpChannel> jump_channels(const FeedbackParams& p, FockDim dim) {
  const ModeOps ops = mode_ops(dim);
  std::vector<JumpChannel> ch;
  ch.push_back({ChannelLabel::FeedbackDetection,
                std::sqrt(p.eta * p.gamma) * ops.sqrt_n});
  ch.push_back({ChannelLabel::UndetectedLoss,
                std::sqrt((1.0 - p.eta) * p.gamma) * ops.a});
  return ch;
}

struct TrajectoryConfig {
  int n_traj;
  std::uint64_t master_seed;
  double dt;
  double t_final;
  std::vector<double> sample_times;  // sorted, within [0, t_final]

  void validate() const {
    if (n_traj < 1) throw std::invalid_argument("TrajectoryConfig: n_traj must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("TrajectoryConfig: dt must be > 0");
    if (!(t_final > 0.0))
      throw std::invalid_argument("TrajectoryConfig: t_final must be > 0");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
      const double t = sample_times[i];
      if (t < -1e-12 || t > t_final * (1.0 + 1e-12))
        throw std::invalid_argument("TrajectoryConfig: sample time outside [0, t_final]");
      if (i > 0 && t < sample_times[i - 1])
        throw std::invalid_argument("TrajectoryConfig: sample times must be sorted");
    }
  }
};

struct JumpEvent {
  double time;  // end of the step in which the jump fired
  ChannelLabel channel;
};

struct TrajectoryRecord {
  std::vector<JumpEvent> jumps;
  std::vector<Ket> samples;  // states at the configured sample times
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent, platform-stable stream per (master_seed, trajectory index).
inline std::mt19937_64 trajectory_rng(std::uint64_t master_seed,
                                      std::uint64_t traj_index) {
  const std::uint64_t mixed =
      splitmix64(splitmix64(master_seed) ^ (traj_index + 0x9E3779B97F4A7C15ull));
  return std::mt19937_64(mixed);
}

// Uniform in [0, 1) from the top 53 bits; avoids distribution objects whose
// draw sequence is implementation-defined.
inline double uniform01(std::mt19937_64& gen) {
  return double(gen() >> 11) * 0x1.0p-53;
}

// Precomputed per-channel pieces. When C^dag C is numerically diagonal (true
// for both standard channels) probabilities and drift are O(dim) per step.
struct ChannelWork {
  const CMatrix* op;
  RVector cc_diag;
  CMatrix cc;
  bool diagonal;
};

inline std::vector<ChannelWork> prepare_channels(
    const std::vector<JumpChannel>& channels) {
  std::vector<ChannelWork> work;
  work.reserve(channels.size());
  for (const auto& ch : channels) {
    ChannelWork w;
    w.op = &ch.op;
    w.cc = ch.op.adjoint() * ch.op;
    const double scale = 1.0 + w.cc.cwiseAbs().maxCoeff();
    CMatrix off = w.cc;
    off.diagonal().setZero();
    w.diagonal = off.cwiseAbs().maxCoeff() <= 1e-14 * scale;
    w.cc_diag = w.cc.diagonal().real();
    work.push_back(std::move(w));
  }
  return work;
}

}  // namespace detail

// Guard on the first-order scheme: total per-step jump probability may not
// exceed this, otherwise dt is too coarse for the state being evolved.
inline constexpr double kMaxStepJumpProbability = 0.1;

inline TrajectoryRecord evolve_trajectory(const Ket& psi0,
                                          const std::vector<JumpChannel>& channels,
                                          const TrajectoryConfig& cfg,
                                          std::uint64_t traj_index) {
  cfg.validate();
  if (channels.empty())
    throw std::invalid_argument("evolve_trajectory: no jump channels");
  const int d = psi0.dim();
  for (const auto& ch : channels)
    if (ch.op.rows() != d || ch.op.cols() != d)
      throw std::invalid_argument("evolve_trajectory: channel dim mismatch");

  const auto work = detail::prepare_channels(channels);
  const bool all_diag = [&] {
    for (const auto& w : work)
      if (!w.diagonal) return false;
    return true;
  }();
  RVector total_cc_diag = RVector::Zero(d);
  CMatrix total_cc = CMatrix::Zero(d, d);
  for (const auto& w : work) {
    total_cc_diag += w.cc_diag;
    total_cc += w.cc;
  }

  const long n_steps = detail::step_count(cfg.t_final, cfg.dt);
  // Map sample times to step boundaries (nearest index).
  std::vector<long> sample_idx(cfg.sample_times.size());
  for (std::size_t j = 0; j < cfg.sample_times.size(); ++j) {
    long idx = std::llround(cfg.sample_times[j] / cfg.dt);
    if (idx < 0) idx = 0;
    if (idx > n_steps) idx = n_steps;
    sample_idx[j] = idx;
  }

  auto gen = detail::trajectory_rng(cfg.master_seed, traj_index);
  CVector psi = psi0.amplitudes();
  CVector scratch(d);
  TrajectoryRecord rec;
  std::size_t next_sample = 0;
  auto take_samples = [&](long step) {
    while (next_sample < sample_idx.size() && sample_idx[next_sample] == step) {
      rec.samples.push_back(Ket::normalized(psi));
      ++next_sample;
    }
  };
  take_samples(0);

  std::vector<double> probs(channels.size());
  for (long s = 0; s < n_steps; ++s) {
    const bool last = (s == n_steps - 1);
    const double h = last ? cfg.t_final - (n_steps - 1) * cfg.dt : cfg.dt;
    double p_total = 0.0;
    for (std::size_t k = 0; k < work.size(); ++k) {
      double expect;
      if (work[k].diagonal) {
        expect = 0.0;
        for (int i = 0; i < d; ++i)
          expect += work[k].cc_diag(i) * std::norm(psi(i));
      } else {
        scratch.noalias() = work[k].cc * psi;
        expect = psi.dot(scratch).real();
      }
      probs[k] = h * expect;
      p_total += probs[k];
    }
    if (p_total > kMaxStepJumpProbability)
      throw StepSizeError(
          "evolve_trajectory: per-step jump probability exceeds 0.1; reduce dt");

    const double u = detail::uniform01(gen);
    if (u < p_total) {
      // Jump: pick the channel by cumulative probability.
      double acc = 0.0;
      std::size_t pick = channels.size() - 1;
      for (std::size_t k = 0; k < channels.size(); ++k) {
        acc += probs[k];
        if (u < acc) {
          pick = k;
          break;
        }
      }
      scratch.noalias() = (*work[pick].op) * psi;
      const double nrm = scratch.norm();
      if (nrm < 1e-150)
        throw NumericalError("evolve_trajectory: jump onto null state");
      psi = scratch / nrm;
      rec.jumps.push_back({last ? cfg.t_final : (s + 1) * cfg.dt,
                           channels[pick].label});
    } else {
      // No-jump drift, then renormalize.
      if (all_diag) {
        for (int i = 0; i < d; ++i) psi(i) *= 1.0 - 0.5 * h * total_cc_diag(i);
      } else {
        psi -= (0.5 * h) * (total_cc * psi).eval();
      }
      psi /= psi.norm();
    }
    if (!psi.allFinite())
      throw NonFiniteError("evolve_trajectory: non-finite state");
    take_samples(s + 1);
  }
  return rec;
}

struct EnsembleResult {
  std::vector<double> times;           // step-aligned sample times
  std::vector<DensityMatrix> states;   // ensemble-averaged states
  std::vector<RVector> diag_stderr;    // standard error of each population
  std::vector<double> nbar_mean;
  std::vector<double> nbar_stderr;
  std::vector<std::uint64_t> jump_histogram;  // [k] = trajectories with k jumps
  int n_traj = 0;
};

// Trajectories are reduced in fixed chunks accumulated in index order, so the
// ensemble is bit-identical for any worker count.
inline constexpr int kEnsembleChunk = 100;

inline EnsembleResult ensemble_density(const Ket& psi0, const FeedbackParams& p,
                                       const TrajectoryConfig& cfg,
                                       unsigned threads = 0) {
  cfg.validate();
  const int d = psi0.dim();
  const auto channels = jump_channels(p, FockDim(d));
  const long n_steps = detail::step_count(cfg.t_final, cfg.dt);
  const std::size_t n_samples = cfg.sample_times.size();

  struct ChunkPartial {
    std::vector<CMatrix> sum_rho;
    std::vector<RVector> sum_diag, sum_diag2;
    std::vector<double> sum_nbar, sum_nbar2;
    std::vector<std::uint64_t> hist;
  };
  const int n_chunks = (cfg.n_traj + kEnsembleChunk - 1) / kEnsembleChunk;
  std::vector<ChunkPartial> partials(n_chunks);

  parallel_for(n_chunks, threads, [&](std::size_t c) {
    ChunkPartial part;
    part.sum_rho.assign(n_samples, CMatrix::Zero(d, d));
    part.sum_diag.assign(n_samples, RVector::Zero(d));
    part.sum_diag2.assign(n_samples, RVector::Zero(d));
    part.sum_nbar.assign(n_samples, 0.0);
    part.sum_nbar2.assign(n_samples, 0.0);
    const int lo = static_cast<int>(c) * kEnsembleChunk;
    const int hi = std::min(cfg.n_traj, lo + kEnsembleChunk);
    for (int t = lo; t < hi; ++t) {
      const TrajectoryRecord rec = evolve_trajectory(psi0, channels, cfg, t);
      for (std::size_t j = 0; j < n_samples; ++j) {
        const CVector& psi = rec.samples[j].amplitudes();
        part.sum_rho[j].noalias() += psi * psi.adjoint();
        double nbar = 0.0;
        for (int i = 0; i < d; ++i) {
          const double pop = std::norm(psi(i));
          part.sum_diag[j](i) += pop;
          part.sum_diag2[j](i) += pop * pop;
          nbar += double(i) * pop;
        }
        part.sum_nbar[j] += nbar;
        part.sum_nbar2[j] += nbar * nbar;
      }
      const std::size_t k = rec.jumps.size();
      if (part.hist.size() <= k) part.hist.resize(k + 1, 0);
      ++part.hist[k];
    }
    partials[c] = std::move(part);
  });

  // Sequential merge in chunk order.
  EnsembleResult out;
  out.n_traj = cfg.n_traj;
  std::vector<CMatrix> sum_rho(n_samples, CMatrix::Zero(d, d));
  std::vector<RVector> sum_diag(n_samples, RVector::Zero(d));
  std::vector<RVector> sum_diag2(n_samples, RVector::Zero(d));
  std::vector<double> sum_nbar(n_samples, 0.0), sum_nbar2(n_samples, 0.0);
  for (const auto& part : partials) {
    for (std::size_t j = 0; j < n_samples; ++j) {
      sum_rho[j] += part.sum_rho[j];
      sum_diag[j] += part.sum_diag[j];
      sum_diag2[j] += part.sum_diag2[j];
      sum_nbar[j] += part.sum_nbar[j];
      sum_nbar2[j] += part.sum_nbar2[j];
    }
    if (part.hist.size() > out.jump_histogram.size())
      out.jump_histogram.resize(part.hist.size(), 0);
    for (std::size_t k = 0; k < part.hist.size(); ++k)
      out.jump_histogram[k] += part.hist[k];
  }

  const double n = double(cfg.n_traj);
  auto stderr_of = [n](double sum, double sum2) {
    if (n < 2) return 0.0;
    const double var = std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0));
    return std::sqrt(var / n);
  };
  for (std::size_t j = 0; j < n_samples; ++j) {
    const long idx = std::min<long>(n_steps, std::llround(cfg.sample_times[j] / cfg.dt));
    out.times.push_back(idx >= n_steps ? cfg.t_final : idx * cfg.dt);
    CMatrix mean = sum_rho[j] / n;
    mean = 0.5 * (mean + mean.adjoint().eval());
    out.states.push_back(DensityMatrix::raw(std::move(mean)));
    RVector se(d);
    for (int i = 0; i < d; ++i) se(i) = stderr_of(sum_diag[j](i), sum_diag2[j](i));
    out.diag_stderr.push_back(std::move(se));
    out.nbar_mean.push_back(sum_nbar[j] / n);
    out.nbar_stderr.push_back(stderr_of(sum_nbar[j], sum_nbar2[j]));
  }
  return out;
}

}  // namespace cavfb
