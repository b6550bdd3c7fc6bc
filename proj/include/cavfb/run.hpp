// Config-driven run engine shared by the CLI and the tests: JSON config
// parsing with strict key checking, an effective-config echo (defaults
// materialized) that parses back to the identical RunConfig, and scenario
// drivers producing deterministic CSV tables plus a JSON metadata block.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavfb/fock.hpp"
#include "cavfb/liouville.hpp"
#include "cavfb/mcwf.hpp"
#include "cavfb/parallel.hpp"
#include "cavfb/qubit.hpp"
#include "cavfb/stirap.hpp"
#include "cavfb/types.hpp"

namespace cavfb {

using nlohmann::json;

struct InitialConfig {
  std::string kind = "fock";  // fock | coherent | qubit
  int n = 1;                  // fock level
  Complex alpha{1.0, 0.0};    // coherent amplitude
  int qubit_n = 1;
  int qubit_m = 0;
  Complex qubit_alpha{std::sqrt(0.5), 0.0};
  Complex qubit_beta{std::sqrt(0.5), 0.0};
  bool operator==(const InitialConfig&) const = default;
};

struct TrajConfig {
  int n_traj = 1000;
  std::uint64_t master_seed = 1;
  bool operator==(const TrajConfig&) const = default;
};

struct StirapConfig {
  double t_cross = 1.0;
  double pulse_area = 100.0;  // sizes the standard schedule when geometry is absent
  double g_max = 0.0;         // 0 = take from the standard schedule
  double omega_max = 0.0;
  double t_center_g = 0.0;
  double t_center_omega = 0.0;
  double width = 0.0;
  double nbar = -1.0;  // adiabaticity photon number; < 0 = derive from the field
  double gamma_e = 0.0;
  bool operator==(const StirapConfig&) const = default;
};

struct RunConfig {
  std::string scenario;
  int dim = 16;
  double gamma = 1.0;
  std::vector<double> eta_list{1.0};
  double t_final = 1.0;
  double dt = 1e-3;
  int sample_points = 21;
  int grid = 128;        // qubit-fidelity minimization resolution
  int n_plus_m_max = 7;  // qubit-optimal search bound
  InitialConfig initial;
  TrajConfig traj;
  StirapConfig stirap;
  std::string out;
  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline void check_keys(const json& j, const char* ctx,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(ctx) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError(std::string(ctx) + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get_field(const json& j, const char* ctx, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(ctx) + ": bad value for '" + key + "'");
  }
}

inline Complex get_complex(const json& j, const char* ctx, const char* key,
                           Complex fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Complex(v[0].get<double>(), v[1].get<double>());
  throw ConfigError(std::string(ctx) + ": '" + key +
                    "' must be a number or [re, im]");
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

inline bool scenario_known(const std::string& s) {
  static const char* names[] = {"evolve",       "trajectories", "qubit-fidelity",
                                "qubit-optimal", "stirap",       "sweep"};
  for (const char* n : names)
    if (s == n) return true;
  return false;
}

inline RunConfig parse_config(const json& j) {
  detail::check_keys(j, "config",
                     {"scenario", "dim", "gamma", "eta", "eta_list", "t_final",
                      "dt", "sample_points", "grid", "n_plus_m_max", "initial",
                      "traj", "stirap", "out"});
  RunConfig cfg;
  if (!j.contains("scenario")) throw ConfigError("config: 'scenario' is required");
  cfg.scenario = detail::get_field<std::string>(j, "config", "scenario", "");
  if (!scenario_known(cfg.scenario))
    throw ConfigError("config: unknown scenario '" + cfg.scenario + "'");
  cfg.dim = detail::get_field(j, "config", "dim", cfg.dim);
  cfg.gamma = detail::get_field(j, "config", "gamma", cfg.gamma);
  if (j.contains("eta") && j.contains("eta_list"))
    throw ConfigError("config: give either 'eta' or 'eta_list', not both");
  if (j.contains("eta"))
    cfg.eta_list = {detail::get_field(j, "config", "eta", 1.0)};
  else if (j.contains("eta_list"))
    cfg.eta_list = detail::get_field(j, "config", "eta_list", cfg.eta_list);
  cfg.t_final = detail::get_field(j, "config", "t_final", cfg.t_final);
  cfg.dt = detail::get_field(j, "config", "dt", cfg.dt);
  cfg.sample_points = detail::get_field(j, "config", "sample_points", cfg.sample_points);
  cfg.grid = detail::get_field(j, "config", "grid", cfg.grid);
  cfg.n_plus_m_max = detail::get_field(j, "config", "n_plus_m_max", cfg.n_plus_m_max);
  cfg.out = detail::get_field<std::string>(j, "config", "out", cfg.out);

  if (j.contains("initial")) {
    const json& ji = j.at("initial");
    detail::check_keys(ji, "initial", {"kind", "n", "alpha", "qubit"});
    cfg.initial.kind = detail::get_field<std::string>(ji, "initial", "kind", "fock");
    cfg.initial.n = detail::get_field(ji, "initial", "n", cfg.initial.n);
    cfg.initial.alpha = detail::get_complex(ji, "initial", "alpha", cfg.initial.alpha);
    if (ji.contains("qubit")) {
      const json& jq = ji.at("qubit");
      detail::check_keys(jq, "initial.qubit",
                         {"n", "m", "alpha_re", "alpha_im", "beta_re", "beta_im"});
      cfg.initial.qubit_n = detail::get_field(jq, "initial.qubit", "n", cfg.initial.qubit_n);
      cfg.initial.qubit_m = detail::get_field(jq, "initial.qubit", "m", cfg.initial.qubit_m);
      cfg.initial.qubit_alpha =
          Complex(detail::get_field(jq, "initial.qubit", "alpha_re",
                                    cfg.initial.qubit_alpha.real()),
                  detail::get_field(jq, "initial.qubit", "alpha_im",
                                    cfg.initial.qubit_alpha.imag()));
      cfg.initial.qubit_beta =
          Complex(detail::get_field(jq, "initial.qubit", "beta_re",
                                    cfg.initial.qubit_beta.real()),
                  detail::get_field(jq, "initial.qubit", "beta_im",
                                    cfg.initial.qubit_beta.imag()));
    }
  }
  if (j.contains("traj")) {
    const json& jt = j.at("traj");
    detail::check_keys(jt, "traj", {"n_traj", "master_seed"});
    cfg.traj.n_traj = detail::get_field(jt, "traj", "n_traj", cfg.traj.n_traj);
    cfg.traj.master_seed =
        detail::get_field(jt, "traj", "master_seed", cfg.traj.master_seed);
  }
  if (j.contains("stirap")) {
    const json& js = j.at("stirap");
    detail::check_keys(js, "stirap",
                       {"t_cross", "pulse_area", "g_max", "omega_max", "t_center_g",
                        "t_center_omega", "width", "nbar", "gamma_e"});
    StirapConfig& s = cfg.stirap;
    s.t_cross = detail::get_field(js, "stirap", "t_cross", s.t_cross);
    s.pulse_area = detail::get_field(js, "stirap", "pulse_area", s.pulse_area);
    s.g_max = detail::get_field(js, "stirap", "g_max", s.g_max);
    s.omega_max = detail::get_field(js, "stirap", "omega_max", s.omega_max);
    s.t_center_g = detail::get_field(js, "stirap", "t_center_g", s.t_center_g);
    s.t_center_omega = detail::get_field(js, "stirap", "t_center_omega", s.t_center_omega);
    s.width = detail::get_field(js, "stirap", "width", s.width);
    s.nbar = detail::get_field(js, "stirap", "nbar", s.nbar);
    s.gamma_e = detail::get_field(js, "stirap", "gamma_e", s.gamma_e);
  }

  // Eager sanity checks so bad configs fail before any numerics start.
  if (cfg.dim < 2) throw ConfigError("config: dim must be >= 2");
  if (!(cfg.gamma > 0.0)) throw ConfigError("config: gamma must be > 0");
  if (cfg.eta_list.empty()) throw ConfigError("config: eta_list must not be empty");
  for (double e : cfg.eta_list)
    if (!(e >= 0.0 && e <= 1.0))
      throw ConfigError("config: every eta must lie in [0, 1]");
  if (!(cfg.t_final >= 0.0)) throw ConfigError("config: t_final must be >= 0");
  if (!(cfg.dt > 0.0)) throw ConfigError("config: dt must be > 0");
  if (cfg.sample_points < 2) throw ConfigError("config: sample_points must be >= 2");
  if (cfg.grid < 2) throw ConfigError("config: grid must be >= 2");
  if (cfg.n_plus_m_max < 1) throw ConfigError("config: n_plus_m_max must be >= 1");
  if (cfg.initial.kind != "fock" && cfg.initial.kind != "coherent" &&
      cfg.initial.kind != "qubit")
    throw ConfigError("initial: kind must be fock, coherent, or qubit");
  if (cfg.initial.n < 0 || cfg.initial.n >= cfg.dim)
    throw ConfigError("initial: fock level outside [0, dim)");
  if (cfg.traj.n_traj < 1) throw ConfigError("traj: n_traj must be >= 1");

  // Materialize the pulse geometry so the echo carries concrete numbers.
  {
    StirapConfig& s = cfg.stirap;
    if (!(s.t_cross > 0.0)) throw ConfigError("stirap: t_cross must be > 0");
    if (!(s.pulse_area > 0.0)) throw ConfigError("stirap: pulse_area must be > 0");
    const PulseSchedule std_s = PulseSchedule::standard(s.t_cross, s.pulse_area);
    if (s.g_max == 0.0) s.g_max = std_s.g_max;
    if (s.omega_max == 0.0) s.omega_max = std_s.omega_max;
    if (s.t_center_g == 0.0) s.t_center_g = std_s.t_center_g;
    if (s.t_center_omega == 0.0) s.t_center_omega = std_s.t_center_omega;
    if (s.width == 0.0) s.width = std_s.width;
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

// All keys materialized; parse_config(effective_config(cfg)) == cfg.
inline json effective_config(const RunConfig& cfg) {
  json j;
  j["scenario"] = cfg.scenario;
  j["dim"] = cfg.dim;
  j["gamma"] = cfg.gamma;
  j["eta_list"] = cfg.eta_list;
  j["t_final"] = cfg.t_final;
  j["dt"] = cfg.dt;
  j["sample_points"] = cfg.sample_points;
  j["grid"] = cfg.grid;
  j["n_plus_m_max"] = cfg.n_plus_m_max;
  j["initial"] = {{"kind", cfg.initial.kind},
                  {"n", cfg.initial.n},
                  {"alpha", {cfg.initial.alpha.real(), cfg.initial.alpha.imag()}},
                  {"qubit",
                   {{"n", cfg.initial.qubit_n},
                    {"m", cfg.initial.qubit_m},
                    {"alpha_re", cfg.initial.qubit_alpha.real()},
                    {"alpha_im", cfg.initial.qubit_alpha.imag()},
                    {"beta_re", cfg.initial.qubit_beta.real()},
                    {"beta_im", cfg.initial.qubit_beta.imag()}}}};
  j["traj"] = {{"n_traj", cfg.traj.n_traj}, {"master_seed", cfg.traj.master_seed}};
  j["stirap"] = {{"t_cross", cfg.stirap.t_cross},
                 {"pulse_area", cfg.stirap.pulse_area},
                 {"g_max", cfg.stirap.g_max},
                 {"omega_max", cfg.stirap.omega_max},
                 {"t_center_g", cfg.stirap.t_center_g},
                 {"t_center_omega", cfg.stirap.t_center_omega},
                 {"width", cfg.stirap.width},
                 {"nbar", cfg.stirap.nbar},
                 {"gamma_e", cfg.stirap.gamma_e}};
  j["out"] = cfg.out;
  return j;
}

struct RunResult {
  std::string table;  // CSV: header line + data rows
  json meta;
};

namespace detail {

struct TableBuilder {
  std::ostringstream os;
  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      os << (i ? "," : "") << cols[i];
    os << '\n';
  }
  void row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i)
      os << (i ? "," : "") << fmt(vals[i]);
    os << '\n';
  }
};

inline DensityMatrix initial_density(const RunConfig& cfg) {
  if (cfg.initial.kind == "fock")
    return DensityMatrix::pure(Ket::basis(cfg.initial.n, FockDim(cfg.dim)));
  if (cfg.initial.kind == "coherent")
    return DensityMatrix::pure(coherent_state(cfg.initial.alpha, FockDim(cfg.dim)));
  throw ConfigError("initial: this scenario needs a fock or coherent state");
}

inline Ket initial_ket(const RunConfig& cfg) {
  if (cfg.initial.kind == "fock") return Ket::basis(cfg.initial.n, FockDim(cfg.dim));
  if (cfg.initial.kind == "coherent")
    return coherent_state(cfg.initial.alpha, FockDim(cfg.dim));
  throw ConfigError("initial: this scenario needs a fock or coherent state");
}

inline double single_eta(const RunConfig& cfg) {
  if (cfg.eta_list.size() != 1)
    throw ConfigError("config: scenario '" + cfg.scenario + "' needs a single eta");
  return cfg.eta_list.front();
}

inline std::vector<std::string> evolve_columns(int dim) {
  std::vector<std::string> cols{"t", "trace", "purity"};
  for (int i = 0; i < dim; ++i) cols.push_back("p" + std::to_string(i));
  cols.push_back("re_amp");
  cols.push_back("im_amp");
  return cols;
}

inline std::vector<double> evolve_row(double t, const DensityMatrix& rho) {
  std::vector<double> row{t, rho.trace_real(), rho.purity()};
  for (int i = 0; i < rho.dim(); ++i) row.push_back(rho.elements()(i, i).real());
  const Complex amp = mean_amplitude(rho);
  row.push_back(amp.real());
  row.push_back(amp.imag());
  return row;
}

inline Trajectory evolve_sampled(const RunConfig& cfg, double eta) {
  const DensityMatrix rho0 = initial_density(cfg);
  IntegratorConfig ic;
  ic.dt = cfg.dt;
  ic.t_final = cfg.t_final;
  const long n_steps = step_count(cfg.t_final, cfg.dt);
  ic.sample_stride = static_cast<int>(
      std::max<long>(1, n_steps / std::max(1, cfg.sample_points - 1)));
  return integrate(rho0, FeedbackParams(cfg.gamma, eta), ic);
}

inline RunResult run_evolve(const RunConfig& cfg) {
  const double eta = single_eta(cfg);
  const Trajectory traj = evolve_sampled(cfg, eta);
  TableBuilder tb;
  tb.header(evolve_columns(cfg.dim));
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    tb.row(evolve_row(traj.times[i], traj.states[i]));
  RunResult res;
  res.table = tb.os.str();
  res.meta["final_purity"] = traj.final_state().purity();
  res.meta["final_trace"] = traj.final_state().trace_real();
  res.meta["rows"] = traj.times.size();
  return res;
}

inline RunResult run_sweep(const RunConfig& cfg, unsigned threads) {
  std::vector<Trajectory> per_eta(cfg.eta_list.size());
  parallel_for(cfg.eta_list.size(), threads, [&](std::size_t i) {
    per_eta[i] = evolve_sampled(cfg, cfg.eta_list[i]);
  });
  TableBuilder tb;
  std::vector<std::string> cols{"eta"};
  for (const auto& c : evolve_columns(cfg.dim)) cols.push_back(c);
  tb.header(cols);
  for (std::size_t e = 0; e < cfg.eta_list.size(); ++e)
    for (std::size_t i = 0; i < per_eta[e].times.size(); ++i) {
      std::vector<double> row{cfg.eta_list[e]};
      for (double v : evolve_row(per_eta[e].times[i], per_eta[e].states[i]))
        row.push_back(v);
      tb.row(row);
    }
  RunResult res;
  res.table = tb.os.str();
  res.meta["etas"] = cfg.eta_list;
  return res;
}

inline RunResult run_trajectories(const RunConfig& cfg, unsigned threads) {
  const double eta = single_eta(cfg);
  const Ket psi0 = initial_ket(cfg);
  TrajectoryConfig tc;
  tc.n_traj = cfg.traj.n_traj;
  tc.master_seed = cfg.traj.master_seed;
  tc.dt = cfg.dt;
  tc.t_final = cfg.t_final;
  for (int i = 0; i < cfg.sample_points; ++i)
    tc.sample_times.push_back(cfg.t_final * double(i) /
                              double(cfg.sample_points - 1));
  const EnsembleResult ens =
      ensemble_density(psi0, FeedbackParams(cfg.gamma, eta), tc, threads);

  TableBuilder tb;
  std::vector<std::string> cols{"t", "nbar", "nbar_se"};
  for (int i = 0; i < cfg.dim; ++i) {
    cols.push_back("p" + std::to_string(i));
    cols.push_back("p" + std::to_string(i) + "_se");
  }
  tb.header(cols);
  for (std::size_t j = 0; j < ens.times.size(); ++j) {
    std::vector<double> row{ens.times[j], ens.nbar_mean[j], ens.nbar_stderr[j]};
    for (int i = 0; i < cfg.dim; ++i) {
      row.push_back(ens.states[j].elements()(i, i).real());
      row.push_back(ens.diag_stderr[j](i));
    }
    tb.row(row);
  }
  RunResult res;
  res.table = tb.os.str();
  res.meta["n_traj"] = ens.n_traj;
  res.meta["master_seed"] = cfg.traj.master_seed;
  res.meta["chunk"] = kEnsembleChunk;
  res.meta["jump_histogram"] = ens.jump_histogram;
  return res;
}

inline RunResult run_qubit_fidelity(const RunConfig& cfg, unsigned threads) {
  if (cfg.initial.kind != "qubit")
    throw ConfigError("qubit-fidelity: initial.kind must be 'qubit'");
  const int n = cfg.initial.qubit_n, m = cfg.initial.qubit_m;
  TableBuilder tb;
  tb.header({"gamma_t", "eta", "f_min_closed", "f_min_numeric"});
  const double gt_max = cfg.gamma * cfg.t_final;
  for (double eta : cfg.eta_list) {
    const FeedbackParams p(cfg.gamma, eta);
    for (int i = 0; i < cfg.sample_points; ++i) {
      const double gt = gt_max * double(i) / double(cfg.sample_points - 1);
      const double closed = min_fidelity_closed(n, m, eta, gt);
      const double numeric =
          min_fidelity_numeric(n, m, p, gt, cfg.grid, threads).f_min;
      tb.row({gt, eta, closed, numeric});
    }
  }
  RunResult res;
  res.table = tb.os.str();
  res.meta["levels"] = {n, m};
  res.meta["grid"] = cfg.grid;
  return res;
}

inline RunResult run_qubit_optimal(const RunConfig& cfg) {
  const double eta = single_eta(cfg);
  const double gt = cfg.gamma * cfg.t_final;
  const OptimalQubit best = optimal_qubit(eta, gt, cfg.n_plus_m_max);
  TableBuilder tb;
  tb.header({"n", "m", "n_plus_m", "f_min_closed", "best"});
  for (int total = 1; total <= cfg.n_plus_m_max; ++total)
    for (int m = 0; 2 * m < total; ++m) {
      const int n = total - m;
      tb.row({double(n), double(m), double(total),
              min_fidelity_closed(n, m, eta, gt),
              (n == best.n && m == best.m) ? 1.0 : 0.0});
    }
  RunResult res;
  res.table = tb.os.str();
  res.meta["best"] = {{"n", best.n}, {"m", best.m}, {"f_min", best.f_min}};
  res.meta["gamma_t"] = gt;
  return res;
}

inline RunResult run_stirap(const RunConfig& cfg) {
  const DensityMatrix field = initial_density(cfg);
  const StirapConfig& sc = cfg.stirap;
  PulseSchedule s{sc.g_max, sc.omega_max, sc.t_center_g,
                  sc.t_center_omega, sc.width, sc.t_cross};
  s.validate();
  const long n_steps = std::max<long>(1, std::llround(sc.t_cross / cfg.dt));
  const long stride = std::max<long>(1, n_steps / std::max(1, cfg.sample_points - 1));
  const CrossingResult cr = simulate_crossing(field, s, cfg.dt, stride);

  double nbar = sc.nbar;
  if (nbar < 0.0) {
    nbar = 0.0;
    for (int i = 0; i < field.dim(); ++i)
      nbar += double(i) * field.elements()(i, i).real();
  }
  const AdiabaticityReport rep = adiabaticity_check(s, nbar, cfg.gamma, sc.gamma_e);

  TableBuilder tb;
  tb.header({"t", "dark_overlap", "excited_pop"});
  for (std::size_t i = 0; i < cr.times.size(); ++i)
    tb.row({cr.times[i], cr.dark_overlap[i], cr.excited_population[i]});
  RunResult res;
  res.table = tb.os.str();
  res.meta["transfer_fidelity"] = cr.transfer_fidelity;
  res.meta["max_excited_population"] = cr.max_excited_population;
  res.meta["final_transfer_population"] = cr.final_transfer_population;
  res.meta["adiabaticity"] = {{"ratio_pulse", rep.ratio_pulse},
                              {"ratio_decay", rep.ratio_decay},
                              {"ratio_spont", rep.ratio_spont},
                              {"pass_pulse", rep.pass_pulse},
                              {"pass_decay", rep.pass_decay},
                              {"pass_spont", rep.pass_spont},
                              {"pass", rep.all_pass()}};
  res.meta["nbar"] = nbar;
  return res;
}

}  // namespace detail

// Execute a parsed config. The result is a pure function of the config (the
// worker count never changes any output byte).
inline RunResult run(const RunConfig& cfg, unsigned threads = 1) {
  RunResult res;
  if (cfg.scenario == "evolve")
    res = detail::run_evolve(cfg);
  else if (cfg.scenario == "sweep")
    res = detail::run_sweep(cfg, threads);
  else if (cfg.scenario == "trajectories")
    res = detail::run_trajectories(cfg, threads);
  else if (cfg.scenario == "qubit-fidelity")
    res = detail::run_qubit_fidelity(cfg, threads);
  else if (cfg.scenario == "qubit-optimal")
    res = detail::run_qubit_optimal(cfg);
  else if (cfg.scenario == "stirap")
    res = detail::run_stirap(cfg);
  else
    throw ConfigError("run: unknown scenario '" + cfg.scenario + "'");
  res.meta["scenario"] = cfg.scenario;
  res.meta["effective_config"] = effective_config(cfg);
  return res;
}

}  // namespace cavfb
