// cavfb: run a JSON-configured simulation scenario and write a CSV result
// table plus a .meta.json sidecar with the effective config and summary
// numbers.
//
// Exit codes: 0 = success, 2 = config error, 3 = numerical failure.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cavfb/cavfb.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Simulator for photodetection-feedback protection of cavity states"};
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  unsigned threads = 0;
  bool echo_config = false;
  app.add_option("-c,--config", config_path, "JSON run configuration")
      ->required();
  app.add_option("-o,--out", out_override,
                 "output CSV path (overrides the config's 'out')");
  app.add_option("-s,--seed", seed_override, "override traj.master_seed")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("-t,--threads", threads,
                 "worker threads (0 = hardware default); never changes results");
  app.add_flag("--echo-config", echo_config,
               "print the effective config as JSON and exit");
  CLI11_PARSE(app, argc, argv);

  cavfb::RunConfig cfg;
  try {
    cfg = cavfb::parse_config_file(config_path);
    if (seed_given) cfg.traj.master_seed = seed_override;
    if (!out_override.empty()) cfg.out = out_override;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  if (echo_config) {
    std::cout << cavfb::effective_config(cfg).dump(2) << "\n";
    return 0;
  }

  cavfb::RunResult res;
  try {
    res = cavfb::run(cfg, threads);
  } catch (const cavfb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cavfb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }

  if (cfg.out.empty()) {
    std::cout << res.table;
  } else {
    std::ofstream table(cfg.out);
    if (!table) {
      std::cerr << "config error: cannot write " << cfg.out << "\n";
      return 2;
    }
    table << res.table;
    std::ofstream meta(cfg.out + ".meta.json");
    if (!meta) {
      std::cerr << "config error: cannot write " << cfg.out << ".meta.json\n";
      return 2;
    }
    meta << res.meta.dump(2) << "\n";
    std::cerr << "wrote " << cfg.out << " and " << cfg.out << ".meta.json\n";
  }
  return 0;
}
