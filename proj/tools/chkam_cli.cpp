// Copyright 2026 The chkam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// chkam: run the reducibility pipeline from a JSON config.
//
//   chkam run configs/ch_default.json --out out/default
//   chkam sweep configs/ch_default.json --param epsilon --values 1e-4,3e-4,1e-3

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chkam/experiment.hpp"

namespace {

chkam::ExperimentConfig load(const std::string& path, const std::string& out,
                             long long seed) {
  chkam::ExperimentConfig cfg = chkam::load_config(path);
  if (!out.empty()) cfg.output_dir = out;
  if (seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.derive();
  }
  cfg.validate();
  return cfg;
}

int do_run(const chkam::ExperimentConfig& cfg) {
  const chkam::ExperimentReport rep = chkam::run_experiment(cfg);
  for (const auto& w : rep.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& c : rep.checks)
    std::printf("%-30s %s  value=%.3e threshold=%.3e  %s\n", c.name.c_str(),
                c.pass ? "PASS" : "FAIL", c.value, c.threshold,
                c.detail.c_str());
  if (rep.error) std::fprintf(stderr, "error: %s\n", rep.error->c_str());
  std::printf("reports written to %s (exit %d)\n", cfg.output_dir.c_str(),
              rep.exit_code);
  return rep.exit_code;
}

int do_sweep(const chkam::ExperimentConfig& cfg, const std::string& param,
             const std::vector<double>& values) {
  double slope = 0.0;
  const auto rows = chkam::sweep(cfg, param, values, &slope);
  int worst = 0;
  for (const auto& r : rows) {
    std::printf("%s=%-12g exit=%d sup<j>|r|=%.4e remainder=%.3e %s\n",
                param.c_str(), r.value, r.exit_code, r.weighted_sup,
                r.final_remainder, r.error.c_str());
    worst = std::max(worst, r.exit_code);
  }
  std::printf("log-log slope %.4f; sweep.csv in %s\n", slope,
              cfg.output_dir.c_str());
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reducibility pipeline for quasi-periodically forced "
               "dispersive Camassa-Holm linearizations"};
  app.require_subcommand(1);
  std::string config, out, param;
  long long seed = -1;
  std::vector<double> values;

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  run->add_option("config", config, "JSON config")->required();
  run->add_option("--out", out, "output directory (overrides config)");
  run->add_option("--seed", seed, "master seed (overrides config)");

  CLI::App* sw = app.add_subcommand("sweep", "run one experiment per value");
  sw->add_option("config", config, "JSON config")->required();
  sw->add_option("--param", param, "epsilon, gamma, kappa, N0 or j_max")
      ->required();
  sw->add_option("--values", values, "comma-separated values")
      ->required()
      ->delimiter(',');
  sw->add_option("--out", out, "output directory (overrides config)");
  sw->add_option("--seed", seed, "master seed (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  try {
    const chkam::ExperimentConfig cfg = load(config, out, seed);
    if (*run) return do_run(cfg);
    return do_sweep(cfg, param, values);
  } catch (const chkam::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return chkam::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
