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


// Experiment configuration, pipeline orchestration and report emission.

#ifndef CHKAM_EXPERIMENT_HPP_
#define CHKAM_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chkam/ch_model.hpp"
#include "chkam/dynamics.hpp"
#include "chkam/kam_engine.hpp"
#include "chkam/resonance.hpp"
#include "chkam/spectrum.hpp"
#include "chkam/straightening.hpp"

namespace chkam {

inline constexpr int kSchemaVersion = 1;

struct Truncation {
  int l_max = 8;
  int j_max = 16;
  // Extra x-modes carried through the pipeline and dropped from the
  // reported spectrum; the outermost Galerkin modes are not resolved.
  int guard_j = 4;
};

struct RunFlags {
  bool do_measure = false;
  bool do_dynamics = true;
  int n_samples = 1000;
  double t_end = 10.0;
  double dt = 1e-3;
  int n_times = 101;
};

// Monte-Carlo runs use a smaller box and their own epsilon.
struct MeasureConfig {
  std::vector<double> gammas{0.01, 0.02, 0.05, 0.1};
  std::vector<double> kappas{1.5, 2.0};
  double epsilon = 1e-4;
  int l_max = 1;
  int j_max = 4;
  int pad_l = 2;
  int pad_j = 4;
  // The straightening residual floors at the truncation level on a
  // coarse box.
  double straightening_tol = 1e-6;
  double slope_tol = 0.3;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ModelParams model;
  DiophantineParams dio;
  KamSchedule sched = KamSchedule::make(7.0);
  Truncation truncation;
  double sobolev_s = 3.0;
  RegularizeOptions regularize;
  RunFlags flags;
  MeasureConfig measure;
  std::string output_dir = "out";
  std::uint64_t seed = 1;

  // Throws kConfig naming the first violated constraint.
  void validate() const;
  // Pushes the seed into the coefficient and probe substreams and copies
  // shared fields (nu, delta0). Called by the loaders.
  void derive();
};

// Parsing rejects unknown keys and a missing or unsupported
// schema_version, then validates.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& cfg);

// Named deterministic substream of a master seed.
std::uint64_t substream(std::uint64_t seed, std::string_view name);

struct PipelineResult {
  Coefficients coeffs;
  LinearizedOperator op;
  StraighteningResult straight;
  RegularizedOperator reg;
  KamState initial;
  Diagonalization diag;
  TransformProduct upsilon;
  // d_j^inf for |j| <= j_max.
  Spectrum spectrum;
  Membership o0;
  Membership o1;
  Membership o2;
  SeparationReport separation;
  double smallness = 0.0;
  // Stages completed: 1 straightening, 2 regularization, 3 KAM, 4 transform.
  int stages = 0;
};

// Fills out stage by stage; on error the completed stages stay valid.
void run_pipeline(const ExperimentConfig& cfg, PipelineResult& out);

// Spectrum at frequency omega on the measure box, used by the
// Monte-Carlo estimate. Thresholds are disabled so near-resonant samples
// still produce a spectrum.
std::function<Spectrum(const std::vector<double>&)> measure_spectrum_fn(
    const ExperimentConfig& cfg);

struct MeasureReport {
  std::vector<MeasureEstimate> rows;
  // Per kappa: fitted slope and min{1, kappa - 1}.
  std::vector<double> kappas;
  std::vector<double> slopes;
  std::vector<double> expected;
  // Estimate at the configured (gamma, kappa).
  MeasureEstimate at_config;
  int failed_samples = 0;
  bool pass = false;
};

MeasureReport run_measure(const ExperimentConfig& cfg);

struct DynamicsReport {
  FlowResult direct;
  FlowResult reduced;
  StabilityReport stability;
  // ||U||_{L(H^s)} ||U^{-1}||_{L(H^s)}.
  double cond = 0.0;
};

// h0 with modes |j| <= 2, evolved on [0, t_end].
FourierFunction default_initial_datum(int nu, int j_max);
DynamicsReport run_dynamics(const ExperimentConfig& cfg,
                            const PipelineResult& pr);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentReport {
  int exit_code = 0;
  std::optional<std::string> error;
  // Non-fatal diagnostics, e.g. the KAM smallness condition exceeding 1.
  std::vector<std::string> warnings;
  std::vector<CheckResult> checks;
  PipelineResult pipeline;
  std::optional<DynamicsReport> dynamics;
  std::optional<MeasureReport> measure;
};

// Writes straightening.csv, kam_trace.csv, spectrum.csv, structure.csv,
// optionally measure.csv and dynamics.csv, and summary.json. Exit codes:
// 0 all checks pass, 1 check or numerical failure, 2 resonance, 3 config.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

int exit_code_for(ErrorKind kind);

struct SweepRow {
  double value = 0.0;
  int exit_code = 0;
  double m_inf = 0.0;
  double weighted_sup = 0.0;
  double final_remainder = 0.0;
  int kam_iterations = 0;
  double excluded_fraction = -1.0;
  std::string error;
};

// param is one of epsilon, gamma, kappa, N0, j_max. Each value runs in
// output_dir/<param>_<index>; sweep.csv goes to output_dir. The slope
// column is the log-log fit of weighted_sup (excluded_fraction for gamma
// and kappa) against the value over successful rows.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg,
                            const std::string& param,
                            const std::vector<double>& values,
                            double* slope = nullptr);

}  // namespace chkam

#endif  // CHKAM_EXPERIMENT_HPP_
