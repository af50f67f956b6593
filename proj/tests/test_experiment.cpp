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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "chkam/experiment.hpp"

namespace chkam {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kMinimal = R"({"schema_version": 1})";

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("chkam_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config(double eps, const std::string& name) {
  auto cfg = parse_config(kMinimal);
  cfg.model.epsilon = eps;
  cfg.truncation = {4, 8, 2};
  cfg.regularize.pad_l = 2;
  cfg.regularize.pad_j = 4;
  cfg.flags.t_end = 2.0;
  cfg.flags.n_times = 11;
  cfg.output_dir = scratch(name).string();
  return cfg;
}

TEST(Config, MinimalUsesDefaults) {
  const auto cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.model.m0, 6.0);
  EXPECT_EQ(cfg.model.m2, -2.0);
  EXPECT_EQ(cfg.truncation.j_max, 16);
  EXPECT_EQ(cfg.sched.exponent_a, 45.0);
  EXPECT_EQ(cfg.dio.nu, 2);
  EXPECT_EQ(cfg.model.seed, substream(1, "coefficients"));
  EXPECT_EQ(cfg.sched.probe_seed, substream(1, "probes"));
}

TEST(Config, RejectsUnknownAndMissingKeys) {
  EXPECT_EQ(config_error(R"({"schema_version": 1, "model": {"m3": 1}})"),
            "unknown config key 'model.m3'");
  EXPECT_EQ(config_error(R"({"schema_version": 1, "colour": 1})"),
            "unknown config key 'colour'");
  EXPECT_EQ(config_error("{}"), "missing config key 'schema_version'");
  EXPECT_EQ(config_error(R"({"schema_version": 2})"),
            "unsupported schema_version 2");
}

TEST(Config, NamesViolatedConstraint) {
  EXPECT_EQ(config_error(R"({"schema_version": 1, "model": {"m2": 1.0}})"),
            "constraint violated: m2 < 0");
  EXPECT_EQ(
      config_error(R"({"schema_version": 1, "diophantine": {"kappa": 1.0}})"),
      "constraint violated: kappa > 1");
  EXPECT_NE(config_error(
                R"({"schema_version": 1, "model": {"omega": [0.5, 1.5]}})"),
            "");
}

TEST(Config, DumpParseRoundTrip) {
  auto cfg = parse_config(kMinimal);
  cfg.model.epsilon = 2.5e-4;
  cfg.truncation.guard_j = 3;
  cfg.measure.gammas = {0.02, 0.04};
  const auto back = parse_config(dump_config(cfg));
  EXPECT_EQ(dump_config(back), dump_config(cfg));
  EXPECT_EQ(back.model.epsilon, 2.5e-4);
  EXPECT_EQ(back.truncation.guard_j, 3);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"ch_default.json", "eps0.json", "measure.json"})
    EXPECT_NO_THROW(load_config(std::string(CHKAM_CONFIG_DIR) + "/" + name))
        << name;
}

TEST(Substream, DistinctAndStable) {
  EXPECT_EQ(substream(1, "probes"), substream(1, "probes"));
  EXPECT_NE(substream(1, "probes"), substream(1, "coefficients"));
  EXPECT_NE(substream(1, "probes"), substream(2, "probes"));
}

TEST(Experiment, UnperturbedRunPassesAndIsReproducible) {
  auto cfg = small_config(0.0, "eps0");
  const auto rep = run_experiment(cfg);
  ASSERT_FALSE(rep.error) << *rep.error;
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << ' ' << c.detail;
  EXPECT_EQ(rep.exit_code, 0);
  const fs::path dir(cfg.output_dir);
  for (const char* f : {"straightening.csv", "kam_trace.csv", "spectrum.csv",
                        "structure.csv", "dynamics.csv", "summary.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto sum = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(sum["exit_code"], 0);
  EXPECT_EQ(sum["checks"].size(), rep.checks.size());
  EXPECT_EQ(rep.pipeline.spectrum.weighted_sup(), 0.0);

  const std::string first = slurp(dir / "spectrum.csv");
  const std::string first_dyn = slurp(dir / "dynamics.csv");
  run_experiment(cfg);
  EXPECT_EQ(slurp(dir / "spectrum.csv"), first);
  EXPECT_EQ(slurp(dir / "dynamics.csv"), first_dyn);
}

TEST(Experiment, SmallPerturbationRun) {
  auto cfg = small_config(1e-5, "eps1e-5");
  cfg.flags.do_dynamics = false;
  const auto rep = run_experiment(cfg);
  ASSERT_FALSE(rep.error) << *rep.error;
  EXPECT_EQ(rep.pipeline.stages, 4);
  EXPECT_GT(rep.pipeline.spectrum.weighted_sup(), 0.0);
  EXPECT_EQ(rep.pipeline.spectrum.oddness_defect(), 0.0);
  EXPECT_LE(rep.pipeline.diag.final_remainder, cfg.sched.tol);
  // 8 * 1e-5 * 0.05^-3 = 0.64.
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(Experiment, WarnsWhenSmallnessConditionFails) {
  auto cfg = small_config(1e-5, "smallness");
  cfg.flags.do_dynamics = false;
  cfg.dio.gamma = 0.02;
  const auto rep = run_experiment(cfg);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("smallness"), std::string::npos);
  const auto sum = json::parse(slurp(fs::path(cfg.output_dir) / "summary.json"));
  EXPECT_EQ(sum["warnings"].size(), 1u);
}

TEST(Experiment, ResonantFrequencyExitsWithTwo) {
  auto cfg = small_config(1e-3, "resonant");
  cfg.model.omega = {2.0, 1.5};
  const auto rep = run_experiment(cfg);
  EXPECT_EQ(rep.exit_code, 2);
  ASSERT_TRUE(rep.error);
  const auto sum = json::parse(slurp(fs::path(cfg.output_dir) / "summary.json"));
  EXPECT_EQ(sum["exit_code"], 2);
}

TEST(Experiment, ExitCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kResonance), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kNumerical), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::kCheck), 1);
}

TEST(Sweep, SingleValueMatchesRun) {
  auto cfg = small_config(0.0, "sweep");
  cfg.flags.do_dynamics = false;
  double slope = 0.0;
  const auto rows = sweep(cfg, "epsilon", {1e-5}, &slope);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].exit_code, 0) << rows[0].error;
  auto single = small_config(1e-5, "sweep_single");
  single.flags.do_dynamics = false;
  const auto rep = run_experiment(single);
  EXPECT_EQ(rows[0].weighted_sup, rep.pipeline.spectrum.weighted_sup());
  EXPECT_EQ(rows[0].m_inf, rep.pipeline.straight.m_inf);
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "sweep.csv"));
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "epsilon_0" / "summary.json"));
}

TEST(Sweep, RejectsUnknownParameter) {
  auto cfg = small_config(0.0, "sweep_bad");
  EXPECT_THROW(sweep(cfg, "colour", {1.0}), Error);
}

}  // namespace
}  // namespace chkam
