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


#include "chkam/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

namespace chkam {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    fail(ErrorKind::kConfig, "'" + section + "' must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) {
      const std::string where =
          section.empty() ? item.key() : section + "." + item.key();
      fail(ErrorKind::kConfig, "unknown config key '" + where + "'");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::kConfig, std::string("wrong type for config key '") +
                                 key + "'");
  }
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::ofstream os(fs::path(dir) / name);
  if (!os) fail(ErrorKind::kConfig, "cannot write " + name + " in " + dir);
  return os;
}

}  // namespace

std::uint64_t substream(std::uint64_t seed, std::string_view name) {
  // FNV-1a of the name, then seed_seq mixing with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h),
                    static_cast<std::uint32_t>(h >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void ExperimentConfig::derive() {
  dio.nu = model.nu();
  dio.delta0 = model.delta0;
  model.seed = substream(seed, "coefficients");
  sched.probe_seed = substream(seed, "probes");
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion)
    fail(ErrorKind::kConfig, "unsupported schema_version " +
                                 std::to_string(schema_version));
  model.validate();
  dio.validate();
  sched.validate();
  if (dio.nu != model.nu())
    fail(ErrorKind::kConfig, "diophantine nu differs from omega length");
  for (double w : model.omega)
    if (!(w >= dio.L && w <= 2.0 * dio.L))
      fail(ErrorKind::kConfig, "constraint violated: omega in [L, 2L]^nu");
  if (truncation.l_max < 0)
    fail(ErrorKind::kConfig, "constraint violated: l_max >= 0");
  if (truncation.j_max < 2)
    fail(ErrorKind::kConfig, "constraint violated: j_max >= 2");
  if (truncation.guard_j < 0)
    fail(ErrorKind::kConfig, "constraint violated: guard_j >= 0");
  if (!(sobolev_s >= SobolevParams::s0_for(model.nu())))
    fail(ErrorKind::kConfig, "constraint violated: s >= s0");
  if (regularize.pad_l < 0 || regularize.pad_j < 0)
    fail(ErrorKind::kConfig, "constraint violated: regularization pads >= 0");
  if (!(regularize.form_tol > 0.0))
    fail(ErrorKind::kConfig, "constraint violated: form_tol > 0");
  if (!(flags.t_end > 0.0))
    fail(ErrorKind::kConfig, "constraint violated: t_end > 0");
  if (flags.n_times < 2)
    fail(ErrorKind::kConfig, "constraint violated: n_times >= 2");
  if (!(flags.dt > 0.0)) fail(ErrorKind::kConfig, "constraint violated: dt > 0");
  double d_max = 0.0;
  const int jm = truncation.j_max + truncation.guard_j;
  for (int j = 1; j <= jm; ++j)
    d_max = std::max(d_max,
                     std::abs(dispersion0(j, model.m2, model.m0, model.m2)));
  if (flags.do_dynamics && !(flags.dt <= 0.1 / d_max))
    fail(ErrorKind::kConfig, "constraint violated: dt <= 0.1 / max |d_j|");
  if (flags.do_measure) {
    if (flags.n_samples < 100)
      fail(ErrorKind::kConfig, "constraint violated: n_samples >= 100");
    if (measure.gammas.size() < 2)
      fail(ErrorKind::kConfig, "measure needs at least two gammas");
    for (double g : measure.gammas)
      if (!(g > 0.0 && g < 1.0))
        fail(ErrorKind::kConfig, "constraint violated: measure gamma in (0,1)");
    if (measure.kappas.empty())
      fail(ErrorKind::kConfig, "measure needs at least one kappa");
    for (double k : measure.kappas)
      if (!(k > 1.0))
        fail(ErrorKind::kConfig, "constraint violated: measure kappa > 1");
    if (!(measure.epsilon >= 0.0))
      fail(ErrorKind::kConfig, "constraint violated: measure epsilon >= 0");
    if (measure.l_max < 1 || measure.j_max < 2)
      fail(ErrorKind::kConfig, "constraint violated: measure box l >= 1, j >= 2");
    if (measure.pad_l < 0 || measure.pad_j < 0)
      fail(ErrorKind::kConfig, "constraint violated: measure pads >= 0");
    if (!(measure.straightening_tol > 0.0))
      fail(ErrorKind::kConfig,
           "constraint violated: measure straightening_tol > 0");
    if (!(measure.slope_tol > 0.0))
      fail(ErrorKind::kConfig, "constraint violated: slope_tol > 0");
  }
  if (output_dir.empty()) fail(ErrorKind::kConfig, "output_dir is empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "",
             {"schema_version", "seed", "output_dir", "model", "diophantine",
              "schedule", "truncation", "sobolev", "regularize", "run",
              "measure"});
  if (!root.contains("schema_version"))
    fail(ErrorKind::kConfig, "missing config key 'schema_version'");
  ExperimentConfig c;
  read(root, "schema_version", c.schema_version);
  read(root, "seed", c.seed);
  read(root, "output_dir", c.output_dir);

  if (root.contains("model")) {
    const json& m = root["model"];
    check_keys(m, "model",
               {"m0", "m2", "epsilon", "eta0", "mu", "omega", "delta0"});
    read(m, "m0", c.model.m0);
    read(m, "m2", c.model.m2);
    read(m, "epsilon", c.model.epsilon);
    read(m, "eta0", c.model.eta0);
    read(m, "mu", c.model.mu);
    read(m, "omega", c.model.omega);
    read(m, "delta0", c.model.delta0);
  }
  if (root.contains("diophantine")) {
    const json& d = root["diophantine"];
    check_keys(d, "diophantine",
               {"L", "gamma", "kappa", "tau", "tau1", "l_cut", "j_cut"});
    read(d, "L", c.dio.L);
    read(d, "gamma", c.dio.gamma);
    read(d, "kappa", c.dio.kappa);
    read(d, "tau", c.dio.tau);
    read(d, "tau1", c.dio.tau1);
    read(d, "l_cut", c.dio.l_cut);
    read(d, "j_cut", c.dio.j_cut);
  }
  c.sched = KamSchedule::make(c.dio.tau);
  if (root.contains("schedule")) {
    const json& s = root["schedule"];
    check_keys(s, "schedule",
               {"N0", "exponent_a", "exponent_b", "max_iter", "tol", "tau0"});
    read(s, "N0", c.sched.N0);
    read(s, "exponent_a", c.sched.exponent_a);
    read(s, "exponent_b", c.sched.exponent_b);
    read(s, "max_iter", c.sched.max_iter);
    read(s, "tol", c.sched.tol);
    read(s, "tau0", c.sched.tau0);
  }
  if (root.contains("truncation")) {
    const json& t = root["truncation"];
    check_keys(t, "truncation", {"l_max", "j_max", "guard_j"});
    read(t, "l_max", c.truncation.l_max);
    read(t, "j_max", c.truncation.j_max);
    read(t, "guard_j", c.truncation.guard_j);
  }
  if (root.contains("sobolev")) {
    check_keys(root["sobolev"], "sobolev", {"s"});
    read(root["sobolev"], "s", c.sobolev_s);
  }
  if (root.contains("regularize")) {
    const json& r = root["regularize"];
    check_keys(r, "regularize", {"pad_l", "pad_j", "check_form", "form_tol"});
    read(r, "pad_l", c.regularize.pad_l);
    read(r, "pad_j", c.regularize.pad_j);
    read(r, "check_form", c.regularize.check_form);
    read(r, "form_tol", c.regularize.form_tol);
  }
  if (root.contains("run")) {
    const json& r = root["run"];
    check_keys(r, "run",
               {"do_measure", "do_dynamics", "n_samples", "t_end", "dt",
                "n_times"});
    read(r, "do_measure", c.flags.do_measure);
    read(r, "do_dynamics", c.flags.do_dynamics);
    read(r, "n_samples", c.flags.n_samples);
    read(r, "t_end", c.flags.t_end);
    read(r, "dt", c.flags.dt);
    read(r, "n_times", c.flags.n_times);
  }
  if (root.contains("measure")) {
    const json& m = root["measure"];
    check_keys(m, "measure",
               {"gammas", "kappas", "epsilon", "l_max", "j_max", "pad_l",
                "pad_j", "straightening_tol", "slope_tol"});
    read(m, "gammas", c.measure.gammas);
    read(m, "kappas", c.measure.kappas);
    read(m, "epsilon", c.measure.epsilon);
    read(m, "l_max", c.measure.l_max);
    read(m, "j_max", c.measure.j_max);
    read(m, "pad_l", c.measure.pad_l);
    read(m, "pad_j", c.measure.pad_j);
    read(m, "straightening_tol", c.measure.straightening_tol);
    read(m, "slope_tol", c.measure.slope_tol);
  }
  c.derive();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::kConfig, "cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["model"] = {{"m0", c.model.m0},       {"m2", c.model.m2},
                {"epsilon", c.model.epsilon}, {"eta0", c.model.eta0},
                {"mu", c.model.mu},       {"omega", c.model.omega},
                {"delta0", c.model.delta0}};
  j["diophantine"] = {{"L", c.dio.L},         {"gamma", c.dio.gamma},
                      {"kappa", c.dio.kappa}, {"tau", c.dio.tau},
                      {"tau1", c.dio.tau1},   {"l_cut", c.dio.l_cut},
                      {"j_cut", c.dio.j_cut}};
  j["schedule"] = {{"N0", c.sched.N0},
                   {"exponent_a", c.sched.exponent_a},
                   {"exponent_b", c.sched.exponent_b},
                   {"max_iter", c.sched.max_iter},
                   {"tol", c.sched.tol},
                   {"tau0", c.sched.tau0}};
  j["truncation"] = {{"l_max", c.truncation.l_max},
                     {"j_max", c.truncation.j_max},
                     {"guard_j", c.truncation.guard_j}};
  j["sobolev"] = {{"s", c.sobolev_s}};
  j["regularize"] = {{"pad_l", c.regularize.pad_l},
                     {"pad_j", c.regularize.pad_j},
                     {"check_form", c.regularize.check_form},
                     {"form_tol", c.regularize.form_tol}};
  j["run"] = {{"do_measure", c.flags.do_measure},
              {"do_dynamics", c.flags.do_dynamics},
              {"n_samples", c.flags.n_samples},
              {"t_end", c.flags.t_end},
              {"dt", c.flags.dt},
              {"n_times", c.flags.n_times}};
  j["measure"] = {{"gammas", c.measure.gammas},
                  {"kappas", c.measure.kappas},
                  {"epsilon", c.measure.epsilon},
                  {"l_max", c.measure.l_max},
                  {"j_max", c.measure.j_max},
                  {"pad_l", c.measure.pad_l},
                  {"pad_j", c.measure.pad_j},
                  {"straightening_tol", c.measure.straightening_tol},
                  {"slope_tol", c.measure.slope_tol}};
  return j.dump(2);
}

void run_pipeline(const ExperimentConfig& cfg, PipelineResult& out) {
  const ModelParams& p = cfg.model;
  const int lm = cfg.truncation.l_max;
  const int jm = cfg.truncation.j_max + cfg.truncation.guard_j;
  out.stages = 0;
  out.smallness = smallness_condition(cfg.sched, p.epsilon, cfg.dio);
  out.coeffs = synthesize_coefficients(p, lm, jm, cfg.sobolev_s);
  out.op = build_linearized(out.coeffs.a0, out.coeffs.a2, p);
  out.o0 = check_diophantine(p.omega, cfg.dio);

  out.straight = solve_straightening(out.coeffs.a2, p, cfg.dio);
  out.stages = 1;
  out.o1 = check_first_melnikov(p.omega, out.straight.m_inf, cfg.dio);
  out.separation = verify_separation_bounds(
      Spectrum::unperturbed(out.straight.m_inf, p.m0, p.m2, cfg.dio.j_cut),
      p.delta0, cfg.dio.j_cut);

  out.reg = regularize(out.coeffs.a0, out.coeffs.a2, out.straight, p,
                       cfg.regularize);
  out.stages = 2;
  out.initial = split(out.reg);
  out.diag = diagonalize(out.initial, p.omega, cfg.sched, cfg.dio);
  out.stages = 3;
  out.spectrum = out.diag.spec.truncated(cfg.truncation.j_max);
  out.o2 = check_second_melnikov(p.omega, out.spectrum, cfg.dio);

  out.upsilon = compose_transform(out.reg.transform, out.reg.transform_inverse,
                                  out.diag.transform,
                                  out.diag.transform_inverse);
  out.stages = 4;
}

std::function<Spectrum(const std::vector<double>&)> measure_spectrum_fn(
    const ExperimentConfig& cfg) {
  ModelParams p = cfg.model;
  p.epsilon = cfg.measure.epsilon;
  DiophantineParams dio = cfg.dio;
  dio.gamma = 1e-300;
  RegularizeOptions ro = cfg.regularize;
  ro.check_form = false;
  ro.pad_l = cfg.measure.pad_l;
  ro.pad_j = cfg.measure.pad_j;
  const KamSchedule sched = cfg.sched;
  const Coefficients co = synthesize_coefficients(
      p, cfg.measure.l_max, cfg.measure.j_max, cfg.sobolev_s);
  const double tol = cfg.measure.straightening_tol;
  return [p, dio, ro, sched, co, tol](const std::vector<double>& omega) {
    ModelParams q = p;
    q.omega = omega;
    const StraighteningResult sr = solve_straightening(co.a2, q, dio, tol);
    const RegularizedOperator reg = regularize(co.a0, co.a2, sr, q, ro);
    return diagonalize(split(reg), omega, sched, dio).spec;
  };
}

MeasureReport run_measure(const ExperimentConfig& cfg) {
  MeasureReport rep;
  const std::uint64_t mc = substream(cfg.seed, "monte-carlo");
  const auto omegas = sample_box(cfg.dio, cfg.flags.n_samples, mc);
  const auto samples = sample_spectra(omegas, measure_spectrum_fn(cfg), cfg.dio);
  for (const auto& s : samples) rep.failed_samples += s.ok ? 0 : 1;
  rep.pass = true;
  for (double kappa : cfg.measure.kappas) {
    std::vector<double> frac;
    for (double gamma : cfg.measure.gammas) {
      DiophantineParams d = cfg.dio;
      d.gamma = gamma;
      d.kappa = kappa;
      rep.rows.push_back(estimate_excluded_measure(samples, d, mc));
      frac.push_back(rep.rows.back().fraction);
    }
    const double slope = loglog_slope(cfg.measure.gammas, frac);
    const double expected = std::min(1.0, kappa - 1.0);
    rep.kappas.push_back(kappa);
    rep.slopes.push_back(slope);
    rep.expected.push_back(expected);
    rep.pass = rep.pass && std::isfinite(slope) &&
               std::abs(slope - expected) <= cfg.measure.slope_tol;
  }
  rep.at_config = estimate_excluded_measure(samples, cfg.dio, mc);
  return rep;
}

FourierFunction default_initial_datum(int nu, int j_max) {
  FourierFunction h(nu, 0, j_max);
  h.at(0, 1) = cplx(0.5, 0.1);
  h.at(0, 2) = cplx(0.2, -0.3);
  h.at(0, -1) = std::conj(h.at(0, 1));
  h.at(0, -2) = std::conj(h.at(0, 2));
  h.real_valued = true;
  return h;
}

DynamicsReport run_dynamics(const ExperimentConfig& cfg,
                            const PipelineResult& pr) {
  if (pr.stages < 4) fail(ErrorKind::kNumerical, "pipeline incomplete");
  const QpOperator& b = pr.op.bounded;
  const double s = cfg.sobolev_s;
  const double s0 = SobolevParams::s0_for(b.nu);
  const FourierFunction h0 = default_initial_datum(b.nu, b.j_max);
  std::vector<double> times(cfg.flags.n_times);
  for (int k = 0; k < cfg.flags.n_times; ++k)
    times[k] = cfg.flags.t_end * k / (cfg.flags.n_times - 1);
  DynamicsReport rep;
  const SnapshotGenerator gen(b, cfg.model.omega);
  rep.direct = evolve_direct(std::cref(gen), h0, times, cfg.flags.dt, s);
  rep.reduced = evolve_reduced(pr.diag.spec, pr.upsilon.transform,
                               cfg.model.omega, h0, times, s);
  rep.stability = stability_report(rep.direct, rep.reduced, s0);
  rep.cond = op_norm_hs(pr.upsilon.transform, s, nullptr, 1e-6) *
             op_norm_hs(pr.upsilon.transform_inverse, s, nullptr, 1e-6);
  return rep;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 3;
    case ErrorKind::kResonance:
      return 2;
    case ErrorKind::kNumerical:
    case ErrorKind::kCheck:
      return 1;
  }
  return 1;
}

namespace {

CheckResult check_le(std::string name, double value, double threshold,
                     std::string detail = {}) {
  return {std::move(name), value <= threshold, value, threshold,
          std::move(detail)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Smallest log(||R_{n+1}||) / log(||R_n||) with ||R_n|| < 1e-2 and
// ||R_{n+1}|| > 0; +inf when no such pair exists.
double min_log_ratio(const std::vector<double>& norms) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n + 1 < norms.size(); ++n)
    if (norms[n] < 1e-2 && norms[n] > 0.0 && norms[n + 1] > 0.0)
      m = std::min(m, std::log(norms[n + 1]) / std::log(norms[n]));
  return m;
}

std::vector<CheckResult> pipeline_checks(const ExperimentConfig& cfg,
                                         const PipelineResult& pr) {
  std::vector<CheckResult> out;
  const double eps = cfg.model.epsilon;
  out.push_back(check_le("straightening_residual", pr.straight.residual, 1e-10));

  const FormDiagnostics& f = pr.reg.form;
  const double shift = std::abs(pr.straight.m_inf - cfg.model.m2);
  const double form_value =
      std::max({f.first_order_variation, std::abs(f.first_order - pr.reg.m_inf),
                f.zeroth_order_norm});
  CheckResult form = check_le("regularization_form", form_value, 1e-6);
  form.pass = form.pass && shift <= 2.0 * eps;
  form.detail = "variation " + fmt(f.first_order_variation) + ", |c1 - m_inf| " +
                fmt(std::abs(f.first_order - pr.reg.m_inf)) + ", zeroth " +
                fmt(f.zeroth_order_norm) + ", |m_inf - m2| " + fmt(shift);
  out.push_back(form);

  const KamTrace& tr = pr.diag.trace;
  double hom = 0.0, imag = 0.0, eig_excess = 0.0, structure = 0.0;
  for (const KamRecord& r : tr.steps) {
    hom = std::max(hom, r.homological_residual);
    imag = std::max(imag, r.imag_defect);
    eig_excess = std::max(eig_excess, r.max_eig_update - r.modulo_tame_estimate);
    structure = std::max({structure, r.psi_preserving_defect,
                          r.next_real_defect, r.next_reversible_defect});
  }
  out.push_back(check_le("homological_residual", hom, 1e-12));

  const double lr = min_log_ratio(tr.remainder_norms);
  CheckResult kam{"kam_convergence", false, pr.diag.final_remainder,
                  cfg.sched.tol, {}};
  kam.pass = pr.diag.final_remainder <= cfg.sched.tol &&
             pr.diag.iterations <= 6 && lr >= 1.3;
  kam.detail = std::to_string(pr.diag.iterations) +
               " iterations, min log-ratio " + fmt(lr);
  out.push_back(kam);

  out.push_back(check_le("eigenvalue_update_bound", eig_excess, 0.0,
                         "max over steps of update minus tame estimate"));

  const double odd = pr.spectrum.oddness_defect();
  CheckResult spec = check_le("spectrum_real_odd", imag, 1e-12);
  spec.pass = spec.pass && odd == 0.0;
  spec.detail = "oddness defect " + fmt(odd);
  out.push_back(spec);

  const StructureFlags uf = structure_flags(pr.upsilon.transform);
  const StructureFlags ui = structure_flags(pr.upsilon.transform_inverse);
  structure = std::max(
      {structure, pr.reg.transform_flags.preserving_defect,
       pr.reg.inverse_flags.preserving_defect,
       pr.reg.remainder_flags.real_defect,
       pr.reg.remainder_flags.reversible_defect, uf.preserving_defect,
       ui.preserving_defect});
  out.push_back(check_le("structure_preservation", structure, 1e-9));

  CheckResult sep{"separation_bounds", pr.separation.pass,
                  static_cast<double>(pr.separation.violations), 0.0, {}};
  sep.detail = "ratios in [" + fmt(pr.separation.min_ratio) + ", " +
               fmt(pr.separation.max_ratio) + "], bounds [" +
               fmt(pr.separation.delta0) + ", " + fmt(pr.separation.upper) + "]";
  out.push_back(sep);
  return out;
}

void write_structure_csv(std::ostream& os, const PipelineResult& pr) {
  os.precision(17);
  os << "stage,object,real_defect,reversible_defect,preserving_defect\n";
  auto row = [&](const std::string& stage, const std::string& obj,
                 const StructureFlags& f) {
    os << stage << ',' << obj << ',' << f.real_defect << ','
       << f.reversible_defect << ',' << f.preserving_defect << '\n';
  };
  if (pr.stages >= 2) {
    row("regularization", "A", pr.reg.transform_flags);
    row("regularization", "A_inverse", pr.reg.inverse_flags);
    row("regularization", "R0", pr.reg.remainder_flags);
  }
  if (pr.stages >= 3)
    for (const KamRecord& r : pr.diag.trace.steps) {
      const std::string st = "kam_" + std::to_string(r.n);
      os << st << ",Psi,," << "," << r.psi_preserving_defect << '\n';
      os << st << ",R_next," << r.next_real_defect << ','
         << r.next_reversible_defect << ",\n";
    }
  if (pr.stages >= 4) {
    row("transform", "Upsilon", structure_flags(pr.upsilon.transform));
    row("transform", "Upsilon_inverse",
        structure_flags(pr.upsilon.transform_inverse));
  }
}

void write_dynamics_csv(std::ostream& os, const DynamicsReport& d, double s0) {
  os.precision(17);
  os << "t,norm_s,norm_s0,norm_s_reduced,discrepancy\n";
  for (std::size_t k = 0; k < d.direct.times.size(); ++k)
    os << d.direct.times[k] << ',' << d.direct.sobolev_norms[k] << ','
       << x_sobolev_norm(d.direct.states[k], s0) << ','
       << d.reduced.sobolev_norms[k] << ',' << d.stability.discrepancy_t[k]
       << '\n';
}

void write_measure_csv(std::ostream& os, const MeasureReport& m) {
  os.precision(17);
  os << "gamma,kappa,n_samples,excluded_fraction,ci_low,ci_high,seed\n";
  for (const MeasureEstimate& e : m.rows)
    os << e.gamma << ',' << e.kappa << ',' << e.n_samples << ',' << e.fraction
       << ',' << e.ci_low << ',' << e.ci_high << ',' << e.seed << '\n';
}

json membership_json(const Membership& m) {
  json j = {{"pass", m.pass}, {"margin", m.margin}, {"l", m.l}, {"j", m.j}};
  j["jp"] = m.jp;
  return j;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  PipelineResult& pr = rep.pipeline;
  const std::string& dir = cfg.output_dir;
  std::optional<KamTrace> failed_trace;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    rep.exit_code = 3;
    rep.error = "cannot create output_dir " + dir + ": " + ec.message();
    return rep;
  }
  try {
    cfg.validate();
    run_pipeline(cfg, pr);
    if (pr.smallness > 1.0)
      rep.warnings.push_back(
          "smallness condition N0^tau0 eps gamma^(-1-kappa) = " +
          fmt(pr.smallness) + " exceeds 1");
    rep.checks = pipeline_checks(cfg, pr);
    if (cfg.flags.do_dynamics) {
      rep.dynamics = run_dynamics(cfg, pr);
      const DynamicsReport& d = *rep.dynamics;
      const double thr = cfg.model.epsilon == 0.0 ? 1e-8 : 1e-4;
      rep.checks.push_back(
          check_le("dynamics_discrepancy", d.stability.discrepancy, thr));
      rep.checks.push_back(check_le("reduced_modulus_conservation",
                                    d.reduced.modulus_defect, 1e-12));
      CheckResult ratio = check_le("reduced_ratio_within_cond",
                                   d.reduced.max_ratio, d.cond * (1.0 + 1e-12));
      ratio.pass = ratio.pass && std::isfinite(d.direct.max_ratio);
      ratio.detail = "direct max ratio " + fmt(d.direct.max_ratio);
      rep.checks.push_back(ratio);
    }
    if (cfg.flags.do_measure) {
      rep.measure = run_measure(cfg);
      CheckResult m{"measure_scaling", rep.measure->pass, 0.0,
                    cfg.measure.slope_tol, {}};
      for (std::size_t k = 0; k < rep.measure->slopes.size(); ++k) {
        const double dev =
            std::abs(rep.measure->slopes[k] - rep.measure->expected[k]);
        m.value = std::max(m.value, std::isfinite(dev)
                                        ? dev
                                        : std::numeric_limits<double>::infinity());
        m.detail += (k ? "; " : "") + std::string("kappa ") +
                    fmt(rep.measure->kappas[k]) + " slope " +
                    fmt(rep.measure->slopes[k]);
      }
      rep.checks.push_back(m);
    }
  } catch (const KamFailure& e) {
    failed_trace = e.trace();
    rep.error = e.what();
    rep.exit_code = exit_code_for(e.kind());
  } catch (const Error& e) {
    rep.error = e.what();
    rep.exit_code = exit_code_for(e.kind());
  } catch (const std::exception& e) {
    rep.error = e.what();
    rep.exit_code = 1;
  }
  if (!rep.error) {
    rep.exit_code = 0;
    for (const CheckResult& c : rep.checks)
      if (!c.pass) rep.exit_code = 1;
  }

  try {
    if (pr.stages >= 1) {
      auto os = open_out(dir, "straightening.csv");
      write_csv(os, pr.straight);
    }
    if (pr.stages >= 3 || failed_trace) {
      auto os = open_out(dir, "kam_trace.csv");
      write_csv(os, pr.stages >= 3 ? pr.diag.trace : *failed_trace);
    }
    if (pr.stages >= 3) {
      auto os = open_out(dir, "spectrum.csv");
      write_csv(os, pr.spectrum);
    }
    if (pr.stages >= 2) {
      auto os = open_out(dir, "structure.csv");
      write_structure_csv(os, pr);
    }
    if (rep.dynamics) {
      auto os = open_out(dir, "dynamics.csv");
      write_dynamics_csv(os, *rep.dynamics,
                         SobolevParams::s0_for(cfg.model.nu()));
    }
    if (rep.measure) {
      auto os = open_out(dir, "measure.csv");
      write_measure_csv(os, *rep.measure);
    }

    json sum;
    sum["schema_version"] = kSchemaVersion;
    sum["exit_code"] = rep.exit_code;
    sum["error"] = rep.error ? json(*rep.error) : json(nullptr);
    sum["warnings"] = rep.warnings;
    sum["checks"] = json::array();
    for (const CheckResult& c : rep.checks)
      sum["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"value", c.value},
                               {"threshold", c.threshold},
                               {"detail", c.detail}});
    json info;
    info["stages_completed"] = pr.stages;
    info["smallness_condition"] = pr.smallness;
    info["diophantine"] = membership_json(pr.o0);
    if (pr.stages >= 1) {
      info["m_inf"] = pr.straight.m_inf;
      info["straightening_iterations"] = pr.straight.iterations;
      info["first_melnikov"] = membership_json(pr.o1);
    }
    if (pr.stages >= 2) {
      info["lambda_coefficient_deviation"] = pr.reg.form.lambda_deviation;
      info["regularization_conjugation_defect"] = pr.reg.conjugation_defect;
    }
    if (pr.stages >= 3) {
      info["kam_iterations"] = pr.diag.iterations;
      info["final_remainder"] = pr.diag.final_remainder;
      info["kam_conjugation_defect"] = pr.diag.conjugation_defect;
      info["kam_conjugation_verified"] = pr.diag.verified;
      info["weighted_sup_r"] = pr.spectrum.weighted_sup();
      info["second_melnikov"] = membership_json(pr.o2);
    }
    if (pr.stages >= 4) {
      info["transform_inverse_defect"] = pr.upsilon.inverse_defect;
      info["transform_bound"] = pr.upsilon.bound;
    }
    if (rep.dynamics) {
      info["cond_transform"] = rep.dynamics->cond;
      info["max_ratio_direct"] = rep.dynamics->direct.max_ratio;
      info["max_ratio_reduced"] = rep.dynamics->reduced.max_ratio;
    }
    if (rep.measure) {
      info["measure_failed_samples"] = rep.measure->failed_samples;
      info["excluded_fraction"] = rep.measure->at_config.fraction;
    }
    sum["info"] = info;
    auto os = open_out(dir, "summary.json");
    os << sum.dump(2) << '\n';
  } catch (const std::exception& e) {
    if (!rep.error) {
      rep.error = e.what();
      rep.exit_code = 3;
    }
  }
  return rep;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg,
                            const std::string& param,
                            const std::vector<double>& values,
                            double* slope) {
  static const char* const kParams[] = {"epsilon", "gamma", "kappa", "N0",
                                        "j_max"};
  if (std::find(std::begin(kParams), std::end(kParams), param) ==
      std::end(kParams))
    fail(ErrorKind::kConfig, "unknown sweep parameter '" + param + "'");
  if (values.empty()) fail(ErrorKind::kConfig, "sweep needs at least one value");
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) fail(ErrorKind::kConfig, "cannot create output_dir " + cfg.output_dir);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    ExperimentConfig c = cfg;
    if (param == "epsilon") c.model.epsilon = v;
    if (param == "gamma") c.dio.gamma = v;
    if (param == "kappa") c.dio.kappa = v;
    if (param == "N0") c.sched.N0 = static_cast<int>(std::lround(v));
    if (param == "j_max") c.truncation.j_max = static_cast<int>(std::lround(v));
    c.output_dir =
        (fs::path(cfg.output_dir) / (param + "_" + std::to_string(i))).string();
    SweepRow row;
    row.value = v;
    const ExperimentReport rep = run_experiment(c);
    row.exit_code = rep.exit_code;
    row.error = rep.error.value_or("");
    const PipelineResult& pr = rep.pipeline;
    if (pr.stages >= 1) row.m_inf = pr.straight.m_inf;
    if (pr.stages >= 3) {
      row.weighted_sup = pr.spectrum.weighted_sup();
      row.final_remainder = pr.diag.final_remainder;
      row.kam_iterations = pr.diag.iterations;
    }
    if (rep.measure) row.excluded_fraction = rep.measure->at_config.fraction;
    rows.push_back(row);
  }

  const bool by_fraction = param == "gamma" || param == "kappa";
  std::vector<double> xs, ys;
  for (const SweepRow& r : rows) {
    const double y = by_fraction ? r.excluded_fraction : r.weighted_sup;
    if (r.error.empty() && r.value > 0.0 && y > 0.0) {
      xs.push_back(r.value);
      ys.push_back(y);
    }
  }
  const double fit = xs.size() >= 2 ? loglog_slope(xs, ys)
                                    : std::numeric_limits<double>::quiet_NaN();
  if (slope != nullptr) *slope = fit;

  auto os = open_out(cfg.output_dir, "sweep.csv");
  os.precision(17);
  os << "param,value,exit_code,m_inf,weighted_sup_r,final_remainder,"
        "kam_iterations,excluded_fraction,loglog_slope,error\n";
  for (const SweepRow& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    os << param << ',' << r.value << ',' << r.exit_code << ',' << r.m_inf << ','
       << r.weighted_sup << ',' << r.final_remainder << ',' << r.kam_iterations
       << ',' << r.excluded_fraction << ',' << fit << ",\"" << err << "\"\n";
  }
  return rows;
}

}  // namespace chkam
