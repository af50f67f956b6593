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


#include "chkam/resonance.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace chkam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Worst {
  double margin = kInf;
  std::size_t li = 0;
  int j = 0;
  int jp = 0;
};

Membership finish(const Worst& w, const Lattice& box, double scale) {
  Membership m;
  m.margin = w.margin / scale;
  m.pass = m.margin >= 1.0;
  if (w.margin < kInf) {
    m.l = box.point(w.li);
    m.j = w.j;
    m.jp = w.jp;
  }
  return m;
}

// Margins at gamma = 1.
Worst unit_o0(const std::vector<double>& omega, const DiophantineParams& dio) {
  const Lattice box{static_cast<int>(omega.size()), dio.l_cut};
  Worst w;
  for (std::size_t li = 0; li < box.size(); ++li) {
    if (li == box.zero()) continue;
    const double lt = std::pow(bracket(box.sup(li), 0), omega.size());
    const double m = std::abs(box.dot(li, omega)) * lt / 2.0;
    if (m < w.margin) w = {m, li, 0, 0};
  }
  return w;
}

Worst unit_o1(const std::vector<double>& omega, double m_inf,
              const DiophantineParams& dio) {
  const Lattice box{static_cast<int>(omega.size()), dio.l_cut};
  Worst w;
  for (std::size_t li = 0; li < box.size(); ++li) {
    const double wl = box.dot(li, omega);
    const int ls = box.sup(li);
    for (int j = -dio.j_cut; j <= dio.j_cut; ++j) {
      if (li == box.zero() && j == 0) continue;
      const double m =
          std::abs(wl + m_inf * j) * std::pow(bracket(ls, j), dio.tau) / 2.0;
      if (m < w.margin) w = {m, li, j, 0};
    }
  }
  return w;
}

Worst unit_o2(const std::vector<double>& omega, const Spectrum& spec,
              const DiophantineParams& dio) {
  const Lattice box{static_cast<int>(omega.size()), dio.l_cut};
  const int jc = dio.j_cut;
  std::vector<double> d(2 * jc + 1);
  for (int j = -jc; j <= jc; ++j) d[j + jc] = spec.d(j);
  Worst w;
  for (std::size_t li = 0; li < box.size(); ++li) {
    const double wl = box.dot(li, omega);
    const double lt = std::pow(bracket(box.sup(li), 0), dio.tau) / 2.0;
    for (int j = -jc; j <= jc; ++j)
      for (int jp = -jc; jp <= jc; ++jp) {
        if (j == jp) continue;
        const double m =
            std::abs(wl + d[j + jc] - d[jp + jc]) * lt / std::abs(j - jp);
        if (m < w.margin) w = {m, li, j, jp};
      }
  }
  return w;
}

}  // namespace

void DiophantineParams::validate() const {
  if (nu < 1) fail(ErrorKind::kConfig, "constraint violated: nu >= 1");
  if (!(L > 0.0)) fail(ErrorKind::kConfig, "constraint violated: L > 0");
  if (!(gamma > 0.0 && gamma < 1.0))
    fail(ErrorKind::kConfig, "constraint violated: gamma in (0,1)");
  if (!(kappa > 1.0)) fail(ErrorKind::kConfig, "constraint violated: kappa > 1");
  if (!(tau >= 2.0 * nu + 3.0))
    fail(ErrorKind::kConfig, "constraint violated: tau >= 2 nu + 3");
  if (!(tau >= nu + 3.0))
    fail(ErrorKind::kConfig, "constraint violated: tau >= nu + 3");
  if (!(tau1 >= nu + 1.0))
    fail(ErrorKind::kConfig, "constraint violated: tau1 >= nu + 1");
  if (!(tau >= tau1 + nu + 2.0))
    fail(ErrorKind::kConfig, "constraint violated: tau >= tau1 + nu + 2");
  if (!(delta0 > 0.0)) fail(ErrorKind::kConfig, "constraint violated: delta0 > 0");
  if (l_cut < 1) fail(ErrorKind::kConfig, "constraint violated: l_cut >= 1");
  if (j_cut < 1) fail(ErrorKind::kConfig, "constraint violated: j_cut >= 1");
}

double DiophantineParams::omega_max() const {
  return 2.0 * L * std::sqrt(static_cast<double>(nu));
}

Membership check_diophantine(const std::vector<double>& omega,
                             const DiophantineParams& dio) {
  const Lattice box{static_cast<int>(omega.size()), dio.l_cut};
  return finish(unit_o0(omega, dio), box, dio.gamma);
}

Membership check_first_melnikov(const std::vector<double>& omega, double m_inf,
                                const DiophantineParams& dio) {
  const Lattice box{static_cast<int>(omega.size()), dio.l_cut};
  return finish(unit_o1(omega, m_inf, dio), box, dio.gamma);
}

Membership check_second_melnikov(const std::vector<double>& omega,
                                 const Spectrum& spec,
                                 const DiophantineParams& dio) {
  const Lattice box{static_cast<int>(omega.size()), dio.l_cut};
  return finish(unit_o2(omega, spec, dio), box,
                std::pow(dio.gamma, dio.kappa));
}

SeparationReport verify_separation_bounds(const Spectrum& spec, double delta0,
                                          int j_cut) {
  SeparationReport rep;
  rep.delta0 = delta0;
  rep.hypotheses = spec.m2 < 0.0 && spec.m0 + spec.m2 >= 0.0 &&
                   spec.m0 < -5.0 * spec.m2 - 4.0 * delta0;
  rep.upper = std::abs(spec.m_inf) + 1.25 * std::abs(spec.m0 + spec.m2);
  rep.min_ratio = kInf;
  rep.max_ratio = 0.0;
  double worst = 0.0;
  for (int j = -j_cut; j <= j_cut; ++j)
    for (int jp = -j_cut; jp <= j_cut; ++jp) {
      if (j == jp) continue;
      const double ratio = std::abs(spec.d0(j) - spec.d0(jp)) / std::abs(j - jp);
      rep.min_ratio = std::min(rep.min_ratio, ratio);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
      const double excess =
          std::max(delta0 - ratio, ratio - rep.upper);
      if (excess > 0.0) {
        ++rep.violations;
        if (excess > worst) {
          worst = excess;
          rep.witness_j = j;
          rep.witness_jp = jp;
        }
      }
    }
  rep.pass = rep.hypotheses && rep.violations == 0;
  return rep;
}

InclusionReport inclusion_audit(
    const std::vector<std::vector<double>>& omega_samples,
    const std::function<Spectrum(const std::vector<double>&)>& spectrum_of,
    const DiophantineParams& dio) {
  InclusionReport rep;
  rep.c1 = dio.delta0 / (6.0 * dio.omega_max());
  const double gk = std::pow(dio.gamma, dio.kappa);
  const int jc = dio.j_cut;
  for (const auto& omega : omega_samples) {
    const Spectrum spec = spectrum_of(omega);
    const Lattice box{static_cast<int>(omega.size()), dio.l_cut};
    for (std::size_t li = 0; li < box.size(); ++li) {
      const double wl = box.dot(li, omega);
      const int ls = box.sup(li);
      const double lb = bracket(ls, 0);
      const auto l = box.point(li);
      double l_euclid = 0.0;
      for (int c : l) l_euclid += double(c) * c;
      l_euclid = std::sqrt(l_euclid);
      const double jmin = std::pow(lb, dio.tau1) / dio.gamma;
      for (int j = -jc; j <= jc; ++j)
        for (int jp = -jc; jp <= jc; ++jp) {
          if (j == jp) continue;
          const double lhs = std::abs(wl + spec.d(j) - spec.d(jp));
          if (!(lhs < 2.0 * std::abs(j - jp) * gk / std::pow(lb, dio.tau)))
            continue;
          ++rep.p_members;
          if (gk < dio.delta0 / 6.0 &&
              l_euclid < rep.c1 * std::abs(j - jp))
            ++rep.shape_violations;
          if (std::abs(j) < jmin || std::abs(jp) < jmin) continue;
          ++rep.qualifying;
          const int k = j - jp;
          const double q = std::abs(wl + spec.m_inf * k);
          if (!(q < 2.0 * dio.gamma / std::pow(bracket(ls, k), dio.tau1))) {
            ++rep.counterexamples;
            rep.witness_l = l;
            rep.witness_j = j;
            rep.witness_jp = jp;
          }
        }
    }
  }
  return rep;
}

std::vector<std::vector<double>> sample_box(const DiophantineParams& dio,
                                            int n_samples,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(dio.L, 2.0 * dio.L);
  std::vector<std::vector<double>> out(n_samples,
                                       std::vector<double>(dio.nu));
  for (auto& w : out)
    for (auto& c : w) c = unif(rng);
  return out;
}

void binomial_interval(int excluded, int n, double* lo, double* hi) {
  const double z = 1.959963984540054;
  if (n <= 0) {
    *lo = 0.0;
    *hi = 1.0;
    return;
  }
  const double p = static_cast<double>(excluded) / n;
  const double z2n = z * z / n;
  const double centre = (p + z2n / 2.0) / (1.0 + z2n);
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / (1.0 + z2n);
  *lo = std::max(0.0, centre - half);
  *hi = std::min(1.0, centre + half);
}

std::vector<SampleSpectrum> sample_spectra(
    const std::vector<std::vector<double>>& omegas,
    const std::function<Spectrum(const std::vector<double>&)>& spectrum_of,
    const DiophantineParams& dio) {
  std::vector<SampleSpectrum> out(omegas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    SampleSpectrum& s = out[i];
    s.omega = omegas[i];
    try {
      s.spec = spectrum_of(s.omega);
      s.ok = true;
    } catch (const std::exception& e) {
      s.error = e.what();
      continue;
    }
    s.unit_o0 = unit_o0(s.omega, dio).margin;
    s.unit_o1 = unit_o1(s.omega, s.spec.m_inf, dio).margin;
    s.unit_o2 = unit_o2(s.omega, s.spec, dio).margin;
  }
  return out;
}

MeasureEstimate estimate_excluded_measure(
    const std::vector<SampleSpectrum>& samples, const DiophantineParams& dio,
    std::uint64_t seed) {
  MeasureEstimate est;
  est.gamma = dio.gamma;
  est.kappa = dio.kappa;
  est.seed = seed;
  est.n_samples = static_cast<int>(samples.size());
  const double gk = std::pow(dio.gamma, dio.kappa);
  int excluded = 0;
#pragma omp parallel for reduction(+ : excluded)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const bool in = s.ok && s.unit_o0 >= dio.gamma &&
                    s.unit_o1 >= dio.gamma && s.unit_o2 >= gk;
    if (!in) ++excluded;
  }
  est.excluded = excluded;
  est.fraction = est.n_samples > 0
                     ? static_cast<double>(excluded) / est.n_samples
                     : 0.0;
  binomial_interval(excluded, est.n_samples, &est.ci_low, &est.ci_high);
  return est;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

}  // namespace chkam
