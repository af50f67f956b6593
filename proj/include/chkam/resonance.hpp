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


// Non-resonance conditions on the frequency vector and Monte-Carlo
// estimates of the excluded measure.

#ifndef CHKAM_RESONANCE_HPP_
#define CHKAM_RESONANCE_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chkam/spectrum.hpp"

namespace chkam {

struct DiophantineParams {
  int nu = 2;
  // Frequencies live in [L, 2L]^nu.
  double L = 1.0;
  double gamma = 0.05;
  double kappa = 2.0;
  double tau = 7.0;
  double tau1 = 3.0;
  double delta0 = 0.5;
  int l_cut = 8;
  int j_cut = 16;

  void validate() const;
  double omega_max() const;
};

struct Membership {
  bool pass = true;
  // Smallest |lhs| / rhs over the scan; +inf when nothing was scanned.
  double margin = 0.0;
  std::vector<int> l;
  int j = 0;
  int jp = 0;
};

// |omega.l| >= 2 gamma / <l>^nu for 0 < |l|_inf <= l_cut.
Membership check_diophantine(const std::vector<double>& omega,
                             const DiophantineParams& dio);
// |omega.l + m_inf j| >= 2 gamma / <l,j>^tau for (l,j) != 0.
Membership check_first_melnikov(const std::vector<double>& omega, double m_inf,
                                const DiophantineParams& dio);
// |omega.l + d_j - d_j'| >= 2 gamma^kappa |j - j'| / <l>^tau, j != j'.
Membership check_second_melnikov(const std::vector<double>& omega,
                                 const Spectrum& spec,
                                 const DiophantineParams& dio);

struct SeparationReport {
  bool pass = true;
  // m2 < 0, m0 + m2 >= 0, m0 < -5 m2 - 4 delta0.
  bool hypotheses = true;
  double delta0 = 0.0;
  double upper = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  int violations = 0;
  int witness_j = 0;
  int witness_jp = 0;
};

// delta0 |j-j'| <= |d0_j - d0_j'| <= (|m_inf| + 5/4 |m0+m2|) |j-j'| on the
// unperturbed spectrum for |j|, |j'| <= j_cut.
SeparationReport verify_separation_bounds(const Spectrum& spec, double delta0,
                                          int j_cut);

struct InclusionReport {
  long long p_members = 0;
  long long qualifying = 0;
  long long counterexamples = 0;
  // Samples in P with gamma^kappa < delta0/6 that break |l| >= C1 |j - j'|.
  long long shape_violations = 0;
  double c1 = 0.0;
  std::vector<int> witness_l;
  int witness_j = 0;
  int witness_jp = 0;
};

// For samples in P_{l j j'}(gamma^kappa, tau) with |j|,|j'| >=
// <l>^tau1 / gamma, checks membership in Q_{l, j - j'}(gamma, tau1).
InclusionReport inclusion_audit(
    const std::vector<std::vector<double>>& omega_samples,
    const std::function<Spectrum(const std::vector<double>&)>& spectrum_of,
    const DiophantineParams& dio);

struct MeasureEstimate {
  double gamma = 0.0;
  double kappa = 0.0;
  int n_samples = 0;
  int excluded = 0;
  double fraction = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t seed = 0;
};

// Uniform samples of [L, 2L]^nu.
std::vector<std::vector<double>> sample_box(const DiophantineParams& dio,
                                            int n_samples, std::uint64_t seed);

// 95% Wilson interval.
void binomial_interval(int excluded, int n, double* lo, double* hi);

// Per-sample spectrum shared across a (gamma, kappa) grid. Margins are
// taken at gamma = 1: O0 and O1 hold iff the margin is at least gamma, O2
// iff it is at least gamma^kappa. ok = false marks a pipeline failure,
// which counts as excluded.
struct SampleSpectrum {
  std::vector<double> omega;
  bool ok = false;
  std::string error;
  Spectrum spec;
  double unit_o0 = 0.0;
  double unit_o1 = 0.0;
  double unit_o2 = 0.0;
};

std::vector<SampleSpectrum> sample_spectra(
    const std::vector<std::vector<double>>& omegas,
    const std::function<Spectrum(const std::vector<double>&)>& spectrum_of,
    const DiophantineParams& dio);

MeasureEstimate estimate_excluded_measure(
    const std::vector<SampleSpectrum>& samples, const DiophantineParams& dio,
    std::uint64_t seed);

// log-log least squares slope.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace chkam

#endif  // CHKAM_RESONANCE_HPP_
