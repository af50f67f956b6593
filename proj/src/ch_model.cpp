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

#include "chkam/ch_model.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace chkam {

void ModelParams::validate() const {
  if (omega.empty()) fail(ErrorKind::kConfig, "omega must be non-empty");
  if (!(m2 < 0.0)) fail(ErrorKind::kConfig, "constraint violated: m2 < 0");
  if (!(m0 + m2 >= 0.0))
    fail(ErrorKind::kConfig, "constraint violated: m0 + m2 >= 0");
  if (!(delta0 > 0.0))
    fail(ErrorKind::kConfig, "constraint violated: delta0 > 0");
  if (!(m0 < -5.0 * m2 - 4.0 * delta0))
    fail(ErrorKind::kConfig, "constraint violated: m0 < -5 m2 - 4 delta0");
  if (!(epsilon >= 0.0))
    fail(ErrorKind::kConfig, "constraint violated: epsilon >= 0");
  if (!(eta0 >= 0.0)) fail(ErrorKind::kConfig, "constraint violated: eta0 >= 0");
  if (!(mu >= 0.0)) fail(ErrorKind::kConfig, "constraint violated: mu >= 0");
}

FourierFunction LinearizedOperator::apply(const FourierFunction& u) const {
  FourierFunction out = chkam::apply(bounded, u);
  const auto d = time_diagonal();
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    out.coeffs[i] += d[i] * u.coeffs[i];
  return out;
}

std::vector<cplx> LinearizedOperator::time_diagonal() const {
  const Lattice box = bounded.lattice();
  const int nj = bounded.n_j();
  std::vector<cplx> d(box.size() * nj);
  for (std::size_t li = 0; li < box.size(); ++li) {
    const cplx v = kI * box.dot(li, omega);
    for (int k = 0; k < nj; ++k) d[li * nj + k] = v;
  }
  return d;
}

double dispersion0(int j, double m_inf, double m0, double m2) {
  const double jd = static_cast<double>(j);
  return m_inf * jd - (m0 + m2) * jd / (1.0 + jd * jd);
}

QpOperator lambda_op(int nu, int l_max, int j_max) {
  if (j_max < 1) fail(ErrorKind::kConfig, "j_max must be >= 1");
  std::vector<cplx> d(2 * j_max + 1);
  for (int j = -j_max; j <= j_max; ++j)
    d[j + j_max] = 1.0 / (1.0 + static_cast<double>(j) * j);
  return QpOperator::diagonal(nu, l_max, j_max, d);
}

QpOperator j_op(int nu, int l_max, int j_max) {
  return compose(lambda_op(nu, l_max, j_max), QpOperator::dx(nu, l_max, j_max));
}

LinearizedOperator build_linearized(const FourierFunction& a0,
                                    const FourierFunction& a2,
                                    const ModelParams& p) {
  if (!a0.same_shape(a2)) fail(ErrorKind::kNumerical, "truncation mismatch");
  if (a0.nu != p.nu()) fail(ErrorKind::kConfig, "omega length differs from nu");
  for (const FourierFunction* a : {&a0, &a2}) {
    if (a->parity_defect(Parity::kEven) > 1e-12)
      fail(ErrorKind::kNumerical, "coefficient is not even");
    if (a->reality_defect() > 1e-12)
      fail(ErrorKind::kNumerical, "coefficient is not real-valued");
  }
  const int jm = a0.j_max;
  const Lattice box = a0.lattice();
  QpOperator b(a0.nu, a0.l_max, jm);
  const std::size_t z = box.zero();
  // Perturbation part -(ij/(1+j^2)) [ a0_k + (ik a2_k)(ij') - a2_k j'^2 ],
  // k = j - j'; the constant part goes through dispersion0.
  for (std::size_t li = 0; li < box.size(); ++li)
    for (int j = -jm; j <= jm; ++j) {
      const cplx jsym = kI * static_cast<double>(j) / (1.0 + double(j) * j);
      for (int jp = -jm; jp <= jm; ++jp) {
        const int k = j - jp;
        if (std::abs(k) > jm) continue;
        const cplx c0 = a0.at(li, k);
        const cplx c2 = a2.at(li, k);
        const double jpd = static_cast<double>(jp);
        const cplx c2x = kI * static_cast<double>(k) * c2;
        b.at(li, j, jp) = -jsym * (c0 + c2x * kI * jpd - c2 * jpd * jpd);
        if (li == z && k == 0)
          b.at(li, j, jp) += kI * dispersion0(j, p.m2, p.m0, p.m2);
      }
    }
  return {p.omega, b};
}

Coefficients synthesize_coefficients(const ModelParams& p, int l_max,
                                     int j_max, double s_target) {
  const int nu = p.nu();
  const double s0 = SobolevParams::s0_for(nu);
  Coefficients out;
  // Low-mode trigonometric polynomial: |l|_inf <= 1, |j| <= 2.
  const int jl = std::min(1, l_max);
  const int jj = std::min(2, j_max);
  FourierFunction jf(nu, l_max, j_max);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Lattice box = jf.lattice();
  for (std::size_t li = 0; li < box.size(); ++li) {
    const int ls = box.sup(li);
    if (ls > jl) continue;
    for (int j = -jj; j <= jj; ++j) {
      const double decay = std::pow(bracket(ls, j), -(s0 + p.mu + 1.0));
      const double re = unif(rng);
      const double im = unif(rng);
      jf.at(li, j) = decay * cplx(re, im);
    }
  }
  const std::size_t n = jf.coeffs.size();
  for (std::size_t i = 0; i < n / 2; ++i) jf.coeffs[n - 1 - i] = std::conj(jf.coeffs[i]);
  jf.coeffs[n / 2] = jf.coeffs[n / 2].real();
  jf.real_valued = true;
  jf *= 1.0 / sobolev_norm(jf, s0 + p.mu);
  out.jfrak = jf;

  FourierFunction sq = multiply(jf, jf);
  sq *= 1.0 / std::max(sobolev_norm(jf, s0), 1e-300);
  out.a0 = project_even(jf);
  out.a0 *= p.epsilon;
  out.a2 = project_even(sq);
  out.a2 *= p.epsilon;
  out.a0.real_valued = out.a2.real_valued = true;
  const double den = sobolev_norm(jf, s_target + p.eta0);
  out.ratio_a0 = sobolev_norm(out.a0, s_target) / den;
  out.ratio_a2 = sobolev_norm(out.a2, s_target) / den;
  return out;
}

}  // namespace chkam
