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


#include "chkam/kam_engine.hpp"

#include <climits>
#include <cmath>
#include <ostream>
#include <sstream>

namespace chkam {
namespace {

std::string format_triple(const Lattice& box, std::size_t li, int j, int jp) {
  std::ostringstream os;
  os << "(l=(";
  const auto l = box.point(li);
  for (std::size_t d = 0; d < l.size(); ++d) os << (d ? "," : "") << l[d];
  os << "), j=" << j << ", j'=" << jp << ")";
  return os.str();
}

}  // namespace

KamSchedule KamSchedule::make(double tau) {
  KamSchedule s;
  s.exponent_a = 6.0 * tau + 3.0;
  s.exponent_b = s.exponent_a + 1.0;
  return s;
}

int KamSchedule::cutoff(int n) const {
  if (n < 0) return 1;
  const double v = std::pow(static_cast<double>(N0), std::pow(1.5, n));
  return v >= static_cast<double>(INT_MAX) ? INT_MAX
                                           : static_cast<int>(std::floor(v));
}

void KamSchedule::validate() const {
  if (N0 < 2) fail(ErrorKind::kConfig, "constraint violated: N0 >= 2");
  if (max_iter < 0) fail(ErrorKind::kConfig, "constraint violated: max_iter >= 0");
  if (!(tol > 0.0)) fail(ErrorKind::kConfig, "constraint violated: tol > 0");
  if (!(tau0 > 0.0)) fail(ErrorKind::kConfig, "constraint violated: tau0 > 0");
}

double smallness_condition(const KamSchedule& sched, double epsilon,
                           const DiophantineParams& dio) {
  return std::pow(static_cast<double>(sched.N0), sched.tau0) * epsilon *
         std::pow(dio.gamma, -1.0 - dio.kappa);
}

void write_csv(std::ostream& os, const KamTrace& trace) {
  const auto prec = os.precision(17);
  os << "n,N_n,remainder_norm,modulo_tame_estimate,max_eig_update,"
        "min_divisor,homological_residual,conjugation_defect,imag_defect,"
        "psi_norm\n";
  for (const auto& r : trace.steps)
    os << r.n << ',' << r.N << ',' << r.remainder_norm << ','
       << r.modulo_tame_estimate << ',' << r.max_eig_update << ','
       << r.min_divisor << ',' << r.homological_residual << ','
       << r.conjugation_defect << ',' << r.imag_defect << ',' << r.psi_norm
       << '\n';
  if (trace.remainder_norms.size() > trace.steps.size())
    os << trace.steps.size() << ",," << trace.remainder_norms.back()
       << ",,,,,,,\n";
  os.precision(prec);
}

KamState split(const RegularizedOperator& lhat) {
  return {Spectrum::unperturbed(lhat.m_inf, lhat.m0, lhat.m2,
                                lhat.remainder.j_max),
          lhat.remainder};
}

QpOperator solve_homological(const QpOperator& r, const Spectrum& spec,
                             const std::vector<double>& omega, int n_cut,
                             const DiophantineParams& dio,
                             double* min_divisor) {
  const Lattice box = r.lattice();
  const int jm = r.j_max;
  const std::size_t z = box.zero();
  const double gk = std::pow(dio.gamma, dio.kappa);
  QpOperator psi(r.nu, r.l_max, jm);
  double mind = INFINITY;
  for (std::size_t li = 0; li < box.size(); ++li) {
    const int ls = box.sup(li);
    if (ls > n_cut) continue;
    const double wl = box.dot(li, omega);
    const double lt = std::pow(static_cast<double>(std::max(1, ls)), dio.tau);
    for (int j = -jm; j <= jm; ++j)
      for (int jp = -jm; jp <= jm; ++jp) {
        if (li == z && j == jp) continue;
        const cplx v = r.at(li, j, jp);
        if (v == cplx(0.0)) continue;
        const double div = wl + spec.d(j) - spec.d(jp);
        const double thr = gk * std::abs(j - jp) / lt;
        if (std::abs(div) < thr || div == 0.0)
          fail(ErrorKind::kResonance, "second-Melnikov resonance at " +
                                          format_triple(box, li, j, jp));
        if (j != jp) mind = std::min(mind, std::abs(div));
        psi.at(li, j, jp) = -v / (kI * div);
      }
  }
  if (min_divisor != nullptr) *min_divisor = mind;
  return psi;
}

KamStep kam_step(const KamState& state, int n,
                 const std::vector<double>& omega, const KamSchedule& sched,
                 const DiophantineParams& dio) {
  const QpOperator& r = state.remainder;
  const int nu = r.nu;
  const int lm = r.l_max;
  const int jm = r.j_max;
  const std::size_t z = r.lattice().zero();
  const double s0 = SobolevParams::s0_for(nu);
  const int n_cut = sched.cutoff(n);

  KamStep out;
  KamRecord& rec = out.record;
  rec.n = n;
  rec.N = n_cut;
  rec.remainder_norm = state.remainder_norm >= 0.0 ? state.remainder_norm
                                                   : op_norm_hs(r, s0);
  rec.modulo_tame_estimate =
      modulo_tame_constant({{omega, r}}, s0, 0.0, dio.gamma,
                           sched.probe_seed);

  auto [r_lo, r_hi] = smooth_project(r, n_cut);
  const QpOperator rd = diag_part(r);
  QpOperator psi = solve_homological(r, state.spec, omega, n_cut, dio,
                                     &rec.min_divisor);
  const QpOperator d_n = state.spec.as_operator(nu, lm);
  {
    QpOperator h = omega_derivative(psi, omega);
    for (std::size_t li = 0; li < psi.n_l(); ++li)
      for (int j = -jm; j <= jm; ++j)
        for (int jp = -jm; jp <= jm; ++jp)
          h.at(li, j, jp) +=
              kI * (state.spec.d(j) - state.spec.d(jp)) * psi.at(li, j, jp);
    h += r_lo;
    h -= rd;
    rec.homological_residual = op_norm_hs(h, s0, nullptr, kDefectNormTol);
  }
  rec.psi_preserving_defect = structure_flags(psi).preserving_defect;

  NeumannInfo ni;
  out.phi_inverse = neumann_invert(psi, 0.0, &ni);
  rec.psi_norm = ni.norm;
  rec.neumann_terms = ni.terms;
  out.phi = QpOperator::identity(nu, lm, jm) + psi;

  QpOperator inner = r_hi;
  inner += compose(r, psi);
  inner -= compose(psi, rd);
  QpOperator next = compose(out.phi_inverse, inner);

  // r_j <- r_j + (1/i) R_jj(0), kept real and odd.
  Spectrum spec = state.spec;
  std::vector<double> upd(2 * jm + 1);
  for (int j = -jm; j <= jm; ++j) {
    const cplx raw = -kI * r.at(z, j, j);
    rec.imag_defect = std::max(rec.imag_defect, std::abs(raw.imag()));
    upd[j + jm] = spec.r_at(j) + raw.real();
  }
  for (int j = -jm; j <= jm; ++j)
    spec.r[j + jm] = 0.5 * (upd[j + jm] - upd[-j + jm]);
  for (int j = -jm; j <= jm; ++j) {
    const double delta = spec.r[j + jm] - state.spec.r_at(j);
    rec.max_eig_update =
        std::max(rec.max_eig_update, bracket(0, j) * std::abs(delta));
  }

  {
    QpOperator full = d_n + r;
    QpOperator lhs = omega_derivative(psi, omega);
    lhs += compose(full, out.phi);
    lhs = compose(out.phi_inverse, lhs);
    lhs -= spec.as_operator(nu, lm);
    lhs -= next;
    rec.conjugation_defect = op_norm_hs(lhs, s0, nullptr, kDefectNormTol);
  }
  const StructureFlags nf = structure_flags(next);
  rec.next_real_defect = nf.real_defect;
  rec.next_reversible_defect = nf.reversible_defect;

  out.next = {std::move(spec), std::move(next)};
  return out;
}

Diagonalization diagonalize(const KamState& l0,
                            const std::vector<double>& omega,
                            const KamSchedule& sched,
                            const DiophantineParams& dio) {
  const QpOperator& r0 = l0.remainder;
  const int nu = r0.nu;
  const int lm = r0.l_max;
  const int jm = r0.j_max;
  const double s0 = SobolevParams::s0_for(nu);

  Diagonalization out;
  KamState st = l0;
  QpOperator gamma = QpOperator::identity(nu, lm, jm);
  QpOperator gamma_inv = gamma;
  double norm = op_norm_hs(st.remainder, s0);
  st.remainder_norm = norm;
  out.trace.remainder_norms.push_back(norm);
  int n = 0;
  for (; norm > sched.tol; ++n) {
    if (n >= sched.max_iter) {
      std::ostringstream os;
      os << "KAM did not converge in " << sched.max_iter
         << " iterations; remainder norms:";
      for (double v : out.trace.remainder_norms) os << ' ' << v;
      throw KamFailure(ErrorKind::kNumerical, os.str(), out.trace);
    }
    KamStep step;
    try {
      step = kam_step(st, n, omega, sched, dio);
    } catch (const Error& e) {
      throw KamFailure(e.kind(), e.what(), out.trace);
    }
    out.trace.steps.push_back(step.record);
    gamma = compose(gamma, step.phi);
    gamma_inv = compose(step.phi_inverse, gamma_inv);
    st = std::move(step.next);
    norm = op_norm_hs(st.remainder, s0);
    st.remainder_norm = norm;
    out.trace.remainder_norms.push_back(norm);
  }
  if (n > 0) gamma_inv = refine_inverse(gamma, std::move(gamma_inv));
  out.iterations = n;
  out.final_remainder = norm;
  out.spec = st.spec;

  if (n == 0) {
    out.conjugation_defect = norm;
  } else {
    QpOperator lhs = omega_derivative(gamma, omega);
    lhs += compose(l0.spec.as_operator(nu, lm) + r0, gamma);
    lhs = compose(gamma_inv, lhs);
    lhs -= out.spec.as_operator(nu, lm);
    out.conjugation_defect = op_norm_hs(lhs, s0, nullptr, kDefectNormTol);
  }
  out.verified = out.conjugation_defect <= 10.0 * sched.tol;
  out.transform = std::move(gamma);
  out.transform_inverse = std::move(gamma_inv);
  return out;
}

TransformProduct compose_transform(const QpOperator& u1,
                                   const QpOperator& u1_inv,
                                   const QpOperator& u2,
                                   const QpOperator& u2_inv) {
  const double s0 = SobolevParams::s0_for(u1.nu);
  TransformProduct out;
  out.transform = compose(u1, u2);
  out.transform_inverse =
      refine_inverse(out.transform, compose(u2_inv, u1_inv));
  out.inverse_defect = op_norm_hs(
      compose(out.transform_inverse, out.transform) -
          QpOperator::identity(u1.nu, u1.l_max, u1.j_max),
      s0, nullptr, kDefectNormTol);
  out.bound = op_norm_hs(out.transform, s0, nullptr, 1e-6);
  return out;
}

}  // namespace chkam
