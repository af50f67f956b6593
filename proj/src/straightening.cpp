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


#include "chkam/straightening.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace chkam {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string format_mode(const Lattice& box, std::size_t li) {
  std::ostringstream os;
  os << "l=(";
  const auto l = box.point(li);
  for (std::size_t d = 0; d < l.size(); ++d) os << (d ? "," : "") << l[d];
  os << ")";
  return os.str();
}

bool all_zero(const FourierFunction& u) {
  for (const auto& c : u.coeffs)
    if (c != cplx(0.0)) return false;
  return true;
}

// Sup over the collocation grid of |u - c|.
double sup_deviation(const FourierFunction& u, double c) {
  const int mp = std::max(64, 2 * u.l_max + 2);
  const int mx = std::max(64, 2 * u.j_max + 2);
  double r = 0.0;
  for (const auto& v : synthesize(u, mp, mx)) r = std::max(r, std::abs(v - c));
  return r;
}

}  // namespace

StraighteningResult solve_straightening(const FourierFunction& a2,
                                        const ModelParams& p,
                                        const DiophantineParams& dio,
                                        double tol, int max_iter) {
  if (a2.nu != p.nu()) fail(ErrorKind::kConfig, "omega length differs from nu");
  const int nu = a2.nu;
  const int lm = a2.l_max;
  const int jm = a2.j_max;
  const Lattice box = a2.lattice();
  const std::size_t z = box.zero();
  const int mp = std::max(64, 2 * lm + 2);
  const int mx = std::max(64, 2 * jm + 2);
  const auto g_a2 = synthesize(a2, mp, mx);

  std::vector<double> div(a2.coeffs.size());
  std::vector<double> thr(a2.coeffs.size());
  for (std::size_t li = 0; li < box.size(); ++li) {
    const double wl = box.dot(li, p.omega);
    const int ls = box.sup(li);
    for (int j = -jm; j <= jm; ++j) {
      div[a2.index(li, j)] = wl + p.m2 * j;
      thr[a2.index(li, j)] = dio.gamma / std::pow(bracket(ls, j), dio.tau);
    }
  }

  StraighteningResult out;
  FourierFunction beta(nu, lm, jm);
  beta.real_valued = true;
  beta.parity = Parity::kOdd;
  for (int it = 1; it <= max_iter; ++it) {
    const FourierFunction bx = dx(beta);
    const FourierFunction a2bx = multiply(a2, bx);
    const double m = p.m2 + (mean(a2) + mean(a2bx)).real();
    const auto g_bx = synthesize(bx, mp, mx);
    const auto g_bt = synthesize(omega_dphi(beta, p.omega), mp, mx);
    double res = 0.0;
    for (std::size_t i = 0; i < g_a2.size(); ++i)
      res = std::max(
          res, std::abs(g_bt[i] + (p.m2 + g_a2[i]) * (1.0 + g_bx[i]) - m));
    out.history.push_back({it, res, m});
    if (res <= tol) {
      out.beta = beta;
      out.m_inf = m;
      out.residual = res;
      out.iterations = it;
      return out;
    }
    if (it == max_iter) break;
    // Truncation floor: the best residual stopped improving.
    constexpr int kStallWindow = 8;
    if (it > kStallWindow) {
      double best_before = INFINITY, best_recent = INFINITY;
      for (int k = 0; k < it; ++k) {
        double& best = k < it - kStallWindow ? best_before : best_recent;
        best = std::min(best, out.history[k].residual);
      }
      if (best_recent > 0.99 * best_before) {
        std::ostringstream os;
        os << "straightening stalled at residual " << best_recent << " after "
           << it << " iterations; enlarge l_max or j_max";
        fail(ErrorKind::kNumerical, os.str());
      }
    }

    FourierFunction rhs = a2 + a2bx;
    rhs *= -1.0;
    rhs.at(z, 0) = 0.0;
    FourierFunction next(nu, lm, jm);
    for (std::size_t li = 0; li < box.size(); ++li)
      for (int j = -jm; j <= jm; ++j) {
        if (li == z && j == 0) continue;
        const std::size_t i = rhs.index(li, j);
        if (rhs.coeffs[i] == cplx(0.0)) continue;
        if (std::abs(div[i]) < thr[i])
          fail(ErrorKind::kResonance, "first-Melnikov resonance at (" +
                                          format_mode(box, li) +
                                          ", j=" + std::to_string(j) + ")");
        next.coeffs[i] = rhs.coeffs[i] / (kI * div[i]);
      }
    beta = project_odd(next);
    beta.real_valued = true;
    beta.parity = Parity::kOdd;
  }
  std::ostringstream os;
  os << "straightening did not converge in " << max_iter
     << " iterations; residual history:";
  for (const auto& h : out.history) os << ' ' << h.residual;
  fail(ErrorKind::kNumerical, os.str());
}

void write_csv(std::ostream& os, const StraighteningResult& sr) {
  const auto prec = os.precision(17);
  os << "iteration,residual,m_estimate\n";
  for (const auto& h : sr.history)
    os << h.iteration << ',' << h.residual << ',' << h.m_estimate << '\n';
  os.precision(prec);
}

QpOperator diffeo_operator(const FourierFunction& beta) {
  const int nu = beta.nu;
  const int lm = beta.l_max;
  const int jm = beta.j_max;
  if (all_zero(beta)) return QpOperator::identity(nu, lm, jm);
  QpOperator a(nu, lm, jm);
  const int mp = oversampled(lm);
  const int mx = oversampled(jm);
  const auto gb = synthesize(beta, mp, mx);
  const std::size_t n = gb.size();
  const Lattice box = a.lattice();
  const bool real = beta.real_valued;
  const int jlo = real ? 0 : -jm;
  // Column j' is the expansion of exp(i j' (x + beta)).
#pragma omp parallel for schedule(dynamic)
  for (int jp = jlo; jp <= jm; ++jp) {
    std::vector<cplx> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = kTwoPi * static_cast<double>(i % mx) / mx;
      g[i] = std::polar(1.0, jp * (x + gb[i].real()));
    }
    const FourierFunction w = analyze(std::move(g), mp, mx, nu, lm, jm);
    for (std::size_t li = 0; li < box.size(); ++li)
      for (int j = -jm; j <= jm; ++j) {
        a.at(li, j, jp) = w.at(li, j);
        if (real && jp > 0)
          a.at(box.neg(li), -j, -jp) = std::conj(w.at(li, j));
      }
  }
  return a;
}

RegularizedOperator regularize(const FourierFunction& a0,
                               const FourierFunction& a2,
                               const StraighteningResult& sr,
                               const ModelParams& p,
                               const RegularizeOptions& opt) {
  const int nu = a0.nu;
  const int lm = a0.l_max;
  const int jm = a0.j_max;
  const int lw = lm + opt.pad_l;
  const int jw = jm + opt.pad_j;
  const double s0 = SobolevParams::s0_for(nu);
  if (!sr.beta.same_shape(a0))
    fail(ErrorKind::kNumerical, "straightening result has a different box");

  RegularizedOperator out;
  out.m_inf = sr.m_inf;
  out.m0 = p.m0;
  out.m2 = p.m2;
  const LinearizedOperator lin_w =
      build_linearized(resized(a0, lw, jw), resized(a2, lw, jw), p);
  const bool trivial = all_zero(sr.beta);
  QpOperator lhat_w;
  QpOperator a_w;
  QpOperator ainv_w;
  if (trivial) {
    a_w = QpOperator::identity(nu, lw, jw);
    ainv_w = a_w;
    lhat_w = lin_w.bounded;
    out.beta_tilde = sr.beta;
  } else {
    FourierFunction beta_w = resized(sr.beta, lw, jw);
    beta_w.real_valued = sr.beta.real_valued;
    beta_w.parity = sr.beta.parity;
    FourierFunction bt_w = invert_diffeo(beta_w, &out.inverse_map_residual);
    a_w = diffeo_operator(beta_w);
    ainv_w = diffeo_operator(bt_w);
    QpOperator inner = omega_derivative(a_w, p.omega);
    inner += compose(lin_w.bounded, a_w);
    lhat_w = compose(ainv_w, inner);
    out.beta_tilde = resized(bt_w, lm, jm);
    out.beta_tilde.real_valued = bt_w.real_valued;
    out.beta_tilde.parity = bt_w.parity;
  }

  // Box transform and its box-exact inverse.
  const QpOperator id = QpOperator::identity(nu, lm, jm);
  QpOperator a = resized(a_w, lm, jm);
  QpOperator x = resized(ainv_w, lm, jm);
  if (!trivial) {
    x = refine_inverse(a, std::move(x), 6, 1e-12, &out.newton_steps);
    out.conjugation_defect =
        op_norm_hs(compose(x, a) - id, s0, nullptr, kDefectNormTol);
  }
  out.transform = std::move(a);
  out.transform_inverse = std::move(x);

  out.op = {p.omega, resized(lhat_w, lm, jm)};
  out.remainder = out.op.bounded;
  const Lattice box = out.remainder.lattice();
  const std::size_t z = box.zero();
  for (int j = -jm; j <= jm; ++j)
    out.remainder.at(z, j, j) -= kI * dispersion0(j, sr.m_inf, p.m0, p.m2);

  out.transform_flags = structure_flags(out.transform);
  out.inverse_flags = structure_flags(out.transform_inverse);
  out.remainder_flags = structure_flags(out.remainder);

  // Fit Q_{j'+k}^{j'}(l) over high columns by c1 (ij') + c0 +
  // sum_{n=1..6} c_{-n} (ij')^{-n}, where Q = remainder + m_inf d_x.
  FormDiagnostics& f = out.form;
  constexpr int kTerms = 8;
  const int kmax = std::max(1, jm / 4);
  const int jlo = std::max(1, jm / 2);
  double zeroth2 = 0.0;
  bool fitted = false;
  for (std::size_t li = 0; li < box.size(); ++li)
    for (int k = -kmax; k <= kmax; ++k) {
      std::vector<int> cols;
      for (int jp = -jm; jp <= jm; ++jp)
        if (std::abs(jp) >= jlo && std::abs(jp + k) <= jm) cols.push_back(jp);
      if (cols.size() < kTerms + 2) continue;
      Eigen::MatrixXcd m(cols.size(), kTerms);
      Eigen::VectorXcd y(cols.size());
      for (std::size_t r = 0; r < cols.size(); ++r) {
        const int jp = cols[r];
        const cplx ij = kI * static_cast<double>(jp);
        cplx pw = ij;
        for (int c = 0; c < kTerms; ++c) {
          m(r, c) = pw;
          pw /= ij;
        }
        cplx q = out.remainder.at(li, jp + k, jp);
        if (li == z && k == 0) q += ij * sr.m_inf;
        y(r) = q;
      }
      const Eigen::VectorXcd c = m.colPivHouseholderQr().solve(y);
      f.fit_residual =
          std::max(f.fit_residual, (m * c - y).cwiseAbs().maxCoeff());
      if (li == z && k == 0) {
        fitted = true;
        f.first_order = c(0).real();
        f.lambda_coefficient = -(c(2).real() + p.m0 + p.m2);
        f.lambda_deviation = std::abs(c(2));
        f.first_order_variation =
            std::max(f.first_order_variation, std::abs(c(0).imag()));
      } else {
        f.first_order_variation =
            std::max(f.first_order_variation, std::abs(c(0)));
      }
      zeroth2 += std::norm(c(1));
    }
  f.zeroth_order_norm = std::sqrt(zeroth2);

  // T1 from the straightening identity, composed with the inverse map.
  {
    FourierFunction bx = dx(sr.beta);
    FourierFunction t = omega_dphi(sr.beta, p.omega) + a2 + multiply(a2, bx);
    bx *= p.m2;
    t += bx;
    t.at(t.lattice().zero(), 0) += p.m2;
    if (!trivial) t = compose_diffeo(t, out.beta_tilde);
    out.t1_defect = sup_deviation(t, sr.m_inf);
  }

  if (opt.check_form) {
    if (!fitted)
      fail(ErrorKind::kConfig,
           "j_max too small for the regularization form check (need >= 7)");
    const double tol = opt.form_tol;
    if (std::abs(f.first_order - sr.m_inf) > tol * (1.0 + std::abs(sr.m_inf)) ||
        f.first_order_variation > tol || f.zeroth_order_norm > tol) {
      std::ostringstream os;
      os << "regularization form check failed: |c1 - m_inf| = "
         << std::abs(f.first_order - sr.m_inf)
         << ", first-order variation = " << f.first_order_variation
         << ", zeroth-order norm = " << f.zeroth_order_norm;
      fail(ErrorKind::kCheck, os.str());
    }
  }
  return out;
}

double symbol_order_diagnostic(const QpOperator& r, double order) {
  const Lattice box = r.lattice();
  const int jm = r.j_max;
  const double s0 = SobolevParams::s0_for(r.nu);
  double best = 0.0;
  for (int jp = -jm; jp <= jm; ++jp) {
    double col = 0.0;
    for (std::size_t li = 0; li < box.size(); ++li) {
      const int ls = box.sup(li);
      for (int j = -jm; j <= jm; ++j)
        col += std::norm(r.at(li, j, jp)) *
               std::pow(bracket(ls, j - jp), 2.0 * s0);
    }
    best = std::max(best, std::pow(bracket(0, jp), -order) * std::sqrt(col));
  }
  return best;
}

}  // namespace chkam
