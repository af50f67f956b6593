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

#include "chkam/fourier_field.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "chkam/spectral_grid.hpp"

namespace chkam {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Parity parity_product(Parity a, Parity b) {
  if (a == Parity::kNone || b == Parity::kNone) return Parity::kNone;
  return a == b ? Parity::kEven : Parity::kOdd;
}

std::vector<int> grid_dims(int nu, int m_phi, int m_x) {
  std::vector<int> dims(nu, m_phi);
  dims.push_back(m_x);
  return dims;
}

// Sum_j c[j] exp(i j x) for j in [-j_max, j_max].
cplx eval_x_series(const cplx* c, int j_max, double x) {
  const cplx e = std::polar(1.0, x);
  cplx p = std::polar(1.0, -j_max * x);
  cplx acc = 0.0;
  for (int j = 0; j < 2 * j_max + 1; ++j) {
    acc += c[j] * p;
    p *= e;
  }
  return acc;
}

}  // namespace

FourierFunction::FourierFunction(int nu_, int l_max_, int j_max_)
    : nu(nu_), l_max(l_max_), j_max(j_max_) {
  if (nu < 1 || l_max < 0 || j_max < 0)
    fail(ErrorKind::kConfig, "invalid Fourier truncation");
  coeffs.assign(n_l() * n_j(), cplx(0.0));
}

cplx FourierFunction::get(const std::vector<int>& l, int j) const {
  const Lattice box = lattice();
  if (static_cast<int>(l.size()) != nu || !box.contains(l.data()) ||
      std::abs(j) > j_max)
    return 0.0;
  return at(box.flatten(l.data()), j);
}

void FourierFunction::set(const std::vector<int>& l, int j, cplx v) {
  const Lattice box = lattice();
  if (static_cast<int>(l.size()) != nu || !box.contains(l.data()) ||
      std::abs(j) > j_max)
    fail(ErrorKind::kNumerical, "mode outside truncation");
  at(box.flatten(l.data()), j) = v;
}

double FourierFunction::reality_defect() const {
  double d = 0.0;
  const std::size_t n = coeffs.size();
  for (std::size_t i = 0; i < n; ++i)
    d = std::max(d, std::abs(coeffs[n - 1 - i] - std::conj(coeffs[i])));
  return d;
}

double FourierFunction::parity_defect(Parity p) const {
  if (p == Parity::kNone) return 0.0;
  const double sgn = p == Parity::kEven ? 1.0 : -1.0;
  double d = 0.0;
  const std::size_t n = coeffs.size();
  for (std::size_t i = 0; i < n; ++i)
    d = std::max(d, std::abs(coeffs[n - 1 - i] - sgn * coeffs[i]));
  return d;
}

FourierFunction FourierFunction::constant(int nu, int l_max, int j_max,
                                          cplx c) {
  FourierFunction u(nu, l_max, j_max);
  u.at(u.lattice().zero(), 0) = c;
  u.real_valued = c.imag() == 0.0;
  u.parity = Parity::kEven;
  return u;
}

FourierFunction FourierFunction::mode(int nu, int l_max, int j_max,
                                      const std::vector<int>& l, int j,
                                      cplx value) {
  FourierFunction u(nu, l_max, j_max);
  u.set(l, j, value);
  return u;
}

FourierFunction& FourierFunction::operator+=(const FourierFunction& o) {
  if (!same_shape(o)) fail(ErrorKind::kNumerical, "truncation mismatch");
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
  real_valued = real_valued && o.real_valued;
  if (parity != o.parity) parity = Parity::kNone;
  return *this;
}

FourierFunction& FourierFunction::operator-=(const FourierFunction& o) {
  if (!same_shape(o)) fail(ErrorKind::kNumerical, "truncation mismatch");
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
  real_valued = real_valued && o.real_valued;
  if (parity != o.parity) parity = Parity::kNone;
  return *this;
}

FourierFunction& FourierFunction::operator*=(cplx c) {
  for (auto& v : coeffs) v *= c;
  real_valued = real_valued && c.imag() == 0.0;
  return *this;
}

FourierFunction operator+(FourierFunction a, const FourierFunction& b) {
  return a += b;
}
FourierFunction operator-(FourierFunction a, const FourierFunction& b) {
  return a -= b;
}
FourierFunction operator*(cplx c, FourierFunction a) { return a *= c; }

double sobolev_norm(const FourierFunction& u, double s) {
  if (s < 0.0) fail(ErrorKind::kNumerical, "negative Sobolev index");
  const Lattice box = u.lattice();
  double acc = 0.0;
  for (std::size_t li = 0; li < box.size(); ++li) {
    const int ls = box.sup(li);
    for (int j = -u.j_max; j <= u.j_max; ++j) {
      const double w = std::pow(bracket(ls, j), s);
      acc += std::norm(u.at(li, j)) * w * w;
    }
  }
  return std::sqrt(acc);
}

double max_abs_coeff(const FourierFunction& u) {
  double m = 0.0;
  for (const auto& c : u.coeffs) m = std::max(m, std::abs(c));
  return m;
}

double weighted_lip_norm(const std::vector<OmegaSample>& samples, double s,
                         double gamma) {
  if (samples.size() < 2)
    fail(ErrorKind::kNumerical, "insufficient parameter samples");
  double sup = 0.0;
  for (const auto& smp : samples) sup = std::max(sup, sobolev_norm(smp.u, s));
  double lip = 0.0;
  const double s_lip = std::max(0.0, s - 1.0);
  for (std::size_t a = 0; a < samples.size(); ++a) {
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      double dist = 0.0;
      for (std::size_t k = 0; k < samples[a].omega.size(); ++k) {
        const double d = samples[a].omega[k] - samples[b].omega[k];
        dist += d * d;
      }
      dist = std::sqrt(dist);
      if (dist == 0.0) continue;
      const FourierFunction diff = samples[a].u - samples[b].u;
      lip = std::max(lip, sobolev_norm(diff, s_lip) / dist);
    }
  }
  return sup + gamma * lip;
}

std::vector<cplx> synthesize(const FourierFunction& u, int m_phi, int m_x) {
  if (m_phi < 2 * u.l_max + 1 || m_x < 2 * u.j_max + 1)
    fail(ErrorKind::kNumerical, "collocation grid too coarse");
  const Lattice box = u.lattice();
  const auto gmap = lattice_to_grid(box, m_phi);
  std::size_t n_phi = 1;
  for (int d = 0; d < u.nu; ++d) n_phi *= m_phi;
  std::vector<cplx> g(n_phi * m_x, cplx(0.0));
  for (std::size_t li = 0; li < box.size(); ++li)
    for (int j = -u.j_max; j <= u.j_max; ++j)
      g[gmap[li] * m_x + ((j % m_x) + m_x) % m_x] = u.at(li, j);
  dft(g.data(), grid_dims(u.nu, m_phi, m_x), 1, +1);
  return g;
}

FourierFunction analyze(std::vector<cplx> values, int m_phi, int m_x, int nu,
                        int l_max, int j_max) {
  if (m_phi < 2 * l_max + 1 || m_x < 2 * j_max + 1)
    fail(ErrorKind::kNumerical, "collocation grid too coarse");
  dft(values.data(), grid_dims(nu, m_phi, m_x), 1, -1);
  FourierFunction u(nu, l_max, j_max);
  const Lattice box = u.lattice();
  const auto gmap = lattice_to_grid(box, m_phi);
  const double scale = 1.0 / static_cast<double>(values.size());
  for (std::size_t li = 0; li < box.size(); ++li)
    for (int j = -j_max; j <= j_max; ++j)
      u.at(li, j) = values[gmap[li] * m_x + ((j % m_x) + m_x) % m_x] * scale;
  return u;
}

std::vector<cplx> synthesize_phi(const FourierFunction& u, int m_phi) {
  const Lattice box = u.lattice();
  const auto gmap = lattice_to_grid(box, m_phi);
  std::size_t n_phi = 1;
  for (int d = 0; d < u.nu; ++d) n_phi *= m_phi;
  const int nj = u.n_j();
  std::vector<cplx> g(n_phi * nj, cplx(0.0));
  for (std::size_t li = 0; li < box.size(); ++li)
    for (int jj = 0; jj < nj; ++jj) g[gmap[li] * nj + jj] = u.coeffs[li * nj + jj];
  dft(g.data(), std::vector<int>(u.nu, m_phi), nj, +1);
  return g;
}

FourierFunction multiply(const FourierFunction& u, const FourierFunction& v) {
  if (u.nu != v.nu) fail(ErrorKind::kNumerical, "mismatched nu in product");
  const int lm = std::max(u.l_max, v.l_max);
  const int jm = std::max(u.j_max, v.j_max);
  const int mp = oversampled(lm);
  const int mx = oversampled(jm);
  auto gu = synthesize(u, mp, mx);
  const auto gv = synthesize(v, mp, mx);
  for (std::size_t i = 0; i < gu.size(); ++i) gu[i] *= gv[i];
  FourierFunction w = analyze(std::move(gu), mp, mx, u.nu, lm, jm);
  w.real_valued = u.real_valued && v.real_valued;
  w.parity = parity_product(u.parity, v.parity);
  return w;
}

FourierFunction compose_diffeo(const FourierFunction& u,
                               const FourierFunction& beta) {
  if (u.nu != beta.nu) fail(ErrorKind::kNumerical, "mismatched nu");
  const int mp = oversampled(std::max(u.l_max, beta.l_max));
  const int mx = oversampled(std::max(u.j_max, beta.j_max));
  const auto gb = synthesize(beta, mp, mx);
  const auto gbx = synthesize(dx(beta), mp, mx);
  double slope = 0.0;
  for (const auto& v : gbx) slope = std::max(slope, std::abs(v));
  if (slope > 0.5)
    fail(ErrorKind::kNumerical, "diffeomorphism slope bound violated");
  const auto uphi = synthesize_phi(u, mp);
  const std::size_t n_phi = gb.size() / mx;
  const int nj = u.n_j();
  std::vector<cplx> g(gb.size());
#pragma omp parallel for
  for (std::size_t p = 0; p < n_phi; ++p) {
    for (int k = 0; k < mx; ++k) {
      const double x = kTwoPi * k / mx + gb[p * mx + k].real();
      g[p * mx + k] = eval_x_series(&uphi[p * nj], u.j_max, x);
    }
  }
  FourierFunction w = analyze(std::move(g), mp, mx, u.nu, u.l_max, u.j_max);
  w.real_valued = u.real_valued && beta.real_valued;
  w.parity = beta.parity == Parity::kOdd ? u.parity : Parity::kNone;
  return w;
}

FourierFunction invert_diffeo(const FourierFunction& beta, double* residual) {
  const int mp = oversampled(beta.l_max);
  const int mx = std::max(64, oversampled(beta.j_max));
  const auto gbx = synthesize(dx(beta), mp, mx);
  double slope = 0.0;
  for (const auto& v : gbx) slope = std::max(slope, std::abs(v));
  if (slope > 0.5)
    fail(ErrorKind::kNumerical, "diffeomorphism slope bound violated");
  const auto bphi = synthesize_phi(beta, mp);
  const auto bxphi = synthesize_phi(dx(beta), mp);
  const std::size_t n_phi = bphi.size() / beta.n_j();
  const int nj = beta.n_j();
  std::vector<cplx> q(n_phi * mx);
  double worst = 0.0;
  bool converged = true;
#pragma omp parallel for reduction(max : worst) reduction(&& : converged)
  for (std::size_t p = 0; p < n_phi; ++p) {
    const cplx* b = &bphi[p * nj];
    const cplx* bx = &bxphi[p * nj];
    for (int k = 0; k < mx; ++k) {
      const double y = kTwoPi * k / mx;
      double qq = -eval_x_series(b, beta.j_max, y).real();
      double f = 0.0;
      bool ok = false;
      for (int it = 0; it < 50; ++it) {
        f = qq + eval_x_series(b, beta.j_max, y + qq).real();
        if (std::abs(f) <= 1e-15) {
          ok = true;
          break;
        }
        const double fp = 1.0 + eval_x_series(bx, beta.j_max, y + qq).real();
        const double step = f / fp;
        qq -= step;
        if (std::abs(step) <= 1e-16) {
          ok = true;
          break;
        }
      }
      worst = std::max(worst, std::abs(f));
      converged = converged && ok;
      q[p * mx + k] = qq;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "diffeomorphism inversion did not converge in 50 Newton steps, "
           "max residual "
        << worst;
    fail(ErrorKind::kNumerical, msg.str());
  }
  FourierFunction bt =
      analyze(std::move(q), mp, mx, beta.nu, beta.l_max, beta.j_max);
  bt.real_valued = beta.real_valued;
  bt.parity = beta.parity == Parity::kOdd ? Parity::kOdd : Parity::kNone;
  if (beta.real_valued) {
    // Re-impose exact conjugate symmetry lost to roundoff.
    const std::size_t n = bt.coeffs.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
      const cplx a = 0.5 * (bt.coeffs[i] + std::conj(bt.coeffs[n - 1 - i]));
      bt.coeffs[i] = a;
      bt.coeffs[n - 1 - i] = std::conj(a);
    }
    bt.coeffs[n / 2] = bt.coeffs[n / 2].real();
  }
  if (beta.parity == Parity::kOdd) bt = project_odd(bt);
  if (residual != nullptr) {
    const auto btg = synthesize(bt, mp, mx);
    double r = 0.0;
    for (std::size_t p = 0; p < n_phi; ++p)
      for (int k = 0; k < mx; ++k) {
        const double y = kTwoPi * k / mx;
        const double t = btg[p * mx + k].real();
        r = std::max(r, std::abs(t + eval_x_series(&bphi[p * nj],
                                                    beta.j_max, y + t)
                                         .real()));
      }
    *residual = r;
  }
  return bt;
}

FourierFunction project_even(const FourierFunction& u) {
  FourierFunction w = u;
  const std::size_t n = u.coeffs.size();
  for (std::size_t i = 0; i < n; ++i)
    w.coeffs[i] = 0.5 * (u.coeffs[i] + u.coeffs[n - 1 - i]);
  w.parity = Parity::kEven;
  return w;
}

FourierFunction project_odd(const FourierFunction& u) {
  FourierFunction w = u;
  const std::size_t n = u.coeffs.size();
  for (std::size_t i = 0; i < n; ++i)
    w.coeffs[i] = 0.5 * (u.coeffs[i] - u.coeffs[n - 1 - i]);
  w.parity = Parity::kOdd;
  return w;
}

FourierFunction majorant(const FourierFunction& u) {
  FourierFunction w = u;
  for (auto& c : w.coeffs) c = std::abs(c);
  w.real_valued = false;
  w.parity = Parity::kNone;
  return w;
}

FourierFunction resized(const FourierFunction& u, int l_max, int j_max) {
  FourierFunction w(u.nu, l_max, j_max);
  const Lattice src = u.lattice();
  const Lattice dst = w.lattice();
  std::vector<int> l(u.nu);
  const int jm = std::min(u.j_max, j_max);
  for (std::size_t li = 0; li < src.size(); ++li) {
    src.unflatten(li, l.data());
    if (!dst.contains(l.data())) continue;
    const std::size_t di = dst.flatten(l.data());
    for (int j = -jm; j <= jm; ++j) w.at(di, j) = u.at(li, j);
  }
  w.real_valued = u.real_valued;
  w.parity = u.parity;
  return w;
}

FourierFunction dx(const FourierFunction& u) {
  FourierFunction w = u;
  for (std::size_t li = 0; li < u.n_l(); ++li)
    for (int j = -u.j_max; j <= u.j_max; ++j)
      w.at(li, j) *= kI * static_cast<double>(j);
  if (u.parity == Parity::kEven) w.parity = Parity::kOdd;
  if (u.parity == Parity::kOdd) w.parity = Parity::kEven;
  return w;
}

FourierFunction omega_dphi(const FourierFunction& u,
                           const std::vector<double>& omega) {
  FourierFunction w = u;
  const Lattice box = u.lattice();
  for (std::size_t li = 0; li < box.size(); ++li) {
    const double wl = box.dot(li, omega);
    for (int j = -u.j_max; j <= u.j_max; ++j) w.at(li, j) *= kI * wl;
  }
  if (u.parity == Parity::kEven) w.parity = Parity::kOdd;
  if (u.parity == Parity::kOdd) w.parity = Parity::kEven;
  return w;
}

cplx mean(const FourierFunction& u) { return u.at(u.lattice().zero(), 0); }

cplx evaluate(const FourierFunction& u, const double* phi, double x) {
  const Lattice box = u.lattice();
  std::vector<int> l(u.nu);
  cplx acc = 0.0;
  for (std::size_t li = 0; li < box.size(); ++li) {
    box.unflatten(li, l.data());
    double lp = 0.0;
    for (int d = 0; d < u.nu; ++d) lp += l[d] * phi[d];
    acc += std::polar(1.0, lp) * eval_x_series(&u.coeffs[li * u.n_j()],
                                               u.j_max, x);
  }
  return acc;
}

void write_csv(std::ostream& os, const FourierFunction& u) {
  for (int d = 0; d < u.nu; ++d) os << "l" << d + 1 << ",";
  os << "j,re,im\n";
  const Lattice box = u.lattice();
  std::vector<int> l(u.nu);
  std::ostringstream line;
  line.precision(17);
  for (std::size_t li = 0; li < box.size(); ++li) {
    box.unflatten(li, l.data());
    for (int j = -u.j_max; j <= u.j_max; ++j) {
      const cplx c = u.at(li, j);
      if (c == cplx(0.0)) continue;
      line.str("");
      for (int d = 0; d < u.nu; ++d) line << l[d] << ",";
      line << j << "," << c.real() << "," << c.imag() << "\n";
      os << line.str();
    }
  }
}

FourierFunction read_csv(std::istream& is, int nu, int l_max, int j_max,
                         bool real_valued) {
  FourierFunction u(nu, l_max, j_max);
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::kConfig, "empty function CSV");
  std::vector<int> l(nu);
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream in(line);
    int j = 0;
    double re = 0.0, im = 0.0;
    for (int d = 0; d < nu; ++d) in >> l[d];
    in >> j >> re >> im;
    if (!in) fail(ErrorKind::kConfig, "malformed CSV row " + std::to_string(row));
    if (!u.lattice().contains(l.data()) || std::abs(j) > j_max)
      fail(ErrorKind::kConfig,
           "CSV row " + std::to_string(row) + " outside truncation");
    u.set(l, j, cplx(re, im));
  }
  if (real_valued && u.reality_defect() > 1e-12)
    fail(ErrorKind::kConfig, "CSV coefficients violate the reality flag");
  u.real_valued = real_valued;
  return u;
}

}  // namespace chkam
