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

#include "chkam/qp_operator.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "chkam/spectral_grid.hpp"

namespace chkam {
namespace {

using RowMat =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

void require_same(const QpOperator& a, const QpOperator& b) {
  if (!a.same_shape(b)) fail(ErrorKind::kNumerical, "truncation mismatch");
}

std::size_t grid_points(int nu, int m) {
  std::size_t n = 1;
  for (int d = 0; d < nu; ++d) n *= static_cast<std::size_t>(m);
  return n;
}

std::vector<cplx> to_phase_grid(const QpOperator& a, int m,
                                const std::vector<std::size_t>& gmap) {
  const std::size_t bs = a.block();
  std::vector<cplx> g(grid_points(a.nu, m) * bs, cplx(0.0));
  for (std::size_t li = 0; li < a.n_l(); ++li)
    std::copy(a.block_ptr(li), a.block_ptr(li) + bs, g.begin() + gmap[li] * bs);
  dft(g.data(), std::vector<int>(a.nu, m), static_cast<int>(bs), +1);
  return g;
}

void from_phase_grid(std::vector<cplx>& g, int m,
                     const std::vector<std::size_t>& gmap, QpOperator& out) {
  const std::size_t bs = out.block();
  dft(g.data(), std::vector<int>(out.nu, m), static_cast<int>(bs), -1);
  const double scale = 1.0 / static_cast<double>(grid_points(out.nu, m));
  for (std::size_t li = 0; li < out.n_l(); ++li) {
    const cplx* src = g.data() + gmap[li] * bs;
    cplx* dst = out.block_ptr(li);
    for (std::size_t k = 0; k < bs; ++k) dst[k] = src[k] * scale;
  }
}

std::vector<double> sobolev_weights(const Lattice& box, int j_max, double s) {
  const int nj = 2 * j_max + 1;
  std::vector<double> w(box.size() * nj);
  for (std::size_t li = 0; li < box.size(); ++li) {
    const int ls = box.sup(li);
    for (int j = -j_max; j <= j_max; ++j)
      w[li * nj + (j + j_max)] = std::pow(bracket(ls, j), s);
  }
  return w;
}

double weighted_norm(const std::vector<cplx>& v, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += std::norm(v[i] * w[i]);
  return std::sqrt(acc);
}

}  // namespace

QpOperator::QpOperator(int nu_, int l_max_, int j_max_)
    : nu(nu_), l_max(l_max_), j_max(j_max_) {
  if (nu < 1 || l_max < 0 || j_max < 0)
    fail(ErrorKind::kConfig, "invalid operator truncation");
  entries.assign(n_l() * block(), cplx(0.0));
}

cplx QpOperator::get(const std::vector<int>& l, int j, int jp) const {
  const Lattice box = lattice();
  if (static_cast<int>(l.size()) != nu || !box.contains(l.data()) ||
      std::abs(j) > j_max || std::abs(jp) > j_max)
    return 0.0;
  return at(box.flatten(l.data()), j, jp);
}

void QpOperator::set(const std::vector<int>& l, int j, int jp, cplx v) {
  const Lattice box = lattice();
  if (static_cast<int>(l.size()) != nu || !box.contains(l.data()) ||
      std::abs(j) > j_max || std::abs(jp) > j_max)
    fail(ErrorKind::kNumerical, "entry outside truncation");
  at(box.flatten(l.data()), j, jp) = v;
}

QpOperator QpOperator::identity(int nu, int l_max, int j_max) {
  QpOperator a(nu, l_max, j_max);
  const std::size_t z = a.lattice().zero();
  for (int j = -j_max; j <= j_max; ++j) a.at(z, j, j) = 1.0;
  return a;
}

QpOperator QpOperator::diagonal(int nu, int l_max, int j_max,
                                const std::vector<cplx>& d) {
  QpOperator a(nu, l_max, j_max);
  if (d.size() != static_cast<std::size_t>(a.n_j()))
    fail(ErrorKind::kNumerical, "diagonal length mismatch");
  const std::size_t z = a.lattice().zero();
  for (int j = -j_max; j <= j_max; ++j) a.at(z, j, j) = d[j + j_max];
  return a;
}

QpOperator QpOperator::dx(int nu, int l_max, int j_max) {
  std::vector<cplx> d(2 * j_max + 1);
  for (int j = -j_max; j <= j_max; ++j) d[j + j_max] = kI * static_cast<double>(j);
  return diagonal(nu, l_max, j_max, d);
}

QpOperator QpOperator::multiplication(const FourierFunction& f, int l_max,
                                      int j_max) {
  QpOperator a(f.nu, l_max, j_max);
  const Lattice box = a.lattice();
  const Lattice fbox = f.lattice();
  std::vector<int> l(f.nu);
  for (std::size_t li = 0; li < box.size(); ++li) {
    box.unflatten(li, l.data());
    if (!fbox.contains(l.data())) continue;
    const std::size_t fi = fbox.flatten(l.data());
    for (int j = -j_max; j <= j_max; ++j)
      for (int jp = -j_max; jp <= j_max; ++jp) {
        const int k = j - jp;
        if (std::abs(k) <= f.j_max) a.at(li, j, jp) = f.at(fi, k);
      }
  }
  return a;
}

QpOperator& QpOperator::operator+=(const QpOperator& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i] += o.entries[i];
  return *this;
}

QpOperator& QpOperator::operator-=(const QpOperator& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i] -= o.entries[i];
  return *this;
}

QpOperator& QpOperator::operator*=(cplx c) {
  for (auto& v : entries) v *= c;
  return *this;
}

QpOperator operator+(QpOperator a, const QpOperator& b) { return a += b; }
QpOperator operator-(QpOperator a, const QpOperator& b) { return a -= b; }
QpOperator operator*(cplx c, QpOperator a) { return a *= c; }

ToeplitzKernel::ToeplitzKernel(const QpOperator& a)
    : nu_(a.nu),
      l_max_(a.l_max),
      n_j_(a.n_j()),
      m_(product_grid_size(a.l_max)),
      n_l_(a.n_l()),
      n_grid_(grid_points(a.nu, product_grid_size(a.l_max))),
      gmap_(lattice_to_grid(a.lattice(), product_grid_size(a.l_max))) {
  grid_ = to_phase_grid(a, m_, gmap_);
}

void ToeplitzKernel::apply(const cplx* in, cplx* out, bool adjoint) const {
  const int nj = n_j_;
  std::vector<cplx> u(n_grid_ * nj, cplx(0.0));
  for (std::size_t li = 0; li < n_l_; ++li)
    std::copy(in + li * nj, in + (li + 1) * nj, u.begin() + gmap_[li] * nj);
  const std::vector<int> dims(nu_, m_);
  dft(u.data(), dims, nj, +1);
  std::vector<cplx> y(n_grid_ * nj);
  const std::size_t bs = static_cast<std::size_t>(nj) * nj;
#pragma omp parallel for
  for (std::size_t g = 0; g < n_grid_; ++g) {
    Eigen::Map<const RowMat> ag(grid_.data() + g * bs, nj, nj);
    Eigen::Map<const Vec> ug(u.data() + g * nj, nj);
    Eigen::Map<Vec> yg(y.data() + g * nj, nj);
    if (adjoint)
      yg.noalias() = ag.adjoint() * ug;
    else
      yg.noalias() = ag * ug;
  }
  dft(y.data(), dims, nj, -1);
  const double scale = 1.0 / static_cast<double>(n_grid_);
  for (std::size_t li = 0; li < n_l_; ++li) {
    const cplx* src = y.data() + gmap_[li] * nj;
    for (int k = 0; k < nj; ++k) out[li * nj + k] = src[k] * scale;
  }
}

FourierFunction apply(const QpOperator& a, const FourierFunction& u) {
  if (a.nu != u.nu || a.l_max != u.l_max || a.j_max != u.j_max)
    fail(ErrorKind::kNumerical, "truncation mismatch");
  FourierFunction out(u.nu, u.l_max, u.j_max);
  ToeplitzKernel(a).apply(u.coeffs.data(), out.coeffs.data());
  return out;
}

FourierFunction apply_reference(const QpOperator& a,
                                const FourierFunction& u) {
  if (a.nu != u.nu || a.l_max != u.l_max || a.j_max != u.j_max)
    fail(ErrorKind::kNumerical, "truncation mismatch");
  FourierFunction out(u.nu, u.l_max, u.j_max);
  const Lattice box = a.lattice();
  const int nj = a.n_j();
  std::vector<int> l(a.nu), lp(a.nu), d(a.nu);
  for (std::size_t li = 0; li < box.size(); ++li) {
    box.unflatten(li, l.data());
    for (std::size_t lpi = 0; lpi < box.size(); ++lpi) {
      box.unflatten(lpi, lp.data());
      for (int k = 0; k < a.nu; ++k) d[k] = l[k] - lp[k];
      if (!box.contains(d.data())) continue;
      const cplx* blk = a.block_ptr(box.flatten(d.data()));
      for (int r = 0; r < nj; ++r) {
        cplx acc = 0.0;
        for (int c = 0; c < nj; ++c) acc += blk[r * nj + c] * u.coeffs[lpi * nj + c];
        out.coeffs[li * nj + r] += acc;
      }
    }
  }
  return out;
}

QpOperator compose(const QpOperator& a, const QpOperator& b) {
  require_same(a, b);
  const int m = product_grid_size(a.l_max);
  const auto gmap = lattice_to_grid(a.lattice(), m);
  const auto ga = to_phase_grid(a, m, gmap);
  const auto gb = to_phase_grid(b, m, gmap);
  const int nj = a.n_j();
  const std::size_t bs = a.block();
  const std::size_t ng = grid_points(a.nu, m);
  std::vector<cplx> gc(ng * bs);
#pragma omp parallel for
  for (std::size_t g = 0; g < ng; ++g) {
    Eigen::Map<const RowMat> ma(ga.data() + g * bs, nj, nj);
    Eigen::Map<const RowMat> mb(gb.data() + g * bs, nj, nj);
    Eigen::Map<RowMat> mc(gc.data() + g * bs, nj, nj);
    mc.noalias() = ma * mb;
  }
  QpOperator c(a.nu, a.l_max, a.j_max);
  from_phase_grid(gc, m, gmap, c);
  return c;
}

QpOperator compose_reference(const QpOperator& a, const QpOperator& b) {
  require_same(a, b);
  QpOperator c(a.nu, a.l_max, a.j_max);
  const Lattice box = a.lattice();
  const int nj = a.n_j();
  std::vector<int> l1(a.nu), l2(a.nu), l(a.nu);
  for (std::size_t i1 = 0; i1 < box.size(); ++i1) {
    box.unflatten(i1, l1.data());
    for (std::size_t i2 = 0; i2 < box.size(); ++i2) {
      box.unflatten(i2, l2.data());
      for (int k = 0; k < a.nu; ++k) l[k] = l1[k] + l2[k];
      if (!box.contains(l.data())) continue;
      cplx* dst = c.block_ptr(box.flatten(l.data()));
      const cplx* pa = a.block_ptr(i1);
      const cplx* pb = b.block_ptr(i2);
      for (int r = 0; r < nj; ++r)
        for (int k = 0; k < nj; ++k) {
          const cplx ar = pa[r * nj + k];
          if (ar == cplx(0.0)) continue;
          for (int col = 0; col < nj; ++col) dst[r * nj + col] += ar * pb[k * nj + col];
        }
    }
  }
  return c;
}

QpOperator adjoint(const QpOperator& a) {
  QpOperator out(a.nu, a.l_max, a.j_max);
  const Lattice box = a.lattice();
  for (std::size_t li = 0; li < box.size(); ++li) {
    const std::size_t ni = box.neg(li);
    for (int j = -a.j_max; j <= a.j_max; ++j)
      for (int jp = -a.j_max; jp <= a.j_max; ++jp)
        out.at(li, j, jp) = std::conj(a.at(ni, jp, j));
  }
  return out;
}

QpOperator majorant(const QpOperator& a) {
  QpOperator out = a;
  for (auto& v : out.entries) v = std::abs(v);
  return out;
}

std::pair<QpOperator, QpOperator> smooth_project(const QpOperator& a, int n) {
  if (n < 0) fail(ErrorKind::kNumerical, "negative smoothing cutoff");
  QpOperator lo = a;
  QpOperator hi(a.nu, a.l_max, a.j_max);
  const Lattice box = a.lattice();
  const std::size_t bs = a.block();
  for (std::size_t li = 0; li < box.size(); ++li) {
    if (box.sup(li) <= n) continue;
    std::copy(a.block_ptr(li), a.block_ptr(li) + bs, hi.block_ptr(li));
    std::fill(lo.block_ptr(li), lo.block_ptr(li) + bs, cplx(0.0));
  }
  return {lo, hi};
}

QpOperator phi_weight(const QpOperator& a, double b) {
  if (b < 0.0) fail(ErrorKind::kNumerical, "negative phi weight");
  QpOperator out = a;
  const Lattice box = a.lattice();
  const std::size_t bs = a.block();
  for (std::size_t li = 0; li < box.size(); ++li) {
    const double w = std::pow(static_cast<double>(std::max(1, box.sup(li))), b);
    cplx* p = out.block_ptr(li);
    for (std::size_t k = 0; k < bs; ++k) p[k] *= w;
  }
  return out;
}

QpOperator dx_commutator(const QpOperator& a) {
  QpOperator out = a;
  for (std::size_t li = 0; li < a.n_l(); ++li)
    for (int j = -a.j_max; j <= a.j_max; ++j)
      for (int jp = -a.j_max; jp <= a.j_max; ++jp)
        out.at(li, j, jp) *= kI * static_cast<double>(j - jp);
  return out;
}

QpOperator omega_derivative(const QpOperator& a,
                            const std::vector<double>& omega) {
  QpOperator out = a;
  const Lattice box = a.lattice();
  const std::size_t bs = a.block();
  for (std::size_t li = 0; li < box.size(); ++li) {
    const cplx f = kI * box.dot(li, omega);
    cplx* p = out.block_ptr(li);
    for (std::size_t k = 0; k < bs; ++k) p[k] *= f;
  }
  return out;
}

QpOperator diag_part(const QpOperator& a) {
  QpOperator out(a.nu, a.l_max, a.j_max);
  const std::size_t z = a.lattice().zero();
  for (int j = -a.j_max; j <= a.j_max; ++j) out.at(z, j, j) = a.at(z, j, j);
  return out;
}

QpOperator resized(const QpOperator& a, int l_max, int j_max) {
  QpOperator out(a.nu, l_max, j_max);
  const Lattice src = a.lattice();
  const Lattice dst = out.lattice();
  const int jm = std::min(a.j_max, j_max);
  std::vector<int> l(a.nu);
  for (std::size_t li = 0; li < src.size(); ++li) {
    src.unflatten(li, l.data());
    if (!dst.contains(l.data())) continue;
    const std::size_t di = dst.flatten(l.data());
    for (int j = -jm; j <= jm; ++j)
      for (int jp = -jm; jp <= jm; ++jp) out.at(di, j, jp) = a.at(li, j, jp);
  }
  return out;
}

StructureFlags structure_flags(const QpOperator& a) {
  StructureFlags f;
  const std::size_t n = a.entries.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx v = a.entries[i];
    const cplx r = a.entries[n - 1 - i];
    f.real_defect = std::max(f.real_defect, std::abs(r - std::conj(v)));
    f.reversible_defect = std::max(f.reversible_defect, std::abs(r + v));
    f.preserving_defect = std::max(f.preserving_defect, std::abs(r - v));
  }
  f.real = f.real_defect <= kStructureTol;
  f.reversible = f.reversible_defect <= kStructureTol;
  f.reversibility_preserving = f.preserving_defect <= kStructureTol;
  return f;
}

double max_abs_entry(const QpOperator& a) {
  double m = 0.0;
  for (const auto& v : a.entries) m = std::max(m, std::abs(v));
  return m;
}

double block_norm_sum(const QpOperator& a) {
  double total = 0.0;
  const std::size_t bs = a.block();
  for (std::size_t li = 0; li < a.n_l(); ++li) {
    double f = 0.0;
    const cplx* p = a.block_ptr(li);
    for (std::size_t k = 0; k < bs; ++k) f += std::norm(p[k]);
    total += std::sqrt(f);
  }
  return total;
}

double op_norm_hs(const QpOperator& a, double s, NormInfo* info,
                  double rel_tol) {
  if (s < 0.0) fail(ErrorKind::kNumerical, "negative Sobolev index");
  NormInfo local;
  if (max_abs_entry(a) == 0.0) {
    if (info != nullptr) *info = local;
    return 0.0;
  }
  // Golub-Kahan-Lanczos bidiagonalization of W A W^{-1} with full
  // reorthogonalization; the largest singular value of the bidiagonal
  // increases monotonically to the operator norm.
  const ToeplitzKernel kernel(a);
  const auto w = sobolev_weights(a.lattice(), a.j_max, s);
  const std::size_t n = kernel.dim();
  const int kmax = static_cast<int>(std::min<std::size_t>(n, 160));
  auto mul = [&](const Vec& x, Vec& y, bool adj) {
    Vec t(n);
    if (!adj) {
      for (std::size_t i = 0; i < n; ++i) t[i] = x[i] / w[i];
      kernel.apply(t.data(), y.data());
      for (std::size_t i = 0; i < n; ++i) y[i] *= w[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) t[i] = x[i] * w[i];
      kernel.apply(t.data(), y.data(), true);
      for (std::size_t i = 0; i < n; ++i) y[i] /= w[i];
    }
  };
  auto reorth = [](Vec& x, const std::vector<Vec>& basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) x -= b.dot(x) * b;
  };
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  std::vector<Vec> us, vs;
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = cplx(normal(rng), normal(rng));
  v /= v.norm();
  std::vector<double> alpha, beta;
  double sigma = 0.0;
  local.converged = false;
  Vec u(n), t(n);
  for (int k = 1; k <= kmax; ++k) {
    vs.push_back(v);
    mul(v, u, false);
    if (!us.empty()) u -= beta.back() * us.back();
    reorth(u, us);
    const double al = u.norm();
    alpha.push_back(al);
    local.iterations = k;
    bool breakdown = al <= 1e-14 * std::max(sigma, 1e-300);
    if (!breakdown) {
      u /= al;
      us.push_back(u);
      mul(u, t, true);
      t -= al * v;
      reorth(t, vs);
      const double be = t.norm();
      beta.push_back(be);
      breakdown = be <= 1e-14 * std::max({sigma, al, 1e-300});
      if (!breakdown) v = t / be;
    }
    if (breakdown || k % 4 == 0 || k == kmax) {
      const int m = static_cast<int>(alpha.size());
      Eigen::MatrixXd bd = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        bd(i, i) = alpha[i];
        if (i + 1 < m) bd(i, i + 1) = beta[i];
      }
      const double sig_new =
          Eigen::JacobiSVD<Eigen::MatrixXd>(bd).singularValues()(0);
      const bool done =
          breakdown || std::abs(sig_new - sigma) <= rel_tol * sig_new;
      sigma = std::max(sigma, sig_new);
      if (done) {
        local.converged = true;
        break;
      }
    }
  }
  if (info != nullptr) *info = local;
  return sigma;
}

double modulo_tame_constant(const std::vector<OperatorSample>& samples,
                            double s, double b, double gamma,
                            std::uint64_t probe_seed) {
  if (samples.empty()) fail(ErrorKind::kNumerical, "empty operator sample map");
  const QpOperator& a0 = samples.front().op;
  const Lattice box = a0.lattice();
  const int jm = a0.j_max;
  const int nj = a0.n_j();
  const double s0 = SobolevParams::s0_for(a0.nu);

  auto weighted = [&](const QpOperator& a) {
    QpOperator w = majorant(phi_weight(a, b));
    for (std::size_t li = 0; li < box.size(); ++li)
      for (int j = -jm; j <= jm; ++j)
        for (int jp = -jm; jp <= jm; ++jp)
          w.at(li, j, jp) *= std::sqrt(bracket(0, j) * bracket(0, jp));
    return w;
  };
  std::vector<QpOperator> terms;
  std::vector<double> scale;
  for (const auto& smp : samples) {
    terms.push_back(weighted(smp.op));
    scale.push_back(1.0);
  }
  for (std::size_t p = 0; p < samples.size(); ++p)
    for (std::size_t q = p + 1; q < samples.size(); ++q) {
      double dist = 0.0;
      for (std::size_t k = 0; k < samples[p].omega.size(); ++k) {
        const double d = samples[p].omega[k] - samples[q].omega[k];
        dist += d * d;
      }
      dist = std::sqrt(dist);
      if (dist == 0.0) continue;
      terms.push_back(weighted(samples[p].op - samples[q].op));
      scale.push_back(gamma / dist);
    }

  const auto ws = sobolev_weights(box, jm, s);
  const auto w0 = sobolev_weights(box, jm, s0);
  double best = 0.0;
  // Unit probes e_{0,j}: the image is column j of the offset blocks.
  for (int jp = -jm; jp <= jm; ++jp) {
    const double den =
        std::max(std::pow(bracket(0, jp), s0), std::pow(bracket(0, jp), s));
    for (std::size_t t = 0; t < terms.size(); ++t) {
      double acc = 0.0;
      for (std::size_t li = 0; li < box.size(); ++li)
        for (int j = -jm; j <= jm; ++j)
          acc += std::norm(terms[t].at(li, j, jp) * ws[li * nj + j + jm]);
      best = std::max(best, scale[t] * std::sqrt(acc) / den);
    }
  }
  // Smooth nonnegative random probes.
  std::mt19937_64 rng(probe_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = box.size() * nj;
  std::vector<ToeplitzKernel> kernels;
  kernels.reserve(terms.size());
  for (const auto& t : terms) kernels.emplace_back(t);
  std::vector<cplx> u(n), y(n);
  const auto br = sobolev_weights(box, jm, 1.0);
  for (int probe = 0; probe < 4; ++probe) {
    for (std::size_t i = 0; i < n; ++i)
      u[i] = unif(rng) * std::pow(br[i], -(s0 + 1.0 + probe));
    const double den =
        std::max(weighted_norm(u, w0), weighted_norm(u, ws));
    for (std::size_t t = 0; t < terms.size(); ++t) {
      kernels[t].apply(u.data(), y.data());
      best = std::max(best, scale[t] * weighted_norm(y, ws) / den);
    }
  }
  return best;
}

QpOperator neumann_invert(const QpOperator& psi, double b, NeumannInfo* info) {
  const double s0 = SobolevParams::s0_for(psi.nu);
  NeumannInfo local;
  local.norm = op_norm_hs(psi, s0);
  if (local.norm > 0.5) {
    std::ostringstream msg;
    msg << "Neumann smallness violated: ||Psi||_{s0} = " << local.norm;
    fail(ErrorKind::kNumerical, msg.str());
  }
  local.weighted_norm =
      b == 0.0 ? local.norm : op_norm_hs(phi_weight(psi, b), s0);
  // Sequential powers: the truncated product is not associative, and
  // S (Id + Psi) telescopes only when each term is T_{k+1} = T_k (-Psi).
  const QpOperator minus_psi = cplx(-1.0) * psi;
  QpOperator sum(psi.nu, psi.l_max, psi.j_max);
  QpOperator term = minus_psi;
  for (int k = 1; k <= 400; ++k) {
    sum += term;
    local.terms = k;
    if (block_norm_sum(term) <= 1e-14) break;
    term = compose(term, minus_psi);
  }
  const QpOperator id = QpOperator::identity(psi.nu, psi.l_max, psi.j_max);
  QpOperator inv = id + sum;
  local.residual =
      op_norm_hs(compose(inv, id + psi) - id, s0, nullptr, kDefectNormTol);
  if (info != nullptr) *info = local;
  if (local.residual > 1e-10) {
    std::ostringstream msg;
    msg << "Neumann inverse residual " << local.residual << " exceeds 1e-10";
    fail(ErrorKind::kNumerical, msg.str());
  }
  return inv;
}

QpOperator refine_inverse(const QpOperator& a, QpOperator x, int max_steps,
                          double tol, int* steps) {
  require_same(a, x);
  const QpOperator id = QpOperator::identity(a.nu, a.l_max, a.j_max);
  int done = 0;
  for (; done < max_steps; ++done) {
    const QpOperator e = id - compose(x, a);
    if (block_norm_sum(e) <= tol) break;
    x += compose(e, x);
  }
  if (steps != nullptr) *steps = done;
  return x;
}

std::vector<cplx> galerkin_matrix(const QpOperator& a) {
  const Lattice box = a.lattice();
  const int nj = a.n_j();
  const std::size_t n = box.size() * nj;
  std::vector<cplx> m(n * n, cplx(0.0));
  std::vector<int> l(a.nu), lp(a.nu), d(a.nu);
  for (std::size_t li = 0; li < box.size(); ++li) {
    box.unflatten(li, l.data());
    for (std::size_t lpi = 0; lpi < box.size(); ++lpi) {
      box.unflatten(lpi, lp.data());
      for (int k = 0; k < a.nu; ++k) d[k] = l[k] - lp[k];
      if (!box.contains(d.data())) continue;
      const cplx* blk = a.block_ptr(box.flatten(d.data()));
      for (int r = 0; r < nj; ++r)
        for (int c = 0; c < nj; ++c)
          m[(li * nj + r) * n + lpi * nj + c] = blk[r * nj + c];
    }
  }
  return m;
}

void write_csv(std::ostream& os, const QpOperator& a) {
  for (int d = 0; d < a.nu; ++d) os << "l" << d + 1 << ",";
  os << "j,jp,re,im\n";
  const Lattice box = a.lattice();
  std::vector<int> l(a.nu);
  std::ostringstream line;
  line.precision(17);
  for (std::size_t li = 0; li < box.size(); ++li) {
    box.unflatten(li, l.data());
    for (int j = -a.j_max; j <= a.j_max; ++j)
      for (int jp = -a.j_max; jp <= a.j_max; ++jp) {
        const cplx c = a.at(li, j, jp);
        if (c == cplx(0.0)) continue;
        line.str("");
        for (int d = 0; d < a.nu; ++d) line << l[d] << ",";
        line << j << "," << jp << "," << c.real() << "," << c.imag() << "\n";
        os << line.str();
      }
  }
}

QpOperator read_operator_csv(std::istream& is, int nu, int l_max, int j_max) {
  QpOperator a(nu, l_max, j_max);
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::kConfig, "empty operator CSV");
  std::vector<int> l(nu);
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream in(line);
    int j = 0, jp = 0;
    double re = 0.0, im = 0.0;
    for (int d = 0; d < nu; ++d) in >> l[d];
    in >> j >> jp >> re >> im;
    if (!in) fail(ErrorKind::kConfig, "malformed CSV row " + std::to_string(row));
    if (!a.lattice().contains(l.data()) || std::abs(j) > j_max ||
        std::abs(jp) > j_max)
      fail(ErrorKind::kConfig,
           "CSV row " + std::to_string(row) + " outside truncation");
    a.set(l, j, jp, cplx(re, im));
  }
  return a;
}

}  // namespace chkam
