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


#include "chkam/dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <ostream>

namespace chkam {

namespace {

using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

XVector x_coefficients(const FourierFunction& h0) {
  if (h0.l_max != 0)
    fail(ErrorKind::kConfig, "initial datum must not depend on phi");
  const cplx c0 = h0.at(0, 0);
  if (std::abs(c0) > 0.0)
    fail(ErrorKind::kNumerical, "phase space H₀ violated: j = 0 mode is " +
                                    std::to_string(std::abs(c0)));
  return h0.coeffs;
}

void axpy(XVector& y, cplx a, const XVector& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

double x_sobolev_norm(const XVector& h, double s) {
  const int jm = static_cast<int>(h.size() / 2);
  double acc = 0.0;
  for (int j = -jm; j <= jm; ++j) {
    const double w = std::pow(std::max(1.0, std::abs(double(j))), 2.0 * s);
    acc += w * std::norm(h[j + jm]);
  }
  return std::sqrt(acc);
}

SnapshotGenerator::SnapshotGenerator(const QpOperator& b,
                                     std::vector<double> omega,
                                     double drop_tol)
    : omega_(std::move(omega)), j_max_(b.j_max) {
  const Lattice box = b.lattice();
  const double cut = drop_tol * max_abs_entry(b);
  std::map<std::size_t, int> phase_of;
  for (std::size_t li = 0; li < box.size(); ++li)
    for (int j = -j_max_; j <= j_max_; ++j)
      for (int jp = -j_max_; jp <= j_max_; ++jp) {
        const cplx v = b.at(li, j, jp);
        if (std::abs(v) <= cut) continue;
        auto it = phase_of.find(li);
        if (it == phase_of.end()) {
          it = phase_of.emplace(li, static_cast<int>(offsets_.size())).first;
          offsets_.push_back(box.point(li));
        }
        entries_.push_back({it->second, j + j_max_, jp + j_max_, v});
      }
}

void SnapshotGenerator::operator()(double t, const XVector& h,
                                   XVector& out) const {
  std::vector<cplx> ph(offsets_.size());
  for (std::size_t k = 0; k < offsets_.size(); ++k) {
    double a = 0.0;
    for (std::size_t d = 0; d < omega_.size(); ++d)
      a += offsets_[k][d] * omega_[d];
    ph[k] = std::polar(1.0, a * t);
  }
  out.assign(h.size(), 0.0);
  for (const Entry& e : entries_) out[e.row] -= ph[e.phase] * e.value * h[e.col];
}

std::vector<cplx> evaluate_operator(const QpOperator& u, const double* phi) {
  const Lattice box = u.lattice();
  const std::size_t blk = u.block();
  std::vector<cplx> m(blk, 0.0);
  std::vector<int> l(u.nu);
  for (std::size_t li = 0; li < box.size(); ++li) {
    box.unflatten(li, l.data());
    double a = 0.0;
    for (int d = 0; d < u.nu; ++d) a += l[d] * phi[d];
    const cplx e = std::polar(1.0, a);
    const cplx* src = u.block_ptr(li);
    for (std::size_t k = 0; k < blk; ++k) m[k] += e * src[k];
  }
  return m;
}

FlowResult evolve_reduced(const Spectrum& spec, const QpOperator& u,
                          const std::vector<double>& omega,
                          const FourierFunction& h0,
                          const std::vector<double>& times, double s) {
  if (static_cast<int>(omega.size()) != u.nu)
    fail(ErrorKind::kConfig, "omega length differs from nu");
  if (h0.j_max != u.j_max) fail(ErrorKind::kNumerical, "truncation mismatch");
  const XVector h = x_coefficients(h0);
  const int n = u.n_j();
  const int jm = u.j_max;

  std::vector<double> phi(u.nu, 0.0);
  const std::vector<cplx> u0 = evaluate_operator(u, phi.data());
  const Mat m0 = Eigen::Map<const Mat>(u0.data(), n, n);
  const Vec g0 =
      m0.partialPivLu().solve(Eigen::Map<const Vec>(h.data(), n));

  FlowResult out;
  out.method = FlowResult::Method::kReduced;
  out.times = times;
  const double n0 = x_sobolev_norm(h, s);
  Vec g(n);
  for (double t : times) {
    for (int j = -jm; j <= jm; ++j) {
      g[j + jm] = std::polar(1.0, -spec.d(j) * t) * g0[j + jm];
      out.modulus_defect = std::max(
          out.modulus_defect, std::abs(std::abs(g[j + jm]) - std::abs(g0[j + jm])));
    }
    for (int d = 0; d < u.nu; ++d) phi[d] = omega[d] * t;
    const std::vector<cplx> ut = evaluate_operator(u, phi.data());
    const Vec ht = Eigen::Map<const Mat>(ut.data(), n, n) * g;
    XVector hv(ht.data(), ht.data() + n);
    const double nt = x_sobolev_norm(hv, s);
    out.sobolev_norms.push_back(nt);
    if (n0 > 0.0) out.max_ratio = std::max(out.max_ratio, nt / n0);
    out.states.push_back(std::move(hv));
  }
  return out;
}

FlowResult evolve_direct(const Generator& gen, const FourierFunction& h0,
                         const std::vector<double>& times, double dt,
                         double s) {
  if (!(dt > 0.0)) fail(ErrorKind::kConfig, "constraint violated: dt > 0");
  XVector h = x_coefficients(h0);
  FlowResult out;
  out.method = FlowResult::Method::kDirect;
  out.times = times;
  if (times.empty()) return out;
  const double n0 = x_sobolev_norm(h, s);
  const double blowup = 1e6 * std::max(n0, 1e-300);
  const std::size_t dim = h.size();
  XVector k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

  auto record = [&](const XVector& v) {
    const double nt = x_sobolev_norm(v, s);
    if (!std::isfinite(nt) || nt > blowup)
      fail(ErrorKind::kNumerical, "instability — check resonance");
    out.sobolev_norms.push_back(nt);
    if (n0 > 0.0) out.max_ratio = std::max(out.max_ratio, nt / n0);
    out.states.push_back(v);
  };

  record(h);
  double t = times[0];
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double span = times[k] - t;
    const int steps =
        std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-9)));
    const double hs = span / steps;
    for (int m = 0; m < steps; ++m) {
      const double tm = t + m * hs;
      gen(tm, h, k1);
      tmp = h;
      axpy(tmp, 0.5 * hs, k1);
      gen(tm + 0.5 * hs, tmp, k2);
      tmp = h;
      axpy(tmp, 0.5 * hs, k2);
      gen(tm + 0.5 * hs, tmp, k3);
      tmp = h;
      axpy(tmp, hs, k3);
      gen(tm + hs, tmp, k4);
      for (std::size_t i = 0; i < dim; ++i)
        h[i] += hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    t = times[k];
    record(h);
  }
  return out;
}

StabilityReport stability_report(const FlowResult& direct,
                                 const FlowResult& reduced, double s0) {
  if (direct.times.size() != reduced.times.size())
    fail(ErrorKind::kNumerical, "flow time grids differ");
  StabilityReport rep;
  rep.max_ratio_direct = direct.max_ratio;
  rep.max_ratio_reduced = reduced.max_ratio;
  for (std::size_t k = 0; k < direct.states.size(); ++k) {
    XVector diff = direct.states[k];
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= reduced.states[k][i];
    const double d = x_sobolev_norm(diff, s0);
    rep.discrepancy_t.push_back(d);
    rep.discrepancy = std::max(rep.discrepancy, d);
  }
  return rep;
}

void write_csv(std::ostream& os, const FlowResult& direct,
               const FlowResult& reduced, const StabilityReport& rep) {
  os << "t,norm_direct_s,norm_reduced_s,discrepancy_s0\n";
  os.precision(17);
  for (std::size_t k = 0; k < direct.times.size(); ++k)
    os << direct.times[k] << ',' << direct.sobolev_norms[k] << ','
       << reduced.sobolev_norms[k] << ',' << rep.discrepancy_t[k] << '\n';
}

}  // namespace chkam
