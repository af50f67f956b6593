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

// Truncated Fourier series on T^nu x T.

#ifndef CHKAM_FOURIER_FIELD_HPP_
#define CHKAM_FOURIER_FIELD_HPP_

#include <iosfwd>
#include <vector>

#include "chkam/common.hpp"

namespace chkam {

enum class Parity { kNone, kEven, kOdd };

// u(phi, x) = sum u_{l,j} exp(i(l.phi + j x)) over |l|_inf <= l_max,
// |j| <= j_max. Storage is [l][j] with j fastest.
struct FourierFunction {
  int nu = 1;
  int l_max = 0;
  int j_max = 0;
  std::vector<cplx> coeffs;
  bool real_valued = false;
  Parity parity = Parity::kNone;

  FourierFunction() = default;
  FourierFunction(int nu, int l_max, int j_max);

  Lattice lattice() const { return {nu, l_max}; }
  int n_j() const { return 2 * j_max + 1; }
  std::size_t n_l() const { return lattice().size(); }
  std::size_t index(std::size_t li, int j) const {
    return li * n_j() + static_cast<std::size_t>(j + j_max);
  }
  cplx& at(std::size_t li, int j) { return coeffs[index(li, j)]; }
  const cplx& at(std::size_t li, int j) const { return coeffs[index(li, j)]; }

  // Zero outside the box.
  cplx get(const std::vector<int>& l, int j) const;
  void set(const std::vector<int>& l, int j, cplx v);

  bool same_shape(const FourierFunction& o) const {
    return nu == o.nu && l_max == o.l_max && j_max == o.j_max;
  }
  double reality_defect() const;
  double parity_defect(Parity p) const;

  static FourierFunction constant(int nu, int l_max, int j_max, cplx c);
  static FourierFunction mode(int nu, int l_max, int j_max,
                              const std::vector<int>& l, int j,
                              cplx value = 1.0);

  FourierFunction& operator+=(const FourierFunction& o);
  FourierFunction& operator-=(const FourierFunction& o);
  FourierFunction& operator*=(cplx c);
};

FourierFunction operator+(FourierFunction a, const FourierFunction& b);
FourierFunction operator-(FourierFunction a, const FourierFunction& b);
FourierFunction operator*(cplx c, FourierFunction a);

struct SobolevParams {
  double s = 0.0;
  double s0 = 0.0;
  static double s0_for(int nu) { return static_cast<double>((nu + 1) / 2 + 2); }
  static SobolevParams make(int nu, double s) { return {s, s0_for(nu)}; }
};

double sobolev_norm(const FourierFunction& u, double s);
double max_abs_coeff(const FourierFunction& u);

struct OmegaSample {
  std::vector<double> omega;
  FourierFunction u;
};

// Sup-norm at s plus gamma times the largest sampled difference quotient at
// s-1. A lower bound of the continuous seminorm.
double weighted_lip_norm(const std::vector<OmegaSample>& samples, double s,
                         double gamma);

FourierFunction multiply(const FourierFunction& u, const FourierFunction& v);
FourierFunction compose_diffeo(const FourierFunction& u,
                               const FourierFunction& beta);
// x = y + beta_tilde(phi, y) inverts y = x + beta(phi, x). If residual is
// non-null it receives the sup-grid defect of the truncated result.
FourierFunction invert_diffeo(const FourierFunction& beta,
                              double* residual = nullptr);
FourierFunction project_even(const FourierFunction& u);
FourierFunction project_odd(const FourierFunction& u);
FourierFunction majorant(const FourierFunction& u);

// Copy into a different box; modes outside the target box are dropped.
FourierFunction resized(const FourierFunction& u, int l_max, int j_max);
FourierFunction dx(const FourierFunction& u);
FourierFunction omega_dphi(const FourierFunction& u,
                           const std::vector<double>& omega);
cplx mean(const FourierFunction& u);

// Pointwise evaluation (slow; oracles and diagnostics).
cplx evaluate(const FourierFunction& u, const double* phi, double x);

// Values on the tensor grid phi_k = 2 pi k / m_phi, x_k = 2 pi k / m_x,
// stored row-major with x fastest.
std::vector<cplx> synthesize(const FourierFunction& u, int m_phi, int m_x);
FourierFunction analyze(std::vector<cplx> values, int m_phi, int m_x, int nu,
                        int l_max, int j_max);
// Partial synthesis in phi only: layout [phi node][j].
std::vector<cplx> synthesize_phi(const FourierFunction& u, int m_phi);
// Collocation size used for products and diffeomorphisms.
inline int oversampled(int n_max) { return 2 * (2 * n_max + 1); }

void write_csv(std::ostream& os, const FourierFunction& u);
FourierFunction read_csv(std::istream& is, int nu, int l_max, int j_max,
                         bool real_valued);

}  // namespace chkam

#endif  // CHKAM_FOURIER_FIELD_HPP_
