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

// Toeplitz-in-time operators A_j^{j'}(l) acting on truncated Fourier series.

#ifndef CHKAM_QP_OPERATOR_HPP_
#define CHKAM_QP_OPERATOR_HPP_

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "chkam/common.hpp"
#include "chkam/fourier_field.hpp"

namespace chkam {

// Entries stored [l][j][j'] with j' fastest; each offset l owns a dense
// (2 j_max + 1)^2 row-major block. Negating (l, j, j') reverses the flat
// index.
struct QpOperator {
  int nu = 1;
  int l_max = 0;
  int j_max = 0;
  std::vector<cplx> entries;

  QpOperator() = default;
  QpOperator(int nu, int l_max, int j_max);

  Lattice lattice() const { return {nu, l_max}; }
  int n_j() const { return 2 * j_max + 1; }
  std::size_t n_l() const { return lattice().size(); }
  std::size_t block() const {
    return static_cast<std::size_t>(n_j()) * n_j();
  }
  std::size_t index(std::size_t li, int j, int jp) const {
    return li * block() + static_cast<std::size_t>(j + j_max) * n_j() +
           static_cast<std::size_t>(jp + j_max);
  }
  cplx& at(std::size_t li, int j, int jp) { return entries[index(li, j, jp)]; }
  const cplx& at(std::size_t li, int j, int jp) const {
    return entries[index(li, j, jp)];
  }
  cplx* block_ptr(std::size_t li) { return entries.data() + li * block(); }
  const cplx* block_ptr(std::size_t li) const {
    return entries.data() + li * block();
  }
  cplx get(const std::vector<int>& l, int j, int jp) const;
  void set(const std::vector<int>& l, int j, int jp, cplx v);
  bool same_shape(const QpOperator& o) const {
    return nu == o.nu && l_max == o.l_max && j_max == o.j_max;
  }

  static QpOperator identity(int nu, int l_max, int j_max);
  static QpOperator diagonal(int nu, int l_max, int j_max,
                             const std::vector<cplx>& d);
  static QpOperator dx(int nu, int l_max, int j_max);
  // Multiplication by f: entries f_{l, j - j'}.
  static QpOperator multiplication(const FourierFunction& f, int l_max,
                                   int j_max);

  QpOperator& operator+=(const QpOperator& o);
  QpOperator& operator-=(const QpOperator& o);
  QpOperator& operator*=(cplx c);
};

QpOperator operator+(QpOperator a, const QpOperator& b);
QpOperator operator-(QpOperator a, const QpOperator& b);
QpOperator operator*(cplx c, QpOperator a);

struct StructureFlags {
  bool real = false;
  bool reversible = false;
  bool reversibility_preserving = false;
  double real_defect = 0.0;
  double reversible_defect = 0.0;
  double preserving_defect = 0.0;
};

inline constexpr double kStructureTol = 1e-10;

// FFT collocation kernels; these are the defaults.
FourierFunction apply(const QpOperator& a, const FourierFunction& u);
QpOperator compose(const QpOperator& a, const QpOperator& b);
// Serial direct-convolution references kept for testing and benchmarks.
FourierFunction apply_reference(const QpOperator& a, const FourierFunction& u);
QpOperator compose_reference(const QpOperator& a, const QpOperator& b);

// Precomputed phase-grid values of A for repeated matrix-vector products on
// coefficient vectors laid out as FourierFunction::coeffs.
class ToeplitzKernel {
 public:
  explicit ToeplitzKernel(const QpOperator& a);
  void apply(const cplx* in, cplx* out, bool adjoint = false) const;
  std::size_t dim() const { return n_l_ * n_j_; }

 private:
  int nu_;
  int l_max_;
  int n_j_;
  int m_;
  std::size_t n_l_;
  std::size_t n_grid_;
  std::vector<std::size_t> gmap_;
  std::vector<cplx> grid_;
};

QpOperator adjoint(const QpOperator& a);
QpOperator majorant(const QpOperator& a);
std::pair<QpOperator, QpOperator> smooth_project(const QpOperator& a, int n);
QpOperator phi_weight(const QpOperator& a, double b);
QpOperator dx_commutator(const QpOperator& a);
// Entries i (omega . l) A(l): the commutator of omega.d_phi with A.
QpOperator omega_derivative(const QpOperator& a,
                            const std::vector<double>& omega);
QpOperator diag_part(const QpOperator& a);
QpOperator resized(const QpOperator& a, int l_max, int j_max);
StructureFlags structure_flags(const QpOperator& a);

struct NormInfo {
  bool converged = true;
  int iterations = 0;
};

// ||A||_{L(H^s)} on the truncated space by Golub-Kahan-Lanczos, stopped
// once the estimate changes by at most rel_tol relative over four steps.
double op_norm_hs(const QpOperator& a, double s, NormInfo* info = nullptr,
                  double rel_tol = 1e-10);
// Stopping tolerance for residual and defect norms. These are roundoff
// sized with flat singular spectra, where tight tolerances only add steps.
inline constexpr double kDefectNormTol = 1e-4;
double max_abs_entry(const QpOperator& a);
// Sum over offsets of block Frobenius norms; an upper bound of the L^2
// operator norm.
double block_norm_sum(const QpOperator& a);

struct OperatorSample {
  std::vector<double> omega;
  QpOperator op;
};

// Probe-set estimate of the modulo-tame constant of
// <D_x>^{1/2} <d_phi>^b A <D_x>^{1/2}.
double modulo_tame_constant(const std::vector<OperatorSample>& samples,
                            double s, double b, double gamma,
                            std::uint64_t probe_seed = 0x51ed270b27c0ffeeULL);

struct NeumannInfo {
  // Number of powers of Psi summed.
  int terms = 0;
  double norm = 0.0;
  double residual = 0.0;
  double weighted_norm = 0.0;
};

// (Id + Psi)^{-1} by a truncated Neumann series.
QpOperator neumann_invert(const QpOperator& psi, double b,
                          NeumannInfo* info = nullptr);

// Newton-Schulz refinement X <- X + (Id - X A) X of an approximate left
// inverse in the truncated algebra. Stops once the block norm sum of
// Id - X A is at most tol.
QpOperator refine_inverse(const QpOperator& a, QpOperator x,
                          int max_steps = 6, double tol = 1e-12,
                          int* steps = nullptr);

// Dense matrix of the truncated action, row-major, rows and columns indexed
// like FourierFunction::coeffs.
std::vector<cplx> galerkin_matrix(const QpOperator& a);

void write_csv(std::ostream& os, const QpOperator& a);
QpOperator read_operator_csv(std::istream& is, int nu, int l_max, int j_max);

}  // namespace chkam

#endif  // CHKAM_QP_OPERATOR_HPP_
