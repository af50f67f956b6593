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


// Straightening of the transport part and conjugation of the linearized
// operator by the resulting torus diffeomorphism.

#ifndef CHKAM_STRAIGHTENING_HPP_
#define CHKAM_STRAIGHTENING_HPP_

#include <iosfwd>
#include <vector>

#include "chkam/ch_model.hpp"
#include "chkam/fourier_field.hpp"
#include "chkam/qp_operator.hpp"
#include "chkam/resonance.hpp"

namespace chkam {

struct StraighteningStep {
  int iteration = 0;
  double residual = 0.0;
  double m_estimate = 0.0;
};

struct StraighteningResult {
  FourierFunction beta;
  double m_inf = 0.0;
  // Sup over a collocation grid of
  // omega.d_phi beta + (m2 + a2)(1 + beta_x) - m_inf.
  double residual = 0.0;
  int iterations = 0;
  std::vector<StraighteningStep> history;
};

// Fixed point for beta with m updated by averaging. Throws kResonance on a
// small divisor omega.l + m2 j, kNumerical on non-convergence.
StraighteningResult solve_straightening(const FourierFunction& a2,
                                        const ModelParams& p,
                                        const DiophantineParams& dio,
                                        double tol = 1e-10,
                                        int max_iter = 100);

void write_csv(std::ostream& os, const StraighteningResult& sr);

// Composition operator h -> h(phi, x + beta(phi, x)) on the box of beta.
QpOperator diffeo_operator(const FourierFunction& beta);

struct FormDiagnostics {
  // First-order coefficient at the zero offset and the largest one elsewhere.
  double first_order = 0.0;
  double first_order_variation = 0.0;
  double zeroth_order_norm = 0.0;
  // Coefficient of Lambda d_y in the regularized operator.
  double lambda_coefficient = 0.0;
  double lambda_deviation = 0.0;
  double fit_residual = 0.0;
};

struct RegularizeOptions {
  // The conjugation is computed on a box enlarged by these margins and then
  // restricted.
  int pad_l = 4;
  int pad_j = 8;
  bool check_form = true;
  double form_tol = 1e-6;
};

struct RegularizedOperator {
  // omega.d_phi + bounded part.
  LinearizedOperator op;
  double m_inf = 0.0;
  double m0 = 0.0;
  double m2 = 0.0;
  // op - omega.d_phi - m_inf d_x + (m0 + m2) Lambda d_x.
  QpOperator remainder;
  QpOperator transform;
  QpOperator transform_inverse;
  FourierFunction beta_tilde;
  FormDiagnostics form;
  // ||A^{-1} A - Id|| in L(H^{s0}) on the box.
  double conjugation_defect = 0.0;
  int newton_steps = 0;
  double inverse_map_residual = 0.0;
  // Sup-grid |T1 - m_inf|.
  double t1_defect = 0.0;
  StructureFlags transform_flags;
  StructureFlags inverse_flags;
  StructureFlags remainder_flags;
};

RegularizedOperator regularize(const FourierFunction& a0,
                               const FourierFunction& a2,
                               const StraighteningResult& sr,
                               const ModelParams& p,
                               const RegularizeOptions& opt = {});

// sup_{j'} <j'>^{-order} (sum_{l,j} |R_j^{j'}(l)|^2 <l, j-j'>^{2 s0})^{1/2}.
double symbol_order_diagnostic(const QpOperator& r, double order);

}  // namespace chkam

#endif  // CHKAM_STRAIGHTENING_HPP_
