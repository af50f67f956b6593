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

// Linearized Camassa-Holm operator with quasi-periodic coefficients.

#ifndef CHKAM_CH_MODEL_HPP_
#define CHKAM_CH_MODEL_HPP_

#include <cstdint>
#include <vector>

#include "chkam/fourier_field.hpp"
#include "chkam/qp_operator.hpp"

namespace chkam {

struct ModelParams {
  double m0 = 6.0;
  double m2 = -2.0;
  double epsilon = 1e-3;
  double eta0 = 0.0;
  // Smoothness offset in the normalization ||J||_{s0 + mu} <= 1.
  double mu = 1.0;
  std::uint64_t seed = 1;
  std::vector<double> omega{1.123, 1.764};
  double delta0 = 0.5;

  int nu() const { return static_cast<int>(omega.size()); }
  // Throws kConfig naming the first violated constraint.
  void validate() const;
};

// omega.d_phi plus a bounded Toeplitz part. `bounded` excludes the
// unbounded diagonal i(omega.l).
struct LinearizedOperator {
  std::vector<double> omega;
  QpOperator bounded;

  FourierFunction apply(const FourierFunction& u) const;
  // omega.d_phi materialized on the (l, j) lattice: i(omega.l) delta.
  std::vector<cplx> time_diagonal() const;
};

// m_inf j - (m0 + m2) j / (1 + j^2); -J(m0 + m2 d_xx) has symbol
// i dispersion0(j, m2, m0, m2).
double dispersion0(int j, double m_inf, double m0, double m2);

QpOperator lambda_op(int nu, int l_max, int j_max);
// J = Lambda d_x.
QpOperator j_op(int nu, int l_max, int j_max);

LinearizedOperator build_linearized(const FourierFunction& a0,
                                    const FourierFunction& a2,
                                    const ModelParams& p);

struct Coefficients {
  FourierFunction jfrak;
  FourierFunction a0;
  FourierFunction a2;
  // ||a_i||_s / ||J||_{s + eta0} at the requested s.
  double ratio_a0 = 0.0;
  double ratio_a2 = 0.0;
};

Coefficients synthesize_coefficients(const ModelParams& p, int l_max,
                                     int j_max, double s_target);

}  // namespace chkam

#endif  // CHKAM_CH_MODEL_HPP_
