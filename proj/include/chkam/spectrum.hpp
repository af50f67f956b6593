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


// Normal form spectrum d_j = m_inf j - (m0 + m2) j / (1 + j^2) + r_j.

#ifndef CHKAM_SPECTRUM_HPP_
#define CHKAM_SPECTRUM_HPP_

#include <iosfwd>
#include <vector>

#include "chkam/ch_model.hpp"

namespace chkam {

struct Spectrum {
  double m_inf = 0.0;
  double m0 = 0.0;
  double m2 = 0.0;
  int j_max = 0;
  // r[j + j_max]; r_j = 0 for |j| > j_max.
  std::vector<double> r;

  static Spectrum unperturbed(double m_inf, double m0, double m2, int j_max);

  double r_at(int j) const {
    return (j < -j_max || j > j_max) ? 0.0 : r[j + j_max];
  }
  double d0(int j) const { return dispersion0(j, m_inf, m0, m2); }
  double d(int j) const { return d0(j) + r_at(j); }
  // sup_j <j> |r_j|.
  double weighted_sup() const;
  // max_j |r_j + r_{-j}|.
  double oddness_defect() const;
  // Same m's with r restricted to |j| <= j_max.
  Spectrum truncated(int j_max) const;
  // Diagonal operator i d_j on the given box.
  QpOperator as_operator(int nu, int l_max) const;
};

void write_csv(std::ostream& os, const Spectrum& s);

}  // namespace chkam

#endif  // CHKAM_SPECTRUM_HPP_
