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


#include "chkam/spectrum.hpp"

#include <cmath>
#include <ostream>

namespace chkam {

Spectrum Spectrum::unperturbed(double m_inf, double m0, double m2, int j_max) {
  Spectrum s;
  s.m_inf = m_inf;
  s.m0 = m0;
  s.m2 = m2;
  s.j_max = j_max;
  s.r.assign(2 * j_max + 1, 0.0);
  return s;
}

double Spectrum::weighted_sup() const {
  double w = 0.0;
  for (int j = -j_max; j <= j_max; ++j)
    w = std::max(w, bracket(0, j) * std::abs(r_at(j)));
  return w;
}

double Spectrum::oddness_defect() const {
  double w = 0.0;
  for (int j = 0; j <= j_max; ++j) w = std::max(w, std::abs(d(j) + d(-j)));
  return w;
}

Spectrum Spectrum::truncated(int jm) const {
  Spectrum out = unperturbed(m_inf, m0, m2, jm);
  for (int j = -jm; j <= jm; ++j) out.r[j + jm] = r_at(j);
  return out;
}

QpOperator Spectrum::as_operator(int nu, int l_max) const {
  std::vector<cplx> dj(2 * j_max + 1);
  for (int j = -j_max; j <= j_max; ++j) dj[j + j_max] = kI * d(j);
  return QpOperator::diagonal(nu, l_max, j_max, dj);
}

void write_csv(std::ostream& os, const Spectrum& s) {
  const auto prec = os.precision(17);
  os << "j,d_j_0,r_j_inf,d_j_inf\n";
  for (int j = -s.j_max; j <= s.j_max; ++j)
    os << j << ',' << s.d0(j) << ',' << s.r_at(j) << ',' << s.d(j) << '\n';
  os.precision(prec);
}

}  // namespace chkam
