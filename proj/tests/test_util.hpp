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


#ifndef CHKAM_TESTS_TEST_UTIL_HPP_
#define CHKAM_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <random>

#include "chkam/fourier_field.hpp"
#include "chkam/qp_operator.hpp"

namespace chkam::testing {

inline FourierFunction random_function(int nu, int l_max, int j_max,
                                       std::uint64_t seed, double decay = 0.0) {
  FourierFunction u(nu, l_max, j_max);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  const Lattice box = u.lattice();
  for (std::size_t li = 0; li < box.size(); ++li)
    for (int j = -j_max; j <= j_max; ++j)
      u.at(li, j) = cplx(n(rng), n(rng)) *
                    std::pow(bracket(box.sup(li), j), -decay);
  return u;
}

// Real-valued and even: coefficients real and symmetric under (l,j) -> -(l,j).
inline FourierFunction random_even_real(int nu, int l_max, int j_max,
                                        std::uint64_t seed,
                                        double decay = 2.0) {
  FourierFunction u = random_function(nu, l_max, j_max, seed, decay);
  const std::size_t n = u.coeffs.size();
  for (std::size_t i = 0; i < n; ++i) u.coeffs[i] = u.coeffs[i].real();
  for (std::size_t i = 0; i < n / 2; ++i) u.coeffs[n - 1 - i] = u.coeffs[i];
  u.real_valued = true;
  u.parity = Parity::kEven;
  return u;
}

inline QpOperator random_operator(int nu, int l_max, int j_max,
                                  std::uint64_t seed, double scale = 1.0) {
  QpOperator a(nu, l_max, j_max);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (auto& e : a.entries) e = scale * cplx(n(rng), n(rng));
  return a;
}

inline double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace chkam::testing

#endif  // CHKAM_TESTS_TEST_UTIL_HPP_
