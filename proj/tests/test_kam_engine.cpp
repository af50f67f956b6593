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


#include <gtest/gtest.h>

#include <climits>
#include <cmath>
#include <random>
#include <string>

#include "chkam/kam_engine.hpp"
#include "test_util.hpp"

namespace chkam {
namespace {

// Real and reversible: purely imaginary entries, odd under (l,j,j') -> -.
QpOperator random_reversible(int nu, int l_max, int j_max, double scale,
                             std::uint64_t seed) {
  QpOperator a(nu, l_max, j_max);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  const std::size_t sz = a.entries.size();
  for (std::size_t i = 0; i < sz / 2; ++i) {
    const double x = scale * n(rng);
    a.entries[i] = kI * x;
    a.entries[sz - 1 - i] = -kI * x;
  }
  return a;
}

Spectrum linear_spectrum(int j_max) {
  return Spectrum::unperturbed(1.0, 0.0, 0.0, j_max);
}

TEST(Schedule, CutoffsAndExponents) {
  const auto s = KamSchedule::make(7.0);
  EXPECT_EQ(s.exponent_a, 45.0);
  EXPECT_EQ(s.exponent_b, 46.0);
  EXPECT_EQ(s.cutoff(-1), 1);
  EXPECT_EQ(s.cutoff(0), 8);
  EXPECT_EQ(s.cutoff(1), 22);
  EXPECT_EQ(s.cutoff(2), 107);
  EXPECT_EQ(s.cutoff(40), INT_MAX);
  DiophantineParams dio;
  EXPECT_NEAR(smallness_condition(s, 1e-3, dio), 64.0, 1e-9);
}

TEST(Schedule, Validation) {
  KamSchedule s;
  s.N0 = 1;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.tol = 0.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Homological, HandValue) {
  QpOperator r(1, 2, 3);
  r.set({1}, 2, 1, 1.0);
  DiophantineParams dio;
  double mind = 0.0;
  const auto psi = solve_homological(r, linear_spectrum(3), {1.0}, 8, dio, &mind);
  // divisor 1 + d_2 - d_1 = 2.
  EXPECT_NEAR(std::abs(psi.get({1}, 2, 1) - cplx(0.0, 0.5)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(mind, 2.0);
  EXPECT_EQ(max_abs_entry(psi), 0.5);
}

TEST(Homological, DiagonalAndHighModesAreNotSolved) {
  QpOperator r(1, 3, 3);
  r.set({0}, 2, 2, 1.0);
  r.set({3}, 1, 0, 1.0);
  DiophantineParams dio;
  const auto psi = solve_homological(r, linear_spectrum(3), {1.0}, 2, dio);
  EXPECT_EQ(max_abs_entry(psi), 0.0);
}

TEST(Homological, ExactResonanceThrows) {
  QpOperator r(1, 2, 3);
  r.set({1}, 1, 2, 1.0);
  DiophantineParams dio;
  try {
    solve_homological(r, linear_spectrum(3), {1.0}, 8, dio);
    FAIL() << "expected a resonance";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kResonance);
    EXPECT_NE(std::string(e.what()).find("second-Melnikov resonance"),
              std::string::npos);
  }
}

TEST(Homological, EquationHoldsEntrywise) {
  const std::vector<double> omega{1.123, 1.764};
  const auto spec = Spectrum::unperturbed(-2.0, 6.0, -2.0, 5);
  const auto r = random_reversible(2, 3, 5, 1.0, 3);
  DiophantineParams dio;
  const int n_cut = 2;
  const auto psi = solve_homological(r, spec, omega, n_cut, dio);
  QpOperator h = omega_derivative(psi, omega);
  h += compose(spec.as_operator(2, 3), psi);
  h -= compose(psi, spec.as_operator(2, 3));
  h += smooth_project(r, n_cut).first;
  h -= diag_part(r);
  EXPECT_LT(max_abs_entry(h), 1e-13);
  EXPECT_TRUE(structure_flags(psi).reversibility_preserving);
  EXPECT_TRUE(structure_flags(psi).real);
}

TEST(KamStep, ZeroRemainderIsFixedPoint) {
  const std::vector<double> omega{1.123, 1.764};
  KamState st{Spectrum::unperturbed(-2.0, 6.0, -2.0, 4), QpOperator(2, 2, 4)};
  DiophantineParams dio;
  const auto step = kam_step(st, 0, omega, KamSchedule::make(7.0), dio);
  EXPECT_EQ(max_abs_entry(step.next.remainder), 0.0);
  EXPECT_EQ(step.next.spec.r, st.spec.r);
  EXPECT_EQ(testing::max_diff(step.phi.entries,
                              QpOperator::identity(2, 2, 4).entries),
            0.0);
}

TEST(KamStep, DiagonalRemainderMovesIntoSpectrum) {
  const std::vector<double> omega{1.123, 1.764};
  QpOperator r(2, 1, 3);
  const std::vector<double> rj{-0.001, -0.003, -0.002, 0.0, 0.002, 0.003, 0.001};
  const std::size_t z = r.lattice().zero();
  for (int j = -3; j <= 3; ++j) r.at(z, j, j) = kI * rj[j + 3];
  KamState st{Spectrum::unperturbed(-2.0, 6.0, -2.0, 3), r};
  DiophantineParams dio;
  const auto step = kam_step(st, 0, omega, KamSchedule::make(7.0), dio);
  for (int j = -3; j <= 3; ++j)
    EXPECT_NEAR(step.next.spec.r_at(j), rj[j + 3], 1e-16);
  EXPECT_LT(max_abs_entry(step.next.remainder), 1e-16);
  EXPECT_NEAR(step.record.max_eig_update, 0.006, 1e-16);
  EXPECT_EQ(step.record.imag_defect, 0.0);
}

TEST(Diagonalize, ZeroRemainderNeedsNoSteps) {
  KamState st{Spectrum::unperturbed(-2.0, 6.0, -2.0, 4), QpOperator(2, 2, 4)};
  DiophantineParams dio;
  const auto d = diagonalize(st, {1.123, 1.764}, KamSchedule::make(7.0), dio);
  EXPECT_EQ(d.iterations, 0);
  EXPECT_TRUE(d.verified);
  EXPECT_EQ(testing::max_diff(d.transform.entries,
                              QpOperator::identity(2, 2, 4).entries),
            0.0);
}

TEST(Diagonalize, SmallReversibleRemainderConverges) {
  const std::vector<double> omega{1.123, 1.764};
  // Offsets |l| <= 1 in an l_max = 4 box: the products of a few steps stay
  // inside the box, so truncation does not spoil the conjugation identity.
  KamState st{Spectrum::unperturbed(-2.0, 6.0, -2.0, 6),
              resized(random_reversible(2, 1, 6, 1e-4, 11), 4, 6)};
  DiophantineParams dio;
  const auto sched = KamSchedule::make(7.0);
  const auto d = diagonalize(st, omega, sched, dio);
  EXPECT_LE(d.final_remainder, sched.tol);
  EXPECT_LE(d.iterations, 6);
  EXPECT_LT(d.conjugation_defect, 1e-9);
  EXPECT_EQ(d.spec.oddness_defect(), 0.0);
  for (const auto& rec : d.trace.steps) {
    EXPECT_LT(rec.homological_residual, 1e-12);
    EXPECT_LT(rec.imag_defect, 1e-12);
    EXPECT_LT(rec.next_real_defect, 1e-9);
    EXPECT_LT(rec.next_reversible_defect, 1e-9);
  }
  const auto& norms = d.trace.remainder_norms;
  for (std::size_t n = 1; n + 1 < norms.size(); ++n)
    if (norms[n + 1] > 0.0)
      EXPECT_GE(std::log(norms[n + 1]) / std::log(norms[n]), 1.3);

  const auto tp = compose_transform(d.transform, d.transform_inverse,
                                    d.transform, d.transform_inverse);
  EXPECT_LT(tp.inverse_defect, 1e-12);
  EXPECT_GE(tp.bound, 1.0 - 1e-12);
}

TEST(Diagonalize, ReportsPartialTraceOnFailure) {
  const std::vector<double> omega{1.123, 1.764};
  KamState st{Spectrum::unperturbed(-2.0, 6.0, -2.0, 4),
              random_reversible(2, 1, 4, 1e-4, 12)};
  DiophantineParams dio;
  auto sched = KamSchedule::make(7.0);
  sched.max_iter = 1;
  sched.tol = 1e-300;
  try {
    diagonalize(st, omega, sched, dio);
    FAIL() << "expected non-convergence";
  } catch (const KamFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_EQ(e.trace().steps.size(), 1u);
  }
}

}  // namespace
}  // namespace chkam
