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

#include <cmath>
#include <string>

#include "chkam/resonance.hpp"
#include "chkam/straightening.hpp"
#include "test_util.hpp"

namespace chkam {
namespace {

FourierFunction eps_cos(double eps, int l_max, int j_max) {
  FourierFunction a(2, l_max, j_max);
  a.set({0, 0}, 1, eps / 2);
  a.set({0, 0}, -1, eps / 2);
  a.real_valued = true;
  a.parity = Parity::kEven;
  return a;
}

TEST(Straightening, ZeroCoefficientIsTrivial) {
  ModelParams p;
  DiophantineParams dio;
  FourierFunction zero(2, 2, 6);
  const auto sr = solve_straightening(zero, p, dio);
  EXPECT_EQ(sr.iterations, 1);
  EXPECT_EQ(max_abs_coeff(sr.beta), 0.0);
  EXPECT_DOUBLE_EQ(sr.m_inf, p.m2);
}

TEST(Straightening, TimeIndependentCoefficientHasHarmonicMean) {
  // (m2 + eps cos x)(1 + beta_x) = m forces m to be the harmonic mean of
  // m2 + eps cos x, which is -sqrt(4 - eps^2) for m2 = -2.
  ModelParams p;
  DiophantineParams dio;
  const double eps = 0.1;
  const auto sr = solve_straightening(eps_cos(eps, 1, 24), p, dio);
  EXPECT_LE(sr.residual, 1e-10);
  EXPECT_NEAR(sr.m_inf, -std::sqrt(4.0 - eps * eps), 1e-12);
  EXPECT_LT(sr.beta.parity_defect(Parity::kOdd), 1e-15);
  EXPECT_LT(sr.beta.reality_defect(), 1e-15);
  // The iteration contracts at rate about eps / |m2|.
  ASSERT_GE(sr.history.size(), 3u);
  EXPECT_LT(sr.history[2].residual, 0.2 * sr.history[1].residual);
}

TEST(Straightening, SynthesizedCoefficientsGiveOddBeta) {
  ModelParams p;
  p.epsilon = 1e-3;
  DiophantineParams dio;
  const auto c = synthesize_coefficients(p, 8, 20, 3.0);
  const auto sr = solve_straightening(c.a2, p, dio);
  EXPECT_LE(sr.residual, 1e-10);
  EXPECT_LT(sr.beta.parity_defect(Parity::kOdd), 1e-15);
  EXPECT_LT(sr.beta.reality_defect(), 1e-15);
  EXPECT_LE(std::abs(sr.m_inf - p.m2), 2.0 * p.epsilon);
}

TEST(Straightening, BetaScalesLinearlyInEpsilon) {
  std::vector<double> eps{1e-4, 2e-4, 5e-4, 1e-3}, norms;
  DiophantineParams dio;
  for (double e : eps) {
    ModelParams p;
    p.epsilon = e;
    const auto c = synthesize_coefficients(p, 8, 20, 3.0);
    norms.push_back(sobolev_norm(solve_straightening(c.a2, p, dio).beta, 3.0));
  }
  EXPECT_NEAR(loglog_slope(eps, norms), 1.0, 0.1);
}

TEST(Straightening, LinearResponseLimit) {
  DiophantineParams dio;
  std::vector<double> ratio;
  for (double e : {1e-7, 1e-6}) {
    ModelParams p;
    p.epsilon = e;
    const auto c = synthesize_coefficients(p, 8, 20, 3.0);
    ratio.push_back(sobolev_norm(solve_straightening(c.a2, p, dio).beta, 3.0) / e);
  }
  EXPECT_NEAR(ratio[1] / ratio[0], 1.0, 1e-3);
}

TEST(Straightening, StallAtTruncationFloorIsReported) {
  ModelParams p;
  DiophantineParams dio;
  const auto c = synthesize_coefficients(p, 4, 10, 3.0);
  try {
    solve_straightening(c.a2, p, dio);
    FAIL() << "expected a stall";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("stalled"), std::string::npos);
  }
  EXPECT_LE(solve_straightening(c.a2, p, dio, 1e-6).residual, 1e-6);
}

TEST(Straightening, ResonantFrequencyThrows) {
  ModelParams p;
  p.omega = {2.0, 1.5};
  p.epsilon = 1e-2;
  DiophantineParams dio;
  const auto c = synthesize_coefficients(p, 2, 4, 3.0);
  try {
    solve_straightening(c.a2, p, dio);
    FAIL() << "expected a resonance";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kResonance);
    EXPECT_NE(std::string(e.what()).find("first-Melnikov resonance"),
              std::string::npos);
  }
}

TEST(Regularize, UnperturbedIsIdentity) {
  ModelParams p;
  p.epsilon = 0.0;
  DiophantineParams dio;
  FourierFunction zero(2, 1, 8);
  zero.real_valued = true;
  zero.parity = Parity::kEven;
  const auto sr = solve_straightening(zero, p, dio);
  RegularizeOptions opt;
  opt.pad_l = 1;
  opt.pad_j = 2;
  const auto reg = regularize(zero, zero, sr, p, opt);
  const auto id = QpOperator::identity(2, 1, 8);
  EXPECT_LT(testing::max_diff(reg.transform.entries, id.entries), 1e-14);
  EXPECT_LT(testing::max_diff(reg.transform_inverse.entries, id.entries),
            1e-14);
  EXPECT_LT(max_abs_entry(reg.remainder), 1e-14);
  EXPECT_DOUBLE_EQ(reg.m_inf, p.m2);
}

TEST(Regularize, SmallPerturbationKeepsForm) {
  ModelParams p;
  p.epsilon = 1e-3;
  DiophantineParams dio;
  const auto c = synthesize_coefficients(p, 8, 20, 3.0);
  const auto sr = solve_straightening(c.a2, p, dio);
  RegularizeOptions opt;
  const auto reg = regularize(c.a0, c.a2, sr, p, opt);
  EXPECT_LT(reg.form.first_order_variation, 1e-6);
  EXPECT_LT(reg.conjugation_defect, 1e-10);
  EXPECT_TRUE(reg.remainder_flags.real);
  EXPECT_TRUE(reg.remainder_flags.reversible);
  EXPECT_TRUE(reg.transform_flags.reversibility_preserving);
  EXPECT_LT(max_abs_entry(reg.remainder), 100.0 * p.epsilon);
}

TEST(Regularize, FormCheckNeedsEnoughModes) {
  ModelParams p;
  p.epsilon = 0.0;
  DiophantineParams dio;
  FourierFunction zero(2, 1, 6);
  const auto sr = solve_straightening(zero, p, dio);
  try {
    regularize(zero, zero, sr, p);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  RegularizeOptions opt;
  opt.check_form = false;
  EXPECT_NO_THROW(regularize(zero, zero, sr, p, opt));
}

TEST(DiffeoOperator, ZeroShiftIsIdentity) {
  FourierFunction zero(2, 1, 4);
  EXPECT_EQ(testing::max_diff(diffeo_operator(zero).entries,
                              QpOperator::identity(2, 1, 4).entries),
            0.0);
}

TEST(DiffeoOperator, MatchesComposeDiffeo) {
  FourierFunction beta(2, 1, 8);
  beta.set({0, 0}, 1, cplx(0.0, -0.025));
  beta.set({0, 0}, -1, cplx(0.0, 0.025));
  const auto u = FourierFunction::mode(2, 1, 8, {1, 0}, 2);
  const auto via_op = apply(diffeo_operator(beta), u);
  const auto direct = compose_diffeo(u, beta);
  EXPECT_LT(testing::max_diff(via_op.coeffs, direct.coeffs), 1e-10);
}

TEST(SymbolOrder, HandValues) {
  const auto id = QpOperator::identity(1, 0, 5);
  EXPECT_DOUBLE_EQ(symbol_order_diagnostic(id, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(symbol_order_diagnostic(id, 1.0), 1.0);
  const auto d = QpOperator::dx(1, 0, 5);
  EXPECT_DOUBLE_EQ(symbol_order_diagnostic(d, 0.0), 5.0);
  EXPECT_DOUBLE_EQ(symbol_order_diagnostic(d, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(symbol_order_diagnostic(j_op(1, 0, 5), -1.0), 25.0 / 26.0);
}

}  // namespace
}  // namespace chkam
