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

#include <string>

#include "chkam/ch_model.hpp"
#include "test_util.hpp"

namespace chkam {
namespace {

std::string config_error(const ModelParams& p) {
  try {
    p.validate();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    return e.what();
  }
  return "";
}

TEST(ModelParams, DefaultsValidate) { EXPECT_EQ(config_error({}), ""); }

TEST(ModelParams, NamesViolatedConstraint) {
  ModelParams p;
  p.m2 = 1.0;
  EXPECT_EQ(config_error(p), "constraint violated: m2 < 0");
  p = {};
  p.m0 = 1.0;
  EXPECT_EQ(config_error(p), "constraint violated: m0 + m2 >= 0");
  p = {};
  p.m0 = 9.0;
  EXPECT_EQ(config_error(p), "constraint violated: m0 < -5 m2 - 4 delta0");
  p = {};
  p.epsilon = -1.0;
  EXPECT_EQ(config_error(p), "constraint violated: epsilon >= 0");
  p = {};
  p.delta0 = 0.0;
  EXPECT_EQ(config_error(p), "constraint violated: delta0 > 0");
}

TEST(Lambda, Eigenvalues) {
  const auto lam = lambda_op(1, 0, 3);
  const auto j = j_op(1, 0, 3);
  EXPECT_DOUBLE_EQ(lam.get({0}, 2, 2).real(), 0.2);
  EXPECT_NEAR(std::abs(j.get({0}, 2, 2) - cplx(0.0, 0.4)), 0.0, 1e-15);
  EXPECT_EQ(j.get({0}, 0, 0), cplx(0.0));
  // Lambda (1 - d_xx) = Id.
  QpOperator one_minus_dxx = QpOperator::identity(1, 0, 3);
  const auto d = QpOperator::dx(1, 0, 3);
  one_minus_dxx -= compose(d, d);
  const auto prod = compose(lam, one_minus_dxx);
  EXPECT_LT(testing::max_diff(prod.entries,
                              QpOperator::identity(1, 0, 3).entries),
            1e-14);
}

TEST(Dispersion, HandValues) {
  EXPECT_DOUBLE_EQ(dispersion0(0, -2.0, 6.0, -2.0), 0.0);
  EXPECT_DOUBLE_EQ(dispersion0(1, -2.0, 6.0, -2.0), -4.0);
  EXPECT_DOUBLE_EQ(dispersion0(2, -2.0, 6.0, -2.0), -5.6);
  EXPECT_DOUBLE_EQ(dispersion0(-2, -2.0, 6.0, -2.0), 5.6);
}

TEST(Linearized, UnperturbedSymbol) {
  ModelParams p;
  p.epsilon = 0.0;
  FourierFunction zero(2, 1, 4);
  zero.real_valued = true;
  const auto op = build_linearized(zero, zero, p);
  const std::size_t z = op.bounded.lattice().zero();
  EXPECT_NEAR(std::abs(op.bounded.at(z, 1, 1) - cplx(0.0, -4.0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(op.bounded.at(z, 2, 2) - cplx(0.0, -5.6)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(op.bounded.at(z, -2, -2) - cplx(0.0, 5.6)), 0.0, 1e-14);
  EXPECT_EQ(max_abs_entry(op.bounded - diag_part(op.bounded)), 0.0);

  const auto u = FourierFunction::mode(2, 1, 4, {1, 0}, 1);
  const auto lu = op.apply(u);
  EXPECT_NEAR(std::abs(lu.get({1, 0}, 1) - kI * (p.omega[0] - 4.0)), 0.0,
              1e-14);
}

TEST(Linearized, RealAndReversibleForEvenCoefficients) {
  ModelParams p;
  p.epsilon = 0.1;
  const auto c = synthesize_coefficients(p, 2, 6, 4.0);
  const auto op = build_linearized(c.a0, c.a2, p);
  const auto f = structure_flags(op.bounded);
  EXPECT_TRUE(f.real) << f.real_defect;
  EXPECT_TRUE(f.reversible) << f.reversible_defect;

  // Reversible: odd inputs go to even outputs.
  auto u = testing::random_function(2, 2, 6, 3);
  u = project_odd(u);
  const auto out = chkam::apply(op.bounded, u);
  EXPECT_LT(out.parity_defect(Parity::kEven), 1e-12);
}

TEST(Linearized, RejectsNonEvenCoefficient) {
  ModelParams p;
  const auto odd = project_odd(testing::random_function(2, 1, 3, 7));
  FourierFunction zero(2, 1, 3);
  EXPECT_THROW(build_linearized(odd, zero, p), Error);
}

TEST(Synthesis, DeterministicAndLinearInEpsilon) {
  ModelParams p;
  const auto a = synthesize_coefficients(p, 2, 6, 4.0);
  const auto b = synthesize_coefficients(p, 2, 6, 4.0);
  EXPECT_EQ(a.a0.coeffs, b.a0.coeffs);
  EXPECT_EQ(a.a2.coeffs, b.a2.coeffs);

  ModelParams half = p;
  half.epsilon = p.epsilon / 2;
  const auto h = synthesize_coefficients(half, 2, 6, 4.0);
  EXPECT_NEAR(sobolev_norm(h.a0, 3.0) / sobolev_norm(a.a0, 3.0), 0.5, 1e-14);
  EXPECT_NEAR(sobolev_norm(h.a2, 3.0) / sobolev_norm(a.a2, 3.0), 0.5, 1e-14);

  ModelParams other = p;
  other.seed = 2;
  const auto o = synthesize_coefficients(other, 2, 6, 4.0);
  EXPECT_NE(o.a0.coeffs, a.a0.coeffs);
}

TEST(Synthesis, NormalizationAndStructure) {
  ModelParams p;
  p.epsilon = 1.0;
  const auto c = synthesize_coefficients(p, 2, 6, 4.0);
  EXPECT_NEAR(sobolev_norm(c.jfrak, 3.0 + p.mu), 1.0, 1e-14);
  EXPECT_EQ(c.jfrak.reality_defect(), 0.0);
  EXPECT_LT(c.a0.parity_defect(Parity::kEven), 1e-15);
  EXPECT_LT(c.a2.parity_defect(Parity::kEven), 1e-15);
  EXPECT_LT(c.a0.reality_defect(), 1e-15);
  EXPECT_LT(c.a2.reality_defect(), 1e-15);
  EXPECT_GT(c.ratio_a0, 0.0);
  EXPECT_LE(c.ratio_a0, 1.0 + 1e-12);
}

}  // namespace
}  // namespace chkam
