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

#include "chkam/resonance.hpp"

namespace chkam {
namespace {

TEST(Diophantine, HandMargin) {
  DiophantineParams dio;
  dio.nu = 1;
  dio.gamma = 0.4;
  dio.l_cut = 1;
  // |1 * 1| <1>^1 / (2 * 0.4).
  const auto m = check_diophantine({1.0}, dio);
  EXPECT_DOUBLE_EQ(m.margin, 1.25);
  EXPECT_TRUE(m.pass);
  dio.gamma = 0.6;
  EXPECT_FALSE(check_diophantine({1.0}, dio).pass);
}

TEST(Diophantine, ResonantFrequencyFails) {
  DiophantineParams dio;
  const auto m = check_diophantine({1.5, 1.0}, dio);
  EXPECT_FALSE(m.pass);
  EXPECT_EQ(m.margin, 0.0);
  ASSERT_EQ(m.l.size(), 2u);
  EXPECT_EQ(3 * m.l[0] + 2 * m.l[1], 0);
}

TEST(Diophantine, MarginMonotoneInCutoff) {
  DiophantineParams dio;
  double prev = INFINITY;
  for (int lc = 1; lc <= 8; ++lc) {
    dio.l_cut = lc;
    const double m = check_diophantine({1.123, 1.764}, dio).margin;
    EXPECT_LE(m, prev);
    prev = m;
  }
}

TEST(FirstMelnikov, ExactResonance) {
  DiophantineParams dio;
  const auto m = check_first_melnikov({2.0, 1.5}, -2.0, dio);
  EXPECT_FALSE(m.pass);
  EXPECT_EQ(m.margin, 0.0);
}

TEST(FirstMelnikov, ScalesInverselyWithGamma) {
  DiophantineParams dio;
  dio.l_cut = 3;
  dio.j_cut = 6;
  const double a = check_first_melnikov({1.123, 1.764}, -2.0, dio).margin;
  dio.gamma /= 2;
  const double b = check_first_melnikov({1.123, 1.764}, -2.0, dio).margin;
  EXPECT_NEAR(b / a, 2.0, 1e-12);
}

TEST(SecondMelnikov, MatchesBruteForce) {
  DiophantineParams dio;
  dio.l_cut = 2;
  dio.j_cut = 5;
  const std::vector<double> omega{1.123, 1.764};
  const auto spec = Spectrum::unperturbed(-2.0, 6.0, -2.0, 5);
  double want = INFINITY;
  for (int l0 = -2; l0 <= 2; ++l0)
    for (int l1 = -2; l1 <= 2; ++l1)
      for (int j = -5; j <= 5; ++j)
        for (int jp = -5; jp <= 5; ++jp) {
          if (j == jp) continue;
          const double lhs =
              std::abs(omega[0] * l0 + omega[1] * l1 + spec.d(j) - spec.d(jp));
          const double lb = std::max({1, std::abs(l0), std::abs(l1)});
          const double rhs = 2.0 * std::pow(dio.gamma, dio.kappa) *
                             std::abs(j - jp) / std::pow(lb, dio.tau);
          want = std::min(want, lhs / rhs);
        }
  const auto m = check_second_melnikov(omega, spec, dio);
  EXPECT_NEAR(m.margin / want, 1.0, 1e-12);
  EXPECT_EQ(m.pass, want >= 1.0);
  ASSERT_EQ(m.l.size(), 2u);
  // Flipping (l, j, j') -> -(l, j, j') gives the same divisor.
  const double at = std::abs(omega[0] * m.l[0] + omega[1] * m.l[1] +
                             spec.d(m.j) - spec.d(m.jp));
  const double flip = std::abs(-omega[0] * m.l[0] - omega[1] * m.l[1] +
                               spec.d(-m.j) - spec.d(-m.jp));
  EXPECT_DOUBLE_EQ(at, flip);
}

TEST(Separation, DefaultParameters) {
  const auto spec = Spectrum::unperturbed(-2.0, 6.0, -2.0, 16);
  const auto rep = verify_separation_bounds(spec, 0.5, 16);
  EXPECT_TRUE(rep.hypotheses);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_DOUBLE_EQ(rep.upper, 7.0);
  EXPECT_GE(rep.min_ratio, 0.5);
  EXPECT_LE(rep.max_ratio, 7.0);
}

TEST(Separation, BoundaryParametersAreFlagged) {
  const auto spec = Spectrum::unperturbed(-2.0, 10.0, -2.0, 16);
  const auto rep = verify_separation_bounds(spec, 0.5, 16);
  EXPECT_FALSE(rep.hypotheses);
  EXPECT_FALSE(rep.pass);
}

TEST(Separation, ViolationHasWitness) {
  const auto spec = Spectrum::unperturbed(-2.0, 6.0, -2.0, 16);
  const auto rep = verify_separation_bounds(spec, 3.0, 16);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.violations, 0);
  EXPECT_NE(rep.witness_j, rep.witness_jp);
}

TEST(Inclusion, UnperturbedSpectrumHasNoCounterexamples) {
  DiophantineParams dio;
  dio.l_cut = 1;
  dio.j_cut = 60;
  const auto omegas = sample_box(dio, 200, 5);
  const auto rep = inclusion_audit(
      omegas,
      [](const std::vector<double>&) {
        return Spectrum::unperturbed(-2.0, 6.0, -2.0, 60);
      },
      dio);
  EXPECT_GT(rep.qualifying, 0);
  EXPECT_EQ(rep.counterexamples, 0);
  EXPECT_EQ(rep.shape_violations, 0);
}

TEST(Measure, ExcludedFractionMonotoneInGamma) {
  DiophantineParams dio;
  dio.l_cut = 4;
  dio.j_cut = 8;
  const auto omegas = sample_box(dio, 300, 9);
  const auto samples = sample_spectra(
      omegas,
      [](const std::vector<double>&) {
        return Spectrum::unperturbed(-2.0, 6.0, -2.0, 8);
      },
      dio);
  double prev = 0.0;
  for (double g : {0.005, 0.01, 0.02, 0.05, 0.1}) {
    dio.gamma = g;
    const auto est = estimate_excluded_measure(samples, dio, 9);
    EXPECT_GE(est.fraction, prev);
    EXPECT_LE(est.ci_low, est.fraction);
    EXPECT_GE(est.ci_high, est.fraction);
    prev = est.fraction;
  }
  EXPECT_GT(prev, 0.0);
}

TEST(Measure, FailedSamplesCountAsExcluded) {
  DiophantineParams dio;
  dio.l_cut = 2;
  dio.j_cut = 4;
  const auto samples = sample_spectra(
      sample_box(dio, 10, 1),
      [](const std::vector<double>&) -> Spectrum {
        fail(ErrorKind::kNumerical, "boom");
      },
      dio);
  for (const auto& s : samples) {
    EXPECT_FALSE(s.ok);
    EXPECT_EQ(s.error, "boom");
  }
  EXPECT_EQ(estimate_excluded_measure(samples, dio, 1).excluded, 10);
}

TEST(Wilson, KnownIntervals) {
  double lo = 0.0, hi = 0.0;
  binomial_interval(50, 100, &lo, &hi);
  EXPECT_NEAR(lo, 0.40383, 1e-5);
  EXPECT_NEAR(hi, 0.59617, 1e-5);
  binomial_interval(0, 100, &lo, &hi);
  EXPECT_NEAR(lo, 0.0, 1e-15);
  EXPECT_NEAR(hi, 0.036994, 1e-5);
}

TEST(SampleBox, DeterministicAndInRange) {
  DiophantineParams dio;
  dio.L = 1.5;
  const auto a = sample_box(dio, 200, 3);
  EXPECT_EQ(a, sample_box(dio, 200, 3));
  EXPECT_NE(a, sample_box(dio, 200, 4));
  for (const auto& w : a) {
    ASSERT_EQ(w.size(), 2u);
    for (double c : w) {
      EXPECT_GE(c, 1.5);
      EXPECT_LT(c, 3.0);
    }
  }
}

TEST(LogLogSlope, PowerLaws) {
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
  EXPECT_NEAR(loglog_slope({1, 2, 4, 0}, {5, 5, 5, 1}), 0.0, 1e-12);
  EXPECT_TRUE(std::isnan(loglog_slope({1}, {1})));
}

}  // namespace
}  // namespace chkam
