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


// KAM reducibility of omega.d_phi + D + R to a constant-coefficient
// diagonal operator.

#ifndef CHKAM_KAM_ENGINE_HPP_
#define CHKAM_KAM_ENGINE_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "chkam/qp_operator.hpp"
#include "chkam/resonance.hpp"
#include "chkam/spectrum.hpp"
#include "chkam/straightening.hpp"

namespace chkam {

struct KamSchedule {
  int N0 = 8;
  double exponent_a = 45.0;
  double exponent_b = 46.0;
  int max_iter = 12;
  double tol = 1e-10;
  double tau0 = 1.0;
  // Random probes of the modulo-tame estimate.
  std::uint64_t probe_seed = 0x51ed270b27c0ffeeULL;

  static KamSchedule make(double tau);
  // N_n = N0^{(3/2)^n}, N_{-1} = 1; saturates at INT_MAX.
  int cutoff(int n) const;
  void validate() const;
};

// N0^tau0 eps gamma^{-1-kappa}; the scheme assumes this is at most 1.
double smallness_condition(const KamSchedule& sched, double epsilon,
                           const DiophantineParams& dio);

struct KamRecord {
  int n = 0;
  int N = 0;
  double remainder_norm = 0.0;
  double modulo_tame_estimate = 0.0;
  double max_eig_update = 0.0;
  double min_divisor = 0.0;
  double homological_residual = 0.0;
  double conjugation_defect = 0.0;
  double imag_defect = 0.0;
  double psi_norm = 0.0;
  double psi_preserving_defect = 0.0;
  double next_real_defect = 0.0;
  double next_reversible_defect = 0.0;
  int neumann_terms = 0;
};

struct KamTrace {
  std::vector<KamRecord> steps;
  // ||R_n||_{L(H^{s0})} for n = 0 .. iterations.
  std::vector<double> remainder_norms;
};

void write_csv(std::ostream& os, const KamTrace& trace);

struct KamState {
  Spectrum spec;
  QpOperator remainder;
  // Cached ||remainder||_{L(H^{s0})}; negative when unknown.
  double remainder_norm = -1.0;
};

class KamFailure : public Error {
 public:
  KamFailure(ErrorKind kind, const std::string& what, KamTrace trace)
      : Error(kind, what), trace_(std::move(trace)) {}
  const KamTrace& trace() const { return trace_; }

 private:
  KamTrace trace_;
};

// D0 from m_inf, m0, m2 with r = 0; R0 is the regularized remainder.
KamState split(const RegularizedOperator& lhat);

// Psi_j^{j'}(l) = -R_j^{j'}(l) / i(omega.l + d_j - d_j') for |l| <= N,
// (l, j, j') != (0, j, j). Throws kResonance below the second Melnikov
// threshold. min_divisor receives the smallest |omega.l + d_j - d_j'| over
// the solved entries with j != j'.
QpOperator solve_homological(const QpOperator& r, const Spectrum& spec,
                             const std::vector<double>& omega, int n_cut,
                             const DiophantineParams& dio,
                             double* min_divisor = nullptr);

struct KamStep {
  KamState next;
  QpOperator phi;
  QpOperator phi_inverse;
  KamRecord record;
};

KamStep kam_step(const KamState& state, int n,
                 const std::vector<double>& omega, const KamSchedule& sched,
                 const DiophantineParams& dio);

struct Diagonalization {
  Spectrum spec;
  QpOperator transform;
  QpOperator transform_inverse;
  KamTrace trace;
  int iterations = 0;
  double final_remainder = 0.0;
  // ||T^{-1} L0 T - (omega.d_phi + D_inf)|| in L(H^{s0}).
  double conjugation_defect = 0.0;
  bool verified = false;
};

// Throws KamFailure on resonance, Neumann failure or non-convergence.
Diagonalization diagonalize(const KamState& l0,
                            const std::vector<double>& omega,
                            const KamSchedule& sched,
                            const DiophantineParams& dio);

struct TransformProduct {
  QpOperator transform;
  QpOperator transform_inverse;
  double inverse_defect = 0.0;
  // ||T||_{L(H^{s0})}.
  double bound = 0.0;
};

TransformProduct compose_transform(const QpOperator& u1,
                                   const QpOperator& u1_inv,
                                   const QpOperator& u2,
                                   const QpOperator& u2_inv);

}  // namespace chkam

#endif  // CHKAM_KAM_ENGINE_HPP_
