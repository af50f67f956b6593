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


// Time evolution of the quasi-periodically forced linear problem
// h_t = -B(omega t) h, directly and through the reduced diagonal flow.

#ifndef CHKAM_DYNAMICS_HPP_
#define CHKAM_DYNAMICS_HPP_

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chkam/fourier_field.hpp"
#include "chkam/qp_operator.hpp"
#include "chkam/spectrum.hpp"

namespace chkam {

using XVector = std::vector<cplx>;

struct FlowResult {
  enum class Method { kReduced, kDirect };
  Method method = Method::kDirect;
  std::vector<double> times;
  // x-Fourier coefficients, j in [-j_max, j_max].
  std::vector<XVector> states;
  std::vector<double> sobolev_norms;
  double max_ratio = 0.0;
  // Reduced flow only: max_{t,j} ||g_j(t)| - |g_j(0)||.
  double modulus_defect = 0.0;
};

// l^2 norm of x coefficients weighted by max(1, |j|)^s.
double x_sobolev_norm(const XVector& h, double s);

// out = -B(omega t) h. Entries below drop_tol times the largest one are
// skipped.
class SnapshotGenerator {
 public:
  SnapshotGenerator(const QpOperator& b, std::vector<double> omega,
                    double drop_tol = 1e-15);
  std::size_t nonzeros() const { return entries_.size(); }
  void operator()(double t, const XVector& h, XVector& out) const;
  int j_max() const { return j_max_; }

 private:
  struct Entry {
    int phase;
    int row;
    int col;
    cplx value;
  };
  std::vector<double> omega_;
  int j_max_;
  std::vector<std::vector<int>> offsets_;
  std::vector<Entry> entries_;
};

using Generator =
    std::function<void(double t, const XVector& h, XVector& out)>;

// U(phi) = sum_l U(l) exp(i l.phi) as a dense (2J+1)^2 row-major matrix.
std::vector<cplx> evaluate_operator(const QpOperator& u, const double* phi);

// g(0) = U(0)^{-1} h0, g_j(t) = exp(-i d_j t) g_j(0), h(t) = U(omega t) g(t).
// Throws kNumerical when h0 has j = 0 content.
FlowResult evolve_reduced(const Spectrum& spec, const QpOperator& u,
                          const std::vector<double>& omega,
                          const FourierFunction& h0,
                          const std::vector<double>& times, double s);

// Classical RK4 between consecutive times with steps of at most dt. times
// may decrease.
FlowResult evolve_direct(const Generator& gen, const FourierFunction& h0,
                         const std::vector<double>& times, double dt,
                         double s);

struct StabilityReport {
  double max_ratio_direct = 0.0;
  double max_ratio_reduced = 0.0;
  // sup_t ||h_direct(t) - h_reduced(t)||_{s0}.
  double discrepancy = 0.0;
  std::vector<double> discrepancy_t;
};

StabilityReport stability_report(const FlowResult& direct,
                                 const FlowResult& reduced, double s0);

void write_csv(std::ostream& os, const FlowResult& direct,
               const FlowResult& reduced, const StabilityReport& rep);

}  // namespace chkam

#endif  // CHKAM_DYNAMICS_HPP_
