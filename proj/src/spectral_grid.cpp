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

#include "chkam/spectral_grid.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace chkam {
namespace {

using PlanKey = std::tuple<std::vector<int>, int, int>;

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Plans are created once per shape and executed with the new-array API,
// which is thread-safe.
fftw_plan get_plan(const std::vector<int>& dims, int howmany, int sign) {
  static std::map<PlanKey, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  PlanKey key{dims, howmany, sign};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::size_t n = howmany;
  for (int d : dims) n *= d;
  fftw_complex* buf = fftw_alloc_complex(n);
  fftw_plan p = fftw_plan_many_dft(
      static_cast<int>(dims.size()), dims.data(), howmany, buf, nullptr,
      howmany, 1, buf, nullptr, howmany, 1,
      sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  if (p == nullptr) fail(ErrorKind::kNumerical, "fftw plan creation failed");
  cache.emplace(key, p);
  return p;
}

}  // namespace

void dft(cplx* data, const std::vector<int>& dims, int howmany, int sign) {
  fftw_plan p = get_plan(dims, howmany, sign);
  auto* z = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, z, z);
}

std::vector<std::size_t> lattice_to_grid(const Lattice& box, int m) {
  std::vector<std::size_t> out(box.size());
  std::vector<int> l(box.nu);
  for (std::size_t i = 0; i < box.size(); ++i) {
    box.unflatten(i, l.data());
    std::size_t g = 0;
    for (int d = 0; d < box.nu; ++d) g = g * m + ((l[d] % m) + m) % m;
    out[i] = g;
  }
  return out;
}

}  // namespace chkam
