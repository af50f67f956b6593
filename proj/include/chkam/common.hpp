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

#ifndef CHKAM_COMMON_HPP_
#define CHKAM_COMMON_HPP_

#include <algorithm>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace chkam {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

enum class ErrorKind { kConfig, kResonance, kNumerical, kCheck };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

// Cubic box {l in Z^nu : |l|_inf <= l_max}, lexicographic with the last
// component fastest. Negation l -> -l maps flat index i to size()-1-i.
struct Lattice {
  int nu = 1;
  int l_max = 0;

  int side() const { return 2 * l_max + 1; }
  std::size_t size() const {
    std::size_t n = 1;
    for (int d = 0; d < nu; ++d) n *= static_cast<std::size_t>(side());
    return n;
  }
  void unflatten(std::size_t idx, int* l) const {
    for (int d = nu - 1; d >= 0; --d) {
      l[d] = static_cast<int>(idx % side()) - l_max;
      idx /= side();
    }
  }
  std::vector<int> point(std::size_t idx) const {
    std::vector<int> l(nu);
    unflatten(idx, l.data());
    return l;
  }
  bool contains(const int* l) const {
    for (int d = 0; d < nu; ++d)
      if (l[d] < -l_max || l[d] > l_max) return false;
    return true;
  }
  std::size_t flatten(const int* l) const {
    std::size_t idx = 0;
    for (int d = 0; d < nu; ++d) idx = idx * side() + (l[d] + l_max);
    return idx;
  }
  int sup(std::size_t idx) const {
    int m = 0;
    for (int d = nu - 1; d >= 0; --d) {
      int c = static_cast<int>(idx % side()) - l_max;
      idx /= side();
      m = std::max(m, c < 0 ? -c : c);
    }
    return m;
  }
  double dot(std::size_t idx, const std::vector<double>& omega) const {
    double s = 0.0;
    for (int d = nu - 1; d >= 0; --d) {
      s += omega[d] * (static_cast<int>(idx % side()) - l_max);
      idx /= side();
    }
    return s;
  }
  std::size_t neg(std::size_t idx) const { return size() - 1 - idx; }
  std::size_t zero() const { return size() / 2; }
};

// <l,j> = max(1, |j|, |l|_inf).
inline double bracket(int l_sup, int j) {
  int a = j < 0 ? -j : j;
  return static_cast<double>(std::max(1, std::max(a, l_sup)));
}

}  // namespace chkam

#endif  // CHKAM_COMMON_HPP_
