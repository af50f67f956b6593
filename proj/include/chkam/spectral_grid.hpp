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

#ifndef CHKAM_SPECTRAL_GRID_HPP_
#define CHKAM_SPECTRAL_GRID_HPP_

#include <vector>

#include "chkam/common.hpp"

namespace chkam {

// In-place unnormalized multidimensional DFT over the leading `dims` of a
// row-major array whose trailing axis holds `howmany` contiguous components.
// sign = +1 synthesizes (exp(+i k.theta)), sign = -1 analyzes.
void dft(cplx* data, const std::vector<int>& dims, int howmany, int sign);

// Flat grid index of lattice point l reduced mod m along each axis.
std::vector<std::size_t> lattice_to_grid(const Lattice& box, int m);

// Smallest grid size that makes a product of two box-supported series
// alias-free on the box.
inline int product_grid_size(int l_max) { return 3 * l_max + 1; }

}  // namespace chkam

#endif  // CHKAM_SPECTRAL_GRID_HPP_
