//
// Copyright 2026 The lrm Authors
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
//

#ifndef LRM_WORKLOAD_HPP
#define LRM_WORKLOAD_HPP

#include <cstdint>
#include <string>

#include "lrm/linalg.hpp"

namespace lrm {

// Synthetic workload families. All generators are deterministic for a fixed
// spec (seed included) and fill entries in a documented order, so identical
// specs produce bit-identical matrices.
//
//   WDiscrete  every entry is +1 with probability 0.02, otherwise -1
//              (row-major order).
//   WRange     each row sums a contiguous index range [s_i, t_i]; endpoints
//              drawn uniformly from [1, n] and swapped if s_i > t_i.
//   WMarginal  the n cells are viewed as an a x b grid (a = largest divisor
//              of n that is <= sqrt(n)); each row is the 0/1 indicator of one
//              row- or column-stripe of the grid, drawn uniformly among the
//              a + b stripes.
//   WRelated   product C * A of an m x s and an s x n matrix with i.i.d.
//              standard-normal entries (C filled first, then A, row-major);
//              rank is s whenever C and A have full rank.
enum class WorkloadKind { WDiscrete, WRange, WMarginal, WRelated };

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::WDiscrete;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index s = 0;  // WRelated only; must satisfy 1 <= s <= min(m, n)
  uint64_t seed = 0;
};

WorkloadKind parse_workload_kind(const std::string& name);
std::string workload_kind_name(WorkloadKind kind);

// L1 sensitivity of the query batch: maximum absolute column sum.
double sensitivity_l1(const Matrix& w);
// L2 sensitivity: maximum column Euclidean norm.
double sensitivity_l2(const Matrix& w);

// Exact answers W * d. Throws std::invalid_argument on dimension mismatch.
Vector evaluate(const Matrix& w, const Vector& d);

Matrix gen_workload(const WorkloadSpec& spec);

// Reads one count per line and merges the N values into n consecutive groups
// (the first N mod n groups get ceil(N/n) values, the rest floor(N/n)),
// summing within each group. Throws on unreadable files, non-numeric lines,
// or N < n.
Vector load_counts(const std::string& path, Eigen::Index n);

}  // namespace lrm

#endif  // LRM_WORKLOAD_HPP
