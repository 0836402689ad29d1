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

#include "lrm/workload.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "lrm/rng.hpp"

namespace lrm {

WorkloadKind parse_workload_kind(const std::string& name) {
  if (name == "WDiscrete") return WorkloadKind::WDiscrete;
  if (name == "WRange") return WorkloadKind::WRange;
  if (name == "WMarginal") return WorkloadKind::WMarginal;
  if (name == "WRelated") return WorkloadKind::WRelated;
  throw std::invalid_argument("unknown workload kind: " + name);
}

std::string workload_kind_name(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::WDiscrete: return "WDiscrete";
    case WorkloadKind::WRange: return "WRange";
    case WorkloadKind::WMarginal: return "WMarginal";
    case WorkloadKind::WRelated: return "WRelated";
  }
  throw std::invalid_argument("unknown workload kind");
}

double sensitivity_l1(const Matrix& w) { return norm_l1_induced(w); }

double sensitivity_l2(const Matrix& w) { return norm_l2_colmax(w); }

Vector evaluate(const Matrix& w, const Vector& d) {
  if (w.cols() != d.size()) {
    throw std::invalid_argument("evaluate: workload has " +
                                std::to_string(w.cols()) +
                                " columns but counts have length " +
                                std::to_string(d.size()));
  }
  return w * d;
}

namespace {

void validate_spec(const WorkloadSpec& spec) {
  if (spec.m < 1 || spec.n < 1) {
    throw std::invalid_argument("workload spec: m and n must be positive");
  }
  if (spec.kind == WorkloadKind::WRelated &&
      (spec.s < 1 || spec.s > std::min(spec.m, spec.n))) {
    throw std::invalid_argument("workload spec: WRelated needs 1 <= s <= min(m, n)");
  }
}

// Largest divisor of n that is <= sqrt(n).
Eigen::Index grid_rows(Eigen::Index n) {
  Eigen::Index best = 1;
  for (Eigen::Index a = 1; a * a <= n; ++a) {
    if (n % a == 0) best = a;
  }
  return best;
}

Matrix gen_discrete(const WorkloadSpec& spec) {
  Rng rng(spec.seed);
  Matrix w(spec.m, spec.n);
  for (Eigen::Index i = 0; i < spec.m; ++i)
    for (Eigen::Index j = 0; j < spec.n; ++j)
      w(i, j) = rng.next_double() < 0.02 ? 1.0 : -1.0;
  return w;
}

Matrix gen_range(const WorkloadSpec& spec) {
  Rng rng(spec.seed);
  Matrix w = Matrix::Zero(spec.m, spec.n);
  for (Eigen::Index i = 0; i < spec.m; ++i) {
    auto s = static_cast<Eigen::Index>(
        rng.next_below(static_cast<uint64_t>(spec.n)));
    auto t = static_cast<Eigen::Index>(
        rng.next_below(static_cast<uint64_t>(spec.n)));
    if (s > t) std::swap(s, t);
    w.row(i).segment(s, t - s + 1).setOnes();
  }
  return w;
}

Matrix gen_marginal(const WorkloadSpec& spec) {
  const Eigen::Index a = grid_rows(spec.n);
  const Eigen::Index b = spec.n / a;
  Rng rng(spec.seed);
  Matrix w = Matrix::Zero(spec.m, spec.n);
  for (Eigen::Index i = 0; i < spec.m; ++i) {
    const auto stripe = static_cast<Eigen::Index>(
        rng.next_below(static_cast<uint64_t>(a + b)));
    if (stripe < a) {
      // Row-stripe: cell (stripe, j) for all j; cell index = row * b + col.
      for (Eigen::Index j = 0; j < b; ++j) w(i, stripe * b + j) = 1.0;
    } else {
      const Eigen::Index col = stripe - a;
      for (Eigen::Index j = 0; j < a; ++j) w(i, j * b + col) = 1.0;
    }
  }
  return w;
}

Matrix gen_related(const WorkloadSpec& spec) {
  Rng rng(spec.seed);
  Matrix c(spec.m, spec.s);
  for (Eigen::Index i = 0; i < spec.m; ++i)
    for (Eigen::Index j = 0; j < spec.s; ++j) c(i, j) = rng.next_gaussian();
  Matrix a(spec.s, spec.n);
  for (Eigen::Index i = 0; i < spec.s; ++i)
    for (Eigen::Index j = 0; j < spec.n; ++j) a(i, j) = rng.next_gaussian();
  return c * a;
}

}  // namespace

Matrix gen_workload(const WorkloadSpec& spec) {
  validate_spec(spec);
  switch (spec.kind) {
    case WorkloadKind::WDiscrete: return gen_discrete(spec);
    case WorkloadKind::WRange: return gen_range(spec);
    case WorkloadKind::WMarginal: return gen_marginal(spec);
    case WorkloadKind::WRelated: return gen_related(spec);
  }
  throw std::invalid_argument("unknown workload kind");
}

Vector load_counts(const std::string& path, Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("load_counts: n must be positive");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double value = 0.0;
    const char* begin = line.data();
    const char* end = line.data() + line.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r'))
      --end;
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end || begin == end ||
        !std::isfinite(value)) {
      throw std::runtime_error(path + ": not a count: '" + line + "'");
    }
    raw.push_back(value);
  }
  const auto total = static_cast<Eigen::Index>(raw.size());
  if (total < n) {
    throw std::runtime_error(path + ": fewer counts than requested bins");
  }
  // First (total mod n) groups take ceil(total/n) values, the rest the floor.
  const Eigen::Index small = total / n;
  const Eigen::Index leftovers = total % n;
  Vector merged(n);
  Eigen::Index pos = 0;
  for (Eigen::Index g = 0; g < n; ++g) {
    const Eigen::Index size = small + (g < leftovers ? 1 : 0);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < size; ++k) sum += raw[static_cast<size_t>(pos++)];
    merged(g) = sum;
  }
  return merged;
}

}  // namespace lrm
