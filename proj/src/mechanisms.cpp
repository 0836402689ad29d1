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

#include "lrm/mechanisms.hpp"

#include <stdexcept>

#include "lrm/rng.hpp"
#include "lrm/workload.hpp"

namespace lrm {

namespace {

// Unit-scale noise vectors; mechanism outputs multiply these by their scale,
// so rescaled decompositions reproduce the same answer distribution under a
// shared seed.
Vector unit_laplace(Eigen::Index count, Rng& rng) {
  Vector x(count);
  for (Eigen::Index i = 0; i < count; ++i) x(i) = rng.next_laplace();
  return x;
}

Vector unit_gaussian(Eigen::Index count, Rng& rng) {
  Vector x(count);
  for (Eigen::Index i = 0; i < count; ++i) x(i) = rng.next_gaussian();
  return x;
}

void check_counts(const Matrix& w, const Vector& d) {
  if (w.cols() != d.size()) {
    throw std::invalid_argument("mechanism: counts length does not match workload");
  }
}

}  // namespace

Vector sample_laplace(double scale, Eigen::Index count, uint64_t seed) {
  if (!(scale > 0.0)) {
    throw std::domain_error("sample_laplace: scale must be > 0");
  }
  Rng rng(seed);
  return scale * unit_laplace(count, rng);
}

Vector sample_gaussian(double sigma, Eigen::Index count, uint64_t seed) {
  if (!(sigma > 0.0)) {
    throw std::domain_error("sample_gaussian: sigma must be > 0");
  }
  Rng rng(seed);
  return sigma * unit_gaussian(count, rng);
}

NoisyAnswer run_nod(const Matrix& w, const Vector& d, const PrivacyParams& p,
                    uint64_t seed) {
  check_counts(w, d);
  Rng rng(seed);
  Vector noisy_counts;
  if (p.approximate()) {
    noisy_counts = d + unit_gaussian(d.size(), rng) / h_of(p);
  } else {
    noisy_counts = d + unit_laplace(d.size(), rng) / p.epsilon;
  }
  return NoisyAnswer{w * noisy_counts, "NOD", seed};
}

NoisyAnswer run_nor(const Matrix& w, const Vector& d, const PrivacyParams& p,
                    uint64_t seed) {
  check_counts(w, d);
  Rng rng(seed);
  Vector answer = w * d;
  if (p.approximate()) {
    const double theta = sensitivity_l2(w);
    if (theta > 0.0) answer += (theta / h_of(p)) * unit_gaussian(w.rows(), rng);
  } else {
    const double delta_w = sensitivity_l1(w);
    if (delta_w > 0.0)
      answer += (delta_w / p.epsilon) * unit_laplace(w.rows(), rng);
  }
  return NoisyAnswer{std::move(answer), "NOR", seed};
}

NoisyAnswer run_lrm(const Decomposition& dcp, const Vector& d,
                    const PrivacyParams& p, uint64_t seed) {
  if (dcp.l.cols() != d.size()) {
    throw std::invalid_argument("run_lrm: counts length does not match L");
  }
  const bool wants_l2 = p.approximate();
  if ((dcp.mode == SensitivityMode::L2) != wants_l2) {
    throw std::invalid_argument(
        "run_lrm: decomposition mode does not match privacy mode");
  }
  Rng rng(seed);
  Vector intermediate = dcp.l * d;
  const double sens = sensitivity(dcp);
  if (sens > 0.0) {
    if (wants_l2) {
      intermediate += (sens / h_of(p)) * unit_gaussian(dcp.r(), rng);
    } else {
      intermediate += (sens / p.epsilon) * unit_laplace(dcp.r(), rng);
    }
  }
  return NoisyAnswer{dcp.b * intermediate, "LRM", seed};
}

NoisyAnswer run_strategy(const StrategyMatrix& a, const Matrix& w,
                         const Vector& d, const PrivacyParams& p,
                         uint64_t seed) {
  check_counts(w, d);
  if (a.a.cols() != w.cols()) {
    throw std::invalid_argument("run_strategy: strategy width does not match");
  }
  const Matrix pinv = pseudo_inverse(a.a);
  const Matrix recombine = w * pinv;  // m x r
  if ((recombine * a.a - w).norm() > 1e-6 * (1.0 + w.norm())) {
    throw std::runtime_error(
        "run_strategy: workload not reconstructible from strategy");
  }
  Rng rng(seed);
  Vector intermediate = a.a * d;
  if (p.approximate()) {
    const double theta = norm_l2_colmax(a.a);
    if (theta > 0.0)
      intermediate += (theta / h_of(p)) * unit_gaussian(a.a.rows(), rng);
  } else {
    const double delta_a = norm_l1_induced(a.a);
    if (delta_a > 0.0)
      intermediate += (delta_a / p.epsilon) * unit_laplace(a.a.rows(), rng);
  }
  return NoisyAnswer{recombine * intermediate, "STRATEGY", seed};
}

}  // namespace lrm
