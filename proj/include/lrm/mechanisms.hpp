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

#ifndef LRM_MECHANISMS_HPP
#define LRM_MECHANISMS_HPP

#include <cstdint>
#include <string>

#include "lrm/decompose.hpp"
#include "lrm/esm.hpp"
#include "lrm/linalg.hpp"
#include "lrm/privacy.hpp"

namespace lrm {

struct NoisyAnswer {
  Vector values;
  std::string mechanism;
  uint64_t seed = 0;
};

// i.i.d. zero-mean Laplace(scale) via the inverse CDF; scale must be > 0.
Vector sample_laplace(double scale, Eigen::Index count, uint64_t seed);

// i.i.d. zero-mean Gaussian(sigma); sigma must be > 0.
Vector sample_gaussian(double sigma, Eigen::Index count, uint64_t seed);

// Noise on data: W (D + noise^n), unit sensitivity per count.
//   pure:   Laplace(1/epsilon)   approx: Gaussian(1/h)
NoisyAnswer run_nod(const Matrix& w, const Vector& d, const PrivacyParams& p,
                    uint64_t seed);

// Noise on results: W D + noise^m scaled by the workload's own sensitivity.
//   pure:   Laplace(Delta(W)/epsilon)   approx: Gaussian(Theta(W)/h)
// A zero-sensitivity workload yields exact answers.
NoisyAnswer run_nor(const Matrix& w, const Vector& d, const PrivacyParams& p,
                    uint64_t seed);

// Low-rank mechanism: B (L D + noise^r). The decomposition mode must match
// the privacy mode (L1 with pure epsilon, L2 with (epsilon, delta)).
NoisyAnswer run_lrm(const Decomposition& dcp, const Vector& d,
                    const PrivacyParams& p, uint64_t seed);

// Strategy-matrix mechanism: W A^+ (A D + noise^rows(A)), scaled by the
// strategy's column sensitivity. Throws when W is not recoverable from A
// (||W A^+ A - W||_F > 1e-6 (1 + ||W||_F)).
NoisyAnswer run_strategy(const StrategyMatrix& a, const Matrix& w,
                         const Vector& d, const PrivacyParams& p,
                         uint64_t seed);

}  // namespace lrm

#endif  // LRM_MECHANISMS_HPP
