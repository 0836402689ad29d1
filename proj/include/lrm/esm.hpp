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

#ifndef LRM_ESM_HPP
#define LRM_ESM_HPP

#include <cstdint>

#include "lrm/linalg.hpp"
#include "lrm/privacy.hpp"

namespace lrm {

// Exponential smoothing baseline: minimizes the smoothed strategy objective
//   G(M) = f_mu(diag(M)) * tr(W M^{-1} W^T)   over   M >= 0 (PSD)
// by spectral projected gradient, where f_mu is the log-sum-exp softening of
// the entrywise maximum. The strategy matrix A is the PSD square root of the
// final M.
struct EsmConfig {
  double mu = 0.0;  // 0 = choose 0.01 / log(n) (0.01 when n < 2)
  int max_iters = 200;
  double sufficient_decrease = 1e-4;
  int window = 10;  // objective-history window for the step acceptance test
  uint64_t seed = 0;
};

struct StrategyMatrix {
  Matrix a;  // r x n

  Matrix gram() const { return a.transpose() * a; }
};

// f_mu(v) = max(v) + mu log sum_i exp((v_i - max(v)) / mu).
// Satisfies max(v) <= f_mu(v) <= max(v) + mu log(len(v)).
double logsumexp_max(const Vector& v, double mu);

// Softmax weights d f_mu / d v: nonnegative, summing to 1.
Vector logsumexp_grad(const Vector& v, double mu);

// f_mu(diag(M)) * tr(W M^{-1} W^T); M must be symmetric positive definite
// (the trace term is computed through a Cholesky solve, never an explicit
// inverse). Throws std::runtime_error when the solve fails.
double esm_objective(const Matrix& m_psd, const Matrix& w, double mu);

// Spectral projected gradient from M = I with eigenvalue trimming onto the
// PSD cone. The returned strategy never has a larger smoothed objective than
// the start point.
StrategyMatrix esm_solve(const Matrix& w, const EsmConfig& cfg);

// Expected squared error of the strategy-matrix mechanism:
//   pure:   2 |||A|||_{1,inf}^2 tr(W A^+ A^{+T} W^T) / epsilon^2
//   approx:     |||A|||_{2,inf}^2 tr(W A^+ A^{+T} W^T) / h^2
// Throws when W is not in the row space of A.
double strategy_error(const StrategyMatrix& a, const Matrix& w,
                      const PrivacyParams& p);

}  // namespace lrm

#endif  // LRM_ESM_HPP
