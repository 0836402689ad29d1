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

#ifndef LRM_ANALYSIS_HPP
#define LRM_ANALYSIS_HPP

#include <optional>

#include "lrm/decompose.hpp"
#include "lrm/linalg.hpp"
#include "lrm/privacy.hpp"

namespace lrm {

enum class UsefulnessNorm { L1, L2, Linf };

// (xi, eta)-usefulness target: Pr(||answer - exact||_norm >= xi) <= eta.
struct UtilityTarget {
  double xi = 1.0;           // > 0
  double eta = 0.1;          // in (0, 1)
  UsefulnessNorm norm = UsefulnessNorm::L1;
};

struct ErrorBounds {
  double upper_eps = 0.0;                  // 2 sum(lambda_k^2) / eps^2
  std::optional<double> upper_approx;      // rho^2 sum(lambda_k^2) / h^2
  std::optional<double> lower_approx;      // (sum lambda_k)^2 / (n h^2)
  double kappa = 1.0;
  double rho = 1.0;
};

// Expected squared error of the low-rank mechanism:
//   pure:   2 Phi(B) Delta(L)^2 / eps^2
//   approx: 8 ln(2/delta) Phi(B) Theta(L)^2 / eps^2
// The decomposition mode must match the privacy mode.
double expected_error_lrm(const Decomposition& dcp, const PrivacyParams& p);

// Noise-on-data error: 2 sum W_ij^2 / eps^2, or sum W_ij^2 / h^2.
double expected_error_nod(const Matrix& w, const PrivacyParams& p);

// Noise-on-results error: 2 m Delta(W)^2 / eps^2, or m Theta(W)^2 / h^2.
double expected_error_nor(const Matrix& w, const PrivacyParams& p);

// Relaxed-decomposition error bound under pure epsilon-DP:
//   2 tr(B^T B) / eps^2 + gamma sum_i x_i^2.
double relaxed_error_bound(const Decomposition& dcp, const PrivacyParams& p,
                           double gamma, const Vector& d);

// Spectral error bounds; the approximate-DP fields are present only when
// delta is supplied.
ErrorBounds bounds(const Matrix& w, const PrivacyParams& p);

// L2-mode decomposition B = rho(W) U Sigma, L = V / rho(W): exact product,
// Theta(L) = 1, and error rho^2 sum(lambda_k^2) / h^2 — never worse than
// noise-on-data under approximate DP.
Decomposition coherent_decomposition(const Matrix& w);

// Smallest epsilon for which the mechanism is (xi, eta)-useful under the
// target norm. Supported: pure epsilon-DP (delta absent) with L1 or Linf;
// (epsilon, delta)-DP with L2 or Linf. Throws std::invalid_argument for
// other combinations.
double min_epsilon_for_usefulness(const Decomposition& dcp,
                                  const UtilityTarget& target,
                                  std::optional<double> delta);

}  // namespace lrm

#endif  // LRM_ANALYSIS_HPP
