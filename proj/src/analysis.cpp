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

#include "lrm/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace lrm {

double expected_error_lrm(const Decomposition& dcp, const PrivacyParams& p) {
  const bool wants_l2 = p.approximate();
  if ((dcp.mode == SensitivityMode::L2) != wants_l2) {
    throw std::invalid_argument(
        "expected_error_lrm: decomposition mode does not match privacy mode");
  }
  const double phi = scale_phi(dcp.b);
  const double sens = sensitivity(dcp);
  if (wants_l2) {
    const double h = h_of(p);
    return phi * sens * sens / (h * h);
  }
  return 2.0 * phi * sens * sens / (p.epsilon * p.epsilon);
}

double expected_error_nod(const Matrix& w, const PrivacyParams& p) {
  const double squared_sum = w.cwiseAbs2().sum();
  if (p.approximate()) {
    const double h = h_of(p);
    return squared_sum / (h * h);
  }
  return 2.0 * squared_sum / (p.epsilon * p.epsilon);
}

double expected_error_nor(const Matrix& w, const PrivacyParams& p) {
  const auto m = static_cast<double>(w.rows());
  if (p.approximate()) {
    const double theta = norm_l2_colmax(w);
    const double h = h_of(p);
    return m * theta * theta / (h * h);
  }
  const double delta_w = norm_l1_induced(w);
  return 2.0 * m * delta_w * delta_w / (p.epsilon * p.epsilon);
}

double relaxed_error_bound(const Decomposition& dcp, const PrivacyParams& p,
                           double gamma, const Vector& d) {
  if (p.approximate()) {
    throw std::invalid_argument("relaxed_error_bound: pure epsilon-DP only");
  }
  if (gamma < 0.0) {
    throw std::invalid_argument("relaxed_error_bound: gamma must be >= 0");
  }
  return 2.0 * scale_phi(dcp.b) / (p.epsilon * p.epsilon) +
         gamma * d.squaredNorm();
}

ErrorBounds bounds(const Matrix& w, const PrivacyParams& p) {
  const SvdSummary s = svd(w);
  if (s.rank == 0) throw std::domain_error("bounds: zero workload");
  const Vector lambdas = s.singular_values.head(s.rank);
  const double sum_sq = lambdas.squaredNorm();

  ErrorBounds out;
  out.kappa = lambdas(0) / lambdas(s.rank - 1);
  out.rho = std::sqrt(s.v.cwiseAbs2().colwise().sum().maxCoeff());
  out.upper_eps = 2.0 * sum_sq / (p.epsilon * p.epsilon);
  if (p.approximate()) {
    const double h = h_of(p);
    const double nuclear = lambdas.sum();
    out.upper_approx = out.rho * out.rho * sum_sq / (h * h);
    out.lower_approx =
        nuclear * nuclear / (static_cast<double>(w.cols()) * h * h);
  }
  return out;
}

Decomposition coherent_decomposition(const Matrix& w) {
  const SvdSummary s = svd(w);
  if (s.rank == 0) {
    throw std::domain_error("coherent_decomposition: zero workload");
  }
  const double rho = std::sqrt(s.v.cwiseAbs2().colwise().sum().maxCoeff());
  Decomposition d;
  d.mode = SensitivityMode::L2;
  d.b = rho * s.u * s.singular_values.head(s.rank).asDiagonal();
  d.l = s.v / rho;
  return d;
}

double min_epsilon_for_usefulness(const Decomposition& dcp,
                                  const UtilityTarget& target,
                                  std::optional<double> delta) {
  if (!(target.xi > 0.0)) {
    throw std::invalid_argument("usefulness: xi must be > 0");
  }
  if (!(target.eta > 0.0 && target.eta < 1.0)) {
    throw std::invalid_argument("usefulness: eta must lie in (0, 1)");
  }
  const auto r = static_cast<double>(dcp.r());
  const double log_eta = std::log(target.eta);

  if (!delta.has_value()) {
    // Pure epsilon-DP: Laplace noise through B.
    switch (target.norm) {
      case UsefulnessNorm::L1:
        return 2.0 * norm_l1_induced(dcp.b) * (r * M_LN2 - log_eta) / target.xi;
      case UsefulnessNorm::Linf: {
        double sum = 0.0;
        for (Eigen::Index i = 1; i <= dcp.r(); ++i) {
          const auto x = static_cast<double>(i);
          sum += std::log(x / (x - 0.5));
        }
        return 2.0 * norm_linf_induced(dcp.b) * (sum - log_eta) / target.xi;
      }
      case UsefulnessNorm::L2:
        break;
    }
    throw std::invalid_argument(
        "usefulness: pure epsilon-DP supports the L1 and Linf norms");
  }

  // Gaussian noise through B with sigma = 1/h = sqrt(8 ln(2/delta))/epsilon.
  // The Chernoff argument with t = 3 gives the 24 = 3 sigma^2 epsilon^2 /
  // ln(2/delta) coefficient; E[max chi-square] <= 3 ln r + (3/2) ln 3 gives
  // the max-norm constant.
  const double log_two_over_delta = std::log(2.0 / *delta);
  switch (target.norm) {
    case UsefulnessNorm::L2:
      return std::sqrt(24.0 * log_two_over_delta *
                       (r / 2.0 * std::log(3.0) - log_eta)) *
             spectral_norm(dcp.b) / target.xi;
    case UsefulnessNorm::Linf:
      return std::sqrt((24.0 * std::log(r) + 12.0 * std::log(3.0)) *
                       log_two_over_delta / target.eta) *
             norm_linf_induced(dcp.b) / target.xi;
    case UsefulnessNorm::L1:
      break;
  }
  throw std::invalid_argument(
      "usefulness: approximate DP supports the L2 and Linf norms");
}

}  // namespace lrm
