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

#ifndef LRM_PRIVACY_HPP
#define LRM_PRIVACY_HPP

#include <cmath>
#include <optional>
#include <stdexcept>

namespace lrm {

// epsilon > 0 always; delta present exactly in approximate-DP mode, in (0,1).
struct PrivacyParams {
  double epsilon = 1.0;
  std::optional<double> delta;

  bool approximate() const { return delta.has_value(); }

  static PrivacyParams pure(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw std::domain_error("epsilon must be finite and positive");
    }
    return PrivacyParams{epsilon, std::nullopt};
  }

  static PrivacyParams approx(double epsilon, double delta) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw std::domain_error("epsilon must be finite and positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw std::domain_error("delta must lie in (0, 1)");
    }
    return PrivacyParams{epsilon, delta};
  }
};

// Gaussian-mechanism scale divisor h(epsilon, delta) = epsilon / sqrt(8 ln(2/delta)).
inline double h_of(const PrivacyParams& p) {
  if (!p.delta.has_value()) {
    throw std::domain_error("h_of: delta required");
  }
  const double delta = *p.delta;
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::domain_error("h_of: delta must lie in (0, 1)");
  }
  return p.epsilon / std::sqrt(8.0 * std::log(2.0 / delta));
}

}  // namespace lrm

#endif  // LRM_PRIVACY_HPP
