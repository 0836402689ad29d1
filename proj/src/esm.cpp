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

#include "lrm/esm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace lrm {

double logsumexp_max(const Vector& v, double mu) {
  if (!(mu > 0.0)) throw std::domain_error("logsumexp_max: mu must be > 0");
  if (v.size() == 0) throw std::domain_error("logsumexp_max: empty vector");
  const double top = v.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    sum += std::exp((v(i) - top) / mu);
  return top + mu * std::log(sum);
}

Vector logsumexp_grad(const Vector& v, double mu) {
  if (!(mu > 0.0)) throw std::domain_error("logsumexp_grad: mu must be > 0");
  const double top = v.maxCoeff();
  Vector weights(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    weights(i) = std::exp((v(i) - top) / mu);
  return weights / weights.sum();
}

namespace {

// Cholesky solve X = M^{-1} W^T; shared by the objective and the gradient.
Matrix solve_against(const Matrix& m_psd, const Matrix& w) {
  Eigen::LLT<Matrix> llt(m_psd);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("esm: matrix is not positive definite");
  }
  return llt.solve(w.transpose());  // n x m
}

double trace_term(const Matrix& w, const Matrix& solved) {
  return w.cwiseProduct(solved.transpose()).sum();
}

double effective_mu(const EsmConfig& cfg, Eigen::Index n) {
  if (cfg.mu > 0.0) return cfg.mu;
  return n >= 2 ? 0.01 / std::log(static_cast<double>(n)) : 0.01;
}

// Trim negative eigenvalues at zero, then add jitter 1e-12 lambda_max so the
// next Cholesky solve stays viable.
Matrix project_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  Vector values = eig.eigenvalues().cwiseMax(0.0);
  const double jitter = 1e-12 * values.maxCoeff();
  values.array() += jitter;
  return eig.eigenvectors() * values.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

double esm_objective(const Matrix& m_psd, const Matrix& w, double mu) {
  const Matrix solved = solve_against(m_psd, w);
  return logsumexp_max(m_psd.diagonal(), mu) * trace_term(w, solved);
}

StrategyMatrix esm_solve(const Matrix& w, const EsmConfig& cfg) {
  const Eigen::Index n = w.cols();
  const double mu = effective_mu(cfg, n);

  Matrix m = Matrix::Identity(n, n);
  auto objective_and_grad = [&](const Matrix& point, Matrix* grad) {
    const Matrix solved = solve_against(point, w);  // n x m
    const double trace = trace_term(w, solved);
    const double smoothed = logsumexp_max(point.diagonal(), mu);
    if (grad != nullptr) {
      const Vector weights = logsumexp_grad(point.diagonal(), mu);
      *grad = Matrix(weights.asDiagonal()) * trace -
              smoothed * (solved * solved.transpose());
    }
    return smoothed * trace;
  };

  Matrix grad;
  double value = objective_and_grad(m, &grad);

  Matrix best_m = m;
  double best_value = value;

  std::deque<double> history{value};
  Matrix prev_m;
  Matrix prev_grad;
  double step = 1.0 / std::max(1.0, grad.norm());

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (iter > 0) {
      // Barzilai-Borwein step length, clamped.
      const Matrix s = m - prev_m;
      const Matrix y = grad - prev_grad;
      const double sy = s.cwiseProduct(y).sum();
      step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : 1e10;
    }

    const Matrix candidate = project_psd(m - step * grad);
    const Matrix direction = candidate - m;
    const double slope = grad.cwiseProduct(direction).sum();
    if (direction.norm() < 1e-14 || slope >= 0.0) break;

    // Armijo acceptance against min(current value, window max); the current
    // value is always inside the window, so accepted objectives never
    // increase.
    const double reference =
        std::min(value, *std::max_element(history.begin(), history.end()));
    double lambda = 1.0;
    Matrix next;
    double next_value = 0.0;
    bool accepted = false;
    for (int backtrack = 0; backtrack < 30; ++backtrack) {
      next = m + lambda * direction;
      next_value = objective_and_grad(next, nullptr);
      if (next_value <= reference + cfg.sufficient_decrease * lambda * slope) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;

    prev_m = std::move(m);
    prev_grad = std::move(grad);
    m = std::move(next);
    value = next_value;
    objective_and_grad(m, &grad);

    history.push_back(value);
    if (static_cast<int>(history.size()) > cfg.window) history.pop_front();
    if (value < best_value) {
      best_value = value;
      best_m = m;
    }
  }

  // A = sum_i sqrt(lambda_i) v_i v_i^T from the eigen-decomposition of M.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (best_m + best_m.transpose()));
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  StrategyMatrix strategy;
  strategy.a =
      eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
  return strategy;
}

double strategy_error(const StrategyMatrix& a, const Matrix& w,
                      const PrivacyParams& p) {
  const Matrix pinv = pseudo_inverse(a.a);
  const Matrix w_pinv = w * pinv;  // m x r
  const double reconstruction = (w_pinv * a.a - w).norm();
  if (reconstruction > 1e-6 * (1.0 + w.norm())) {
    throw std::runtime_error(
        "strategy_error: workload not reconstructible from strategy");
  }
  const double trace = w_pinv.cwiseAbs2().sum();  // tr(W A^+ A^{+T} W^T)
  if (p.approximate()) {
    const double h = h_of(p);
    const double theta = norm_l2_colmax(a.a);
    return theta * theta * trace / (h * h);
  }
  const double delta_a = norm_l1_induced(a.a);
  return 2.0 * delta_a * delta_a * trace / (p.epsilon * p.epsilon);
}

}  // namespace lrm
