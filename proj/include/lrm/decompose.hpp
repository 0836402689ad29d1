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

#ifndef LRM_DECOMPOSE_HPP
#define LRM_DECOMPOSE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lrm/linalg.hpp"

namespace lrm {

// Which per-column constraint the intermediate queries L satisfy:
//   L1  sum_i |L_ij| <= 1 for every column j  (Laplace / pure epsilon-DP)
//   L2  sum_i L_ij^2 <= 1 for every column j  (Gaussian / (epsilon,delta)-DP)
enum class SensitivityMode { L1, L2 };

SensitivityMode parse_sensitivity_mode(const std::string& name);
std::string sensitivity_mode_name(SensitivityMode mode);

// Factorization W ~ B * L: L holds r intermediate queries answered under
// noise, B recombines their noisy answers.
struct Decomposition {
  Matrix b;  // m x r
  Matrix l;  // r x n
  SensitivityMode mode = SensitivityMode::L1;

  Eigen::Index r() const { return b.cols(); }
};

// Sum of squared entries of B; multiplies the per-intermediate-query noise
// variance in the total error.
double scale_phi(const Matrix& b);

// Delta(L) (L1 mode) or Theta(L) (L2 mode) of the decomposition's L.
double sensitivity(const Decomposition& d);

// Per-column constraint value: absolute sum (L1) or Euclidean norm (L2).
double column_norm(const Matrix& l, Eigen::Index j, SensitivityMode mode);

// True when every column satisfies its ball constraint within tol.
bool is_feasible(const Matrix& l, SensitivityMode mode, double tol = 1e-8);

struct SolverConfig {
  double gamma = 0.01;  // Frobenius tolerance on ||W - B L||
  Eigen::Index r = 0;   // 0 = choose from rank(W): ceil(1.2 rank) for L1,
                        //     rank for L2
  SensitivityMode mode = SensitivityMode::L1;
  uint64_t seed = 0;
  int max_outer = 600;
  int inner_iters = 5;  // (update B, solve L) alternations per outer step
  double beta_cap = 1073741824.0;  // 2^30
  double nesterov_tol_scale = 1.0;
  int nesterov_max_iters = 200;
  // Converged basins to explore within the outer-iteration budget; restarts
  // draw fresh seeded starts and the best feasible objective wins. The
  // problem is non-convex, so extra basins can buy a better local optimum.
  int basins = 1;
};

// First-order optimality residuals of the constrained program at (B, L, pi).
struct KktReport {
  double feasibility_residual = 0.0;   // ||W - B L||_F
  double stationarity_b = 0.0;         // ||B - pi L^T||_F
  double constraint_violation = 0.0;   // max_j (column_norm_j - 1)_+
  double complementary_slack = 0.0;    // max_j |mu_j (column_norm_j - 1)|
};

struct SolverTrace {
  int outer_iterations = 0;
  std::vector<double> residual_history;  // ||W - B L||_F per outer iteration
  double final_beta = 1.0;
  double final_objective = 0.0;  // 0.5 tr(B^T B)
  KktReport kkt;
};

struct SolveResult {
  Decomposition decomposition;  // best iterate, feasible for its mode
  SolverTrace trace;
  bool converged = false;  // final residual <= gamma
};

// Euclidean projection onto the L1 ball of radius 1. Vectors already inside
// the ball pass through unchanged; otherwise the sorted-threshold simplex
// projection is applied to |v| and signs are restored.
Vector project_l1_column(const Vector& v);

// Euclidean projection onto the L2 ball of radius 1: v / max(1, ||v||).
Vector project_l2_column(const Vector& v);

// Projects every column of l onto the mode's unit ball, in place.
void project_columns(Matrix& l, SensitivityMode mode);

// Closed-form minimizer of the augmented Lagrangian over B with L fixed:
// B = (beta W L^T + pi L^T)(beta L L^T + I)^{-1}.
Matrix update_b(const Matrix& l, const Matrix& pi, double beta,
                const Matrix& w);

// Objective of the L-subproblem with B fixed:
// G(L) = (beta/2) tr(L^T B^T B L) - tr((beta W + pi)^T B L).
double l_subproblem_objective(const Matrix& b, const Matrix& pi, double beta,
                              const Matrix& w, const Matrix& l);

// Gradient dG/dL = beta B^T B L - B^T (beta W + pi).
Matrix l_subproblem_gradient(const Matrix& b, const Matrix& pi, double beta,
                             const Matrix& w, const Matrix& l);

// Accelerated projected gradient (FISTA recurrence) on the L-subproblem with
// doubling backtracking on the curvature estimate omega. Stops when the
// projected step falls below tol or after max_iters iterations; returns the
// best feasible iterate seen (never worse than l0). When omega_carry is
// non-null it seeds the line search and receives the last accepted value.
Matrix solve_l_subproblem(const Matrix& b, const Matrix& pi, double beta,
                          const Matrix& w, const Matrix& l0,
                          SensitivityMode mode, double tol,
                          int max_iters = 200, double* omega_carry = nullptr);

// Inexact augmented Lagrangian solver for
//   min 0.5 tr(B^T B)  s.t.  ||W - B L||_F <= gamma, columns of L in the
//   mode's unit ball.
// Multiplier update pi += beta (W - B L) every outer iteration; beta doubles
// every 10 outer iterations. Non-convergence (residual still above gamma at
// the iteration or beta cap) is reported through `converged` with the best
// iterate in the payload.
SolveResult decompose(const Matrix& w, const SolverConfig& cfg);

// B' = c B, L' = L / c with c the mode sensitivity of L, making the
// sensitivity exactly 1 while preserving the product and the error scale
// Phi(B) * sensitivity^2. Throws std::domain_error when the sensitivity is 0.
Decomposition rescale(const Decomposition& d);

// Residuals of the KKT system at (B, L, pi). Multipliers mu_j >= 0 are
// recovered by least squares on the L-stationarity condition for columns
// whose constraint is active (column norm within 1e-6 of 1).
KktReport kkt_report(const Matrix& w, const Decomposition& d,
                     const Matrix& pi);

// Text document for a decomposition: JSON with fields r, mode, b, l (nested
// row-major arrays). Decimal rendering is shortest-round-trip, so finite
// doubles survive a round trip bit-exactly.
std::string serialize_decomposition(const Decomposition& d);
Decomposition parse_decomposition(const std::string& text);
void save_decomposition(const Decomposition& d, const std::string& path);
Decomposition load_decomposition(const std::string& path);

}  // namespace lrm

#endif  // LRM_DECOMPOSE_HPP
