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

#include "lrm/decompose.hpp"

#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "lrm/rng.hpp"
#include "lrm/workload.hpp"
#include "test_support.hpp"

using namespace lrm;
using lrm::testing::example2_workload;
using lrm::testing::random_matrix;
using lrm::testing::random_vector;

namespace {

// Independent projection oracle: the L1-ball projection keeps the signs of v
// and shrinks magnitudes by a common threshold theta chosen so the result's
// L1 norm is exactly 1 (when ||v||_1 > 1). Solves for theta by bisection on
// the monotone function sum_i max(|v_i| - theta, 0) - 1.
Vector bisection_l1_projection(const Vector& v) {
  if (v.cwiseAbs().sum() <= 1.0) return v;
  double lo = 0.0;
  double hi = v.cwiseAbs().maxCoeff();
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double mass = (v.cwiseAbs().array() - mid).max(0.0).sum();
    (mass > 1.0 ? lo : hi) = mid;
  }
  const double theta = 0.5 * (lo + hi);
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - theta, 0.0);
    out(i) = v(i) < 0.0 ? -mag : mag;
  }
  return out;
}

double j_objective(const Matrix& b, const Matrix& l, const Matrix& pi,
                   double beta, const Matrix& w) {
  const Matrix gap = w - b * l;
  return 0.5 * b.cwiseAbs2().sum() + pi.cwiseProduct(gap).sum() +
         0.5 * beta * gap.cwiseAbs2().sum();
}

}  // namespace

TEST_CASE("project_l1_column") {
  Vector inside(2);
  inside << 0.2, -0.3;
  CHECK((project_l1_column(inside) - inside).norm() == 0.0);

  Vector v(2);
  v << 0.8, 0.6;
  const Vector projected = project_l1_column(v);
  CHECK(projected(0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(projected(1) == doctest::Approx(0.4).epsilon(1e-12));

  Vector spike(3);
  spike << 2, 0, 0;
  const Vector saturated = project_l1_column(spike);
  CHECK(saturated(0) == doctest::Approx(1.0));
  CHECK(saturated(1) == doctest::Approx(0.0));
  CHECK(saturated(2) == doctest::Approx(0.0));
}

TEST_CASE("project_l1_column matches the bisection oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index size = 1 + static_cast<Eigen::Index>(rng.next_below(50));
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i)
      v(i) = 3.0 * (rng.next_double() - 0.5);
    const Vector fast = project_l1_column(v);
    CHECK(fast.cwiseAbs().sum() <= 1.0 + 1e-12);
    CHECK((fast - bisection_l1_projection(v)).norm() <= 1e-9);
  }
}

TEST_CASE("project_l2_column") {
  Vector unit(2);
  unit << 1, 0;
  CHECK((project_l2_column(unit) - unit).norm() == 0.0);
  Vector v(2);
  v << 3, 4;
  const Vector projected = project_l2_column(v);
  CHECK(projected(0) == doctest::Approx(0.6));
  CHECK(projected(1) == doctest::Approx(0.8));
  CHECK(project_l2_column(Vector::Zero(3)).norm() == 0.0);
}

TEST_CASE("project_l2_column is non-expansive") {
  for (int seed = 0; seed < 20; ++seed) {
    const Vector u = 2.0 * random_vector(6, 100 + seed);
    const Vector v = 2.0 * random_vector(6, 200 + seed);
    CHECK((project_l2_column(u) - project_l2_column(v)).norm() <=
          (u - v).norm() + 1e-12);
  }
}

TEST_CASE("update_b closed form") {
  const Matrix w = random_matrix(3, 4, 10);

  SUBCASE("L = I, pi = 0, beta = 1 gives W/2") {
    const Matrix b =
        update_b(Matrix::Identity(4, 4), Matrix::Zero(3, 4), 1.0, w);
    CHECK((b - 0.5 * w).norm() <= 1e-12);
  }

  SUBCASE("gradient of J vanishes at the output") {
    for (int seed = 0; seed < 5; ++seed) {
      const Matrix l = random_matrix(2, 4, 300 + seed);
      const Matrix pi = random_matrix(3, 4, 400 + seed);
      const double beta = 3.5;
      const Matrix b = update_b(l, pi, beta, w);
      const Matrix grad = b - pi * l.transpose() +
                          beta * (b * (l * l.transpose())) -
                          beta * (w * l.transpose());
      CHECK(grad.norm() <= 1e-8 * (1.0 + b.norm()));
    }
  }

  SUBCASE("matches finite differences of J") {
    const Matrix l = random_matrix(2, 4, 31);
    const Matrix pi = random_matrix(3, 4, 32);
    const double beta = 2.0;
    Matrix b = random_matrix(3, 2, 33);
    const double step = 1e-6;
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        Matrix up = b;
        Matrix down = b;
        up(i, j) += step;
        down(i, j) -= step;
        const double numeric =
            (j_objective(up, l, pi, beta, w) - j_objective(down, l, pi, beta, w)) /
            (2.0 * step);
        const Matrix analytic = b - pi * l.transpose() +
                                beta * (b * (l * l.transpose())) -
                                beta * (w * l.transpose());
        CHECK(analytic(i, j) ==
              doctest::Approx(numeric).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("solve_l_subproblem") {
  SUBCASE("zero B returns the start point") {
    const Matrix b = Matrix::Zero(3, 2);
    const Matrix w = random_matrix(3, 4, 50);
    Matrix l0 = random_matrix(2, 4, 51);
    project_columns(l0, SensitivityMode::L1);
    const Matrix out = solve_l_subproblem(b, Matrix::Zero(3, 4), 1.0, w, l0,
                                          SensitivityMode::L1, 1e-10);
    CHECK((out - l0).norm() == 0.0);
  }

  SUBCASE("scalar instance has minimizer 0.5") {
    Matrix b(1, 1), pi(1, 1), w(1, 1), l0(1, 1);
    b << 1;
    pi << 0;
    w << 0.5;
    l0 << 0;
    const Matrix out =
        solve_l_subproblem(b, pi, 1.0, w, l0, SensitivityMode::L1, 1e-14, 500);
    CHECK(out(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  }

  SUBCASE("gradient matches central finite differences") {
    const Matrix b = random_matrix(3, 3, 60);
    const Matrix pi = random_matrix(3, 4, 61);
    const Matrix w = random_matrix(3, 4, 62);
    const Matrix l = random_matrix(3, 4, 63);
    const double beta = 1.7;
    const Matrix analytic = l_subproblem_gradient(b, pi, beta, w, l);
    const double step = 1e-6;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.cols(); ++j) {
        Matrix up = l;
        Matrix down = l;
        up(i, j) += step;
        down(i, j) -= step;
        const double numeric = (l_subproblem_objective(b, pi, beta, w, up) -
                                l_subproblem_objective(b, pi, beta, w, down)) /
                               (2.0 * step);
        CHECK(std::abs(analytic(i, j) - numeric) <=
              1e-5 * (1.0 + std::abs(analytic(i, j))));
      }
    }
  }

  SUBCASE("never increases the objective; iterates stay feasible") {
    for (int seed = 0; seed < 5; ++seed) {
      const Matrix b = random_matrix(4, 3, 700 + seed);
      const Matrix pi = random_matrix(4, 6, 800 + seed);
      const Matrix w = random_matrix(4, 6, 900 + seed);
      Matrix l0 = random_matrix(3, 6, 1000 + seed);
      for (const SensitivityMode mode :
           {SensitivityMode::L1, SensitivityMode::L2}) {
        Matrix start = l0;
        project_columns(start, mode);
        const Matrix out =
            solve_l_subproblem(b, pi, 2.0, w, start, mode, 1e-12, 100);
        CHECK(is_feasible(out, mode));
        CHECK(l_subproblem_objective(b, pi, 2.0, w, out) <=
              l_subproblem_objective(b, pi, 2.0, w, start) + 1e-12);
      }
    }
  }

  SUBCASE("accepted curvature stays within twice the Lipschitz bound") {
    for (int seed = 0; seed < 5; ++seed) {
      const Matrix b = random_matrix(4, 3, 20 + seed);
      const Matrix pi = random_matrix(4, 6, 30 + seed);
      const Matrix w = random_matrix(4, 6, 40 + seed);
      Matrix l0 = random_matrix(3, 6, 50 + seed);
      project_columns(l0, SensitivityMode::L1);
      const double beta = 4.0;
      double omega = 1.0;
      solve_l_subproblem(b, pi, beta, w, l0, SensitivityMode::L1, 1e-12, 100,
                         &omega);
      const double lipschitz = beta * spectral_norm(b.transpose() * b);
      CHECK(omega <= std::max(1.0, 2.0 * lipschitz) + 1e-9);
    }
  }
}

TEST_CASE("decompose") {
  SUBCASE("identity workload reaches the noise-on-data scale") {
    for (const SensitivityMode mode :
         {SensitivityMode::L1, SensitivityMode::L2}) {
      SolverConfig cfg;
      cfg.mode = mode;
      cfg.r = 4;
      cfg.seed = 3;
      const SolveResult result = decompose(Matrix::Identity(4, 4), cfg);
      REQUIRE(result.converged);
      CHECK(result.trace.residual_history.back() <= cfg.gamma);
      CHECK(is_feasible(result.decomposition.l, mode));
      const double sens = sensitivity(result.decomposition);
      CHECK(scale_phi(result.decomposition.b) * sens * sens <= 4.0 * 1.05);
    }
  }

  SUBCASE("rank-1 workload reaches its analytic optimum") {
    Vector u = random_vector(10, 1);
    Vector v = random_vector(16, 2);
    u.normalize();
    v.normalize();
    const Matrix w = 10.0 * (u * v.transpose());
    SolverConfig cfg;
    cfg.r = 2;
    cfg.seed = 5;
    const SolveResult result = decompose(w, cfg);
    REQUIRE(result.converged);
    const double sens = sensitivity(result.decomposition);
    const double scale = scale_phi(result.decomposition.b) * sens * sens;
    // For w_j = B l_j with column L1 norms <= 1, the largest column of B must
    // reach max_j ||w_j||, so the optimum is 100 max_j v_j^2.
    const double optimum = 100.0 * v.cwiseAbs().maxCoeff() *
                           v.cwiseAbs().maxCoeff();
    CHECK(scale <= 1.10 * optimum);
    CHECK(scale < 0.5 * w.cwiseAbs2().sum());  // clear low-rank win
  }

  SUBCASE("worked batch reaches the known optimal scale within 10%") {
    SolverConfig cfg;
    cfg.r = 3;
    cfg.gamma = 1e-3;
    cfg.seed = 1;
    const SolveResult result = decompose(example2_workload(), cfg);
    REQUIRE(result.converged);
    const double sens = sensitivity(result.decomposition);
    const double objective = 2.0 * scale_phi(result.decomposition.b) * sens * sens;
    CHECK(objective <= 40.0);
    CHECK(objective == doctest::Approx(38.0).epsilon(0.10));
  }

  SUBCASE("non-convergence is reported with the best iterate") {
    SolverConfig cfg;
    cfg.r = 1;  // rank 3 workload cannot be matched by a rank-1 product
    cfg.gamma = 1e-6;
    cfg.max_outer = 30;
    const SolveResult result = decompose(example2_workload(), cfg);
    CHECK_FALSE(result.converged);
    CHECK(result.decomposition.b.cols() == 1);
    CHECK(is_feasible(result.decomposition.l, SensitivityMode::L1));
    CHECK(result.trace.residual_history.size() == 30);
  }
}

TEST_CASE("rescale") {
  SUBCASE("unit sensitivity input is unchanged") {
    Decomposition d{lrm::testing::example2_b(), lrm::testing::example2_l(),
                    SensitivityMode::L1};
    const Decomposition out = rescale(d);
    CHECK((out.b - d.b).norm() <= 1e-12);
    CHECK((out.l - d.l).norm() <= 1e-12);
  }
  SUBCASE("scalar identity") {
    Matrix b(1, 1), l(1, 1);
    b << 2;
    l << 0.5;
    const Decomposition out = rescale({b, l, SensitivityMode::L1});
    CHECK(out.b(0, 0) == doctest::Approx(1.0));
    CHECK(out.l(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("error scale is preserved in both modes") {
    for (int seed = 0; seed < 10; ++seed) {
      const Matrix b = random_matrix(4, 3, 1300 + seed);
      const Matrix l = 0.3 * random_matrix(3, 5, 1400 + seed);
      for (const SensitivityMode mode :
           {SensitivityMode::L1, SensitivityMode::L2}) {
        const Decomposition d{b, l, mode};
        const Decomposition out = rescale(d);
        CHECK(sensitivity(out) == doctest::Approx(1.0).epsilon(1e-12));
        const double before = scale_phi(d.b) * sensitivity(d) * sensitivity(d);
        const double after = scale_phi(out.b);
        CHECK(after == doctest::Approx(before).epsilon(1e-12));
        CHECK((out.b * out.l - d.b * d.l).norm() <= 1e-12 * (1.0 + (d.b * d.l).norm()));
      }
    }
  }
  SUBCASE("zero sensitivity is a domain error") {
    CHECK_THROWS_AS(
        rescale({Matrix::Ones(2, 2), Matrix::Zero(2, 2), SensitivityMode::L1}),
        std::domain_error);
  }
}

TEST_CASE("kkt_report") {
  SUBCASE("constructed KKT point has vanishing residuals") {
    // Build L feasible with active columns, pick pi, set B = pi L^T, W = B L.
    Matrix l(2, 3);
    l << 0.5, 1.0, 0.0,
         0.5, 0.0, -1.0;  // column sums: 1, 1, 1 (L1 active)
    const Matrix pi = random_matrix(3, 3, 90);
    const Matrix b = pi * l.transpose();
    const Matrix w = b * l;
    const KktReport report = kkt_report(w, {b, l, SensitivityMode::L1}, pi);
    CHECK(report.feasibility_residual <= 1e-10);
    CHECK(report.stationarity_b <= 1e-10);
    CHECK(report.constraint_violation <= 1e-10);
    CHECK(report.complementary_slack <= 1e-10);
  }
  SUBCASE("infeasible L is flagged") {
    Matrix l(2, 2);
    l << 2, 0, 0, 2;
    const Matrix b = Matrix::Identity(2, 2);
    const KktReport report =
        kkt_report(b * l, {b, l, SensitivityMode::L1}, Matrix::Zero(2, 2));
    CHECK(report.constraint_violation > 0.0);
  }
  SUBCASE("solver output improves stationarity as iterations proceed") {
    const Matrix w = lrm::testing::random_low_rank(6, 8, 2, 17);
    SolverConfig cfg;
    cfg.seed = 2;
    const SolveResult result = decompose(w, cfg);
    REQUIRE(result.converged);
    const auto& history = result.trace.residual_history;
    REQUIRE(!history.empty());
    CHECK(history.back() <= cfg.gamma);
    // The tail of the residual history is below its starting level.
    CHECK(history.back() <= history.front());
  }
}

TEST_CASE("decomposition document round-trips bit-exactly") {
  const Matrix b = random_matrix(3, 2, 2000) * 1e6;
  Matrix l = random_matrix(2, 5, 2001);
  project_columns(l, SensitivityMode::L2);
  const Decomposition d{b, l, SensitivityMode::L2};
  const Decomposition back = parse_decomposition(serialize_decomposition(d));
  CHECK(back.mode == d.mode);
  REQUIRE(back.b.rows() == d.b.rows());
  REQUIRE(back.l.cols() == d.l.cols());
  for (Eigen::Index i = 0; i < d.b.rows(); ++i)
    for (Eigen::Index j = 0; j < d.b.cols(); ++j)
      CHECK(back.b(i, j) == d.b(i, j));
  for (Eigen::Index i = 0; i < d.l.rows(); ++i)
    for (Eigen::Index j = 0; j < d.l.cols(); ++j)
      CHECK(back.l(i, j) == d.l(i, j));

  const auto path =
      (std::filesystem::temp_directory_path() / "lrm_dcp_test.json").string();
  save_decomposition(d, path);
  const Decomposition loaded = load_decomposition(path);
  CHECK((loaded.b - d.b).norm() == 0.0);
  CHECK((loaded.l - d.l).norm() == 0.0);
  std::filesystem::remove(path);
}
