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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "lrm/rng.hpp"

namespace lrm {

SensitivityMode parse_sensitivity_mode(const std::string& name) {
  if (name == "l1" || name == "L1") return SensitivityMode::L1;
  if (name == "l2" || name == "L2") return SensitivityMode::L2;
  throw std::invalid_argument("unknown sensitivity mode: " + name);
}

std::string sensitivity_mode_name(SensitivityMode mode) {
  return mode == SensitivityMode::L1 ? "l1" : "l2";
}

double scale_phi(const Matrix& b) { return b.cwiseAbs2().sum(); }

double sensitivity(const Decomposition& d) {
  return d.mode == SensitivityMode::L1 ? norm_l1_induced(d.l)
                                       : norm_l2_colmax(d.l);
}

double column_norm(const Matrix& l, Eigen::Index j, SensitivityMode mode) {
  if (mode == SensitivityMode::L1) return l.col(j).cwiseAbs().sum();
  return l.col(j).norm();
}

bool is_feasible(const Matrix& l, SensitivityMode mode, double tol) {
  for (Eigen::Index j = 0; j < l.cols(); ++j) {
    if (mode == SensitivityMode::L1) {
      if (l.col(j).cwiseAbs().sum() > 1.0 + tol) return false;
    } else {
      if (l.col(j).squaredNorm() > 1.0 + tol) return false;
    }
  }
  return true;
}

Vector project_l1_column(const Vector& v) {
  const double l1 = v.cwiseAbs().sum();
  if (l1 <= 1.0) return v;
  // Simplex projection of |v|: sort descending, find the threshold theta.
  std::vector<double> sorted(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    sorted[static_cast<size_t>(i)] = std::abs(v(i));
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0;
  double theta = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    running += sorted[i];
    const double candidate = (running - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) {
      theta = candidate;
    } else {
      break;
    }
  }
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - theta, 0.0);
    out(i) = v(i) < 0.0 ? -mag : mag;
  }
  return out;
}

Vector project_l2_column(const Vector& v) {
  return v / std::max(1.0, v.norm());
}

void project_columns(Matrix& l, SensitivityMode mode) {
  for (Eigen::Index j = 0; j < l.cols(); ++j) {
    l.col(j) = mode == SensitivityMode::L1 ? project_l1_column(l.col(j))
                                           : project_l2_column(l.col(j));
  }
}

Matrix update_b(const Matrix& l, const Matrix& pi, double beta,
                const Matrix& w) {
  if (l.cols() != w.cols() || pi.rows() != w.rows() || pi.cols() != w.cols()) {
    throw std::invalid_argument("update_b: dimension mismatch");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("update_b: beta must be > 0");
  // beta L L^T + I is symmetric positive definite; an LLT failure can only
  // mean non-finite input.
  Matrix system = beta * (l * l.transpose());
  system.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("update_b: solve failed (non-finite input?)");
  }
  const Matrix rhs = (beta * w + pi) * l.transpose();  // m x r
  // B = rhs * system^{-1}; solve system X = rhs^T, then B = X^T.
  return llt.solve(rhs.transpose()).transpose();
}

double l_subproblem_objective(const Matrix& b, const Matrix& pi, double beta,
                              const Matrix& w, const Matrix& l) {
  const Matrix bl = b * l;
  return 0.5 * beta * bl.cwiseAbs2().sum() -
         (beta * w + pi).cwiseProduct(bl).sum();
}

Matrix l_subproblem_gradient(const Matrix& b, const Matrix& pi, double beta,
                             const Matrix& w, const Matrix& l) {
  return beta * (b.transpose() * (b * l)) - b.transpose() * (beta * w + pi);
}

namespace {

// G and its gradient with B^T B and B^T (beta W + pi) precomputed.
struct LSubproblem {
  Matrix btb;     // r x r
  Matrix target;  // r x n, = B^T (beta W + pi)
  double beta;

  double value(const Matrix& l) const {
    return 0.5 * beta * (btb * l).cwiseProduct(l).sum() -
           target.cwiseProduct(l).sum();
  }
  Matrix gradient(const Matrix& l) const { return beta * (btb * l) - target; }
};

}  // namespace

Matrix solve_l_subproblem(const Matrix& b, const Matrix& pi, double beta,
                          const Matrix& w, const Matrix& l0,
                          SensitivityMode mode, double tol, int max_iters,
                          double* omega_carry) {
  LSubproblem prob{b.transpose() * b, b.transpose() * (beta * w + pi), beta};

  Matrix best = l0;
  double best_value = prob.value(l0);

  Matrix current = l0;   // L^(t)
  Matrix previous = l0;  // L^(t-1)
  double tau_prev = 1.0;
  bool restart_momentum = false;
  double omega = omega_carry != nullptr ? std::max(1.0, *omega_carry) : 1.0;

  for (int t = 1; t <= max_iters; ++t) {
    if (restart_momentum) {
      tau_prev = 1.0;
      previous = current;
      restart_momentum = false;
    }
    const double tau = (1.0 + std::sqrt(1.0 + 4.0 * tau_prev * tau_prev)) / 2.0;
    const double alpha = t == 1 ? 0.0 : (tau_prev - 1.0) / tau;
    const Matrix lookahead = current + alpha * (current - previous);
    const double value_at_lookahead = prob.value(lookahead);
    const Matrix grad_at_lookahead = prob.gradient(lookahead);

    Matrix candidate;
    bool step_small = false;
    while (true) {
      candidate = lookahead - grad_at_lookahead / omega;
      project_columns(candidate, mode);
      const Matrix step = candidate - lookahead;
      const double step_norm = step.norm();
      if (step_norm < tol) {
        step_small = true;
        break;
      }
      // Majorization test: G(candidate) <= G(S) + <grad, step> + w/2 |step|^2,
      // with rounding slack so sub-ulp differences cannot double omega.
      const double bound = value_at_lookahead +
                           grad_at_lookahead.cwiseProduct(step).sum() +
                           0.5 * omega * step_norm * step_norm;
      const double slack = 1e-12 * (1.0 + std::abs(value_at_lookahead));
      if (prob.value(candidate) <= bound + slack) break;
      omega *= 2.0;
    }

    const double candidate_value = prob.value(candidate);
    if (candidate_value < best_value) {
      best_value = candidate_value;
      best = candidate;
    }
    if (step_small) break;

    // Adaptive restart: drop the momentum when it points against the
    // gradient direction of the accepted step.
    if (grad_at_lookahead.cwiseProduct(candidate - current).sum() > 0.0) {
      restart_momentum = true;
    }
    previous = std::move(current);
    current = std::move(candidate);
    tau_prev = tau;
  }

  if (omega_carry != nullptr) *omega_carry = omega;
  return best;
}

namespace {

Eigen::Index default_rank(const Matrix& w, SensitivityMode mode) {
  const Eigen::Index rank = svd(w).rank;
  const double ratio = mode == SensitivityMode::L1 ? 1.2 : 1.0;
  return std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(ratio * static_cast<double>(rank))));
}

}  // namespace

SolveResult decompose(const Matrix& w, const SolverConfig& cfg) {
  if (!(cfg.gamma > 0.0)) {
    throw std::invalid_argument("decompose: gamma must be > 0");
  }
  if (!is_finite(w)) throw std::invalid_argument("decompose: non-finite W");
  const Eigen::Index m = w.rows();
  const Eigen::Index n = w.cols();
  const Eigen::Index r = cfg.r > 0 ? cfg.r : default_rank(w, cfg.mode);

  Rng rng(cfg.seed);
  const auto random_column = [&rng, r]() {
    Vector column(r);
    for (Eigen::Index i = 0; i < r; ++i) column(i) = rng.next_gaussian();
    return column;
  };
  const auto random_row = [&rng, n]() {
    Vector row(n);
    for (Eigen::Index j = 0; j < n; ++j) row(j) = rng.next_gaussian();
    return row;
  };
  const auto fresh_l = [&]() {
    Matrix l(r, n);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < n; ++j) l(i, j) = rng.next_gaussian();
    project_columns(l, cfg.mode);
    return l;
  };
  // Start from the workload's own right-singular rows, globally scaled to
  // make the start exactly feasible with unit sensitivity (in L2 mode this
  // is the coherent construction). Rows beyond rank(W) get seeded random
  // directions at the same scale; restarts fall back to fully random starts.
  const auto spectral_l = [&]() {
    const SvdSummary ws = svd(w);
    const Eigen::Index aligned = std::min(r, ws.rank);
    Matrix l(r, n);
    l.topRows(aligned) = ws.v.topRows(aligned);
    const double row_scale = ws.rank > 0
                                 ? ws.v.cwiseAbs().maxCoeff()
                                 : 1.0;
    for (Eigen::Index i = aligned; i < r; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        l(i, j) = row_scale * rng.next_gaussian();
    double sens = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      sens = std::max(sens, column_norm(l, j, cfg.mode));
    if (sens > 0.0) l /= sens;
    return l;
  };

  Matrix l = spectral_l();
  Matrix pi = Matrix::Zero(m, n);
  double beta = 1.0;
  Matrix b = update_b(l, pi, beta, w);

  const double chi =
      static_cast<double>(r) * static_cast<double>(n) * 1e-12 *
      cfg.nesterov_tol_scale;

  SolveResult result;
  SolverTrace& trace = result.trace;
  double omega = 1.0;

  // Two incumbents: the best feasible pair by objective, and the best pair
  // by residual for the non-convergent case.
  Matrix feasible_b;
  Matrix feasible_l;
  double feasible_phi = std::numeric_limits<double>::infinity();
  bool have_feasible = false;
  Matrix resid_b = b;
  Matrix resid_l = l;
  double best_residual = std::numeric_limits<double>::infinity();

  // The scaled right-singular rows (zero-padded to r rows) are themselves a
  // feasible solution whenever r covers the workload's rank: the exact fit
  // through them reconstructs W, and in L2 mode this is precisely the
  // coherent construction. Prime the incumbent with it; the loop exists to
  // improve on its objective.
  {
    const SvdSummary ws = svd(w);
    if (ws.rank > 0 && ws.rank <= r) {
      Matrix pure = Matrix::Zero(r, n);
      pure.topRows(ws.rank) = ws.v;
      double sens = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        sens = std::max(sens, column_norm(pure, j, cfg.mode));
      if (sens > 0.0) {
        pure /= sens;
        Matrix fit = Matrix::Zero(m, r);
        fit.leftCols(ws.rank) =
            sens * ws.u * ws.singular_values.head(ws.rank).asDiagonal();
        if ((w - fit * pure).norm() <= cfg.gamma) {
          have_feasible = true;
          feasible_phi = scale_phi(fit);
          feasible_b = fit;
          feasible_l = pure;
        }
      }
    }
  }

  // Once the loop's residual is inside gamma, keep alternating while the
  // objective still improves and return the feasible iterate with the
  // smallest 0.5 tr(B^T B); the first feasible point of the alternation is
  // often not its best one.
  constexpr int kPolishWindow = 20;
  constexpr double kPolishImprovement = 1e-3;
  int polish_outers = 0;
  int basins_done = 0;
  bool basin_converged = false;

  // Stall escape: the alternation has degenerate fixed points (an exactly
  // zero column of L makes the matching row of the B update vanish, so the
  // pair can never serve that workload column). Zero columns facing an
  // unserved workload column are re-randomized, and a residual frozen above
  // gamma (constant to near machine precision, as at such fixed points)
  // for a long window triggers a full restart of (L, pi, beta). Ordinary
  // oscillation while the multipliers settle must not trip this.
  constexpr int kStallWindow = 15;
  constexpr double kFrozenTol = 1e-9;
  int stalled_outers = 0;
  int restarts = 0;
  double stall_reference = std::numeric_limits<double>::infinity();

  int k = 0;
  while (k < cfg.max_outer) {
    ++k;
    for (int inner = 0; inner < cfg.inner_iters; ++inner) {
      b = update_b(l, pi, beta, w);
      l = solve_l_subproblem(b, pi, beta, w, l, cfg.mode, chi,
                             cfg.nesterov_max_iters, &omega);
    }
    const Matrix gap = w - b * l;
    const double tau = gap.norm();
    trace.residual_history.push_back(tau);
    bool basin_finished = false;
    if (tau <= cfg.gamma) {
      basin_converged = true;
      const double phi = scale_phi(b);
      if (phi < feasible_phi * (1.0 - kPolishImprovement)) {
        polish_outers = 0;
      } else {
        ++polish_outers;
      }
      if (phi < feasible_phi || !have_feasible) {
        have_feasible = true;
        feasible_phi = phi;
        feasible_b = b;
        feasible_l = l;
      }
      if (polish_outers >= kPolishWindow) basin_finished = true;
    } else if (basin_converged) {
      // Drifted back out during polishing; the best feasible iterate is
      // already recorded.
      if (++polish_outers >= kPolishWindow) basin_finished = true;
    } else if (tau < best_residual) {
      best_residual = tau;
      resid_b = b;
      resid_l = l;
    }
    if (basin_finished) {
      if (++basins_done >= cfg.basins || k >= cfg.max_outer) break;
      l = fresh_l();
      pi.setZero();
      beta = 1.0;
      b = update_b(l, pi, beta, w);
      omega = 1.0;
      basin_converged = false;
      polish_outers = 0;
      stalled_outers = 0;
      stall_reference = std::numeric_limits<double>::infinity();
      continue;
    }
    if (beta > cfg.beta_cap) break;
    if (tau <= cfg.gamma) {
      // Polish phase: with the multipliers carrying the constraint, a
      // decaying penalty frees the alternation to keep lowering tr(B^T B).
      if (k % 10 == 0) beta = std::max(1.0, beta / 2.0);
      pi += beta * gap;
      continue;
    }
    if (k % 10 == 0) beta *= 2.0;
    pi += beta * gap;

    bool repaired = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (l.col(j).isZero(0.0) && gap.col(j).norm() > cfg.gamma) {
        l.col(j) = cfg.mode == SensitivityMode::L1
                       ? project_l1_column(random_column())
                       : project_l2_column(random_column());
        repaired = true;
      }
    }
    // Rows that collapse to exactly zero are capacity the pair can never
    // recover on its own (the matching B column vanishes with them). Point
    // them at the unserved directions: the leading right-singular vectors
    // of the residual.
    std::vector<Eigen::Index> dead_rows;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (l.row(i).isZero(0.0)) dead_rows.push_back(i);
    }
    if (!dead_rows.empty()) {
      const SvdSummary gap_svd = svd(gap);
      const double scale = l.cwiseAbs().maxCoeff();
      for (size_t k2 = 0; k2 < dead_rows.size(); ++k2) {
        const auto idx = static_cast<Eigen::Index>(k2);
        if (idx < gap_svd.rank) {
          Vector direction = gap_svd.v.row(idx).transpose();
          const double peak = direction.cwiseAbs().maxCoeff();
          if (peak > 0.0 && scale > 0.0) direction *= scale / peak;
          l.row(dead_rows[k2]) = direction.transpose();
        } else {
          l.row(dead_rows[k2]) =
              random_row().transpose() * (scale > 0.0 ? scale : 1.0);
        }
      }
      project_columns(l, cfg.mode);
      repaired = true;
    }
    if (repaired) {
      stalled_outers = 0;
      stall_reference = std::numeric_limits<double>::infinity();
      continue;
    }
    if (std::abs(tau - stall_reference) > kFrozenTol * std::max(1.0, tau)) {
      stall_reference = tau;
      stalled_outers = 0;
    } else if (++stalled_outers >= kStallWindow) {
      if (have_feasible && ++restarts >= 2) break;  // fall back to incumbent
      l = fresh_l();
      pi.setZero();
      beta = 1.0;
      b = update_b(l, pi, beta, w);
      omega = 1.0;
      stalled_outers = 0;
      stall_reference = std::numeric_limits<double>::infinity();
    }
  }

  result.converged = have_feasible;
  result.decomposition = have_feasible
                             ? Decomposition{feasible_b, feasible_l, cfg.mode}
                             : Decomposition{resid_b, resid_l, cfg.mode};
  if (have_feasible) {
    // The loop may have wandered past the returned iterate; close the
    // history with the residual of what is actually returned.
    trace.residual_history.push_back(
        (w - result.decomposition.b * result.decomposition.l).norm());
  }
  trace.outer_iterations = k;
  trace.final_beta = beta;
  trace.final_objective = 0.5 * scale_phi(result.decomposition.b);
  trace.kkt = kkt_report(w, result.decomposition, pi);
  return result;
}

Decomposition rescale(const Decomposition& d) {
  const double c = sensitivity(d);
  if (c == 0.0) {
    throw std::domain_error("rescale: decomposition has zero sensitivity");
  }
  return Decomposition{c * d.b, d.l / c, d.mode};
}

KktReport kkt_report(const Matrix& w, const Decomposition& d,
                     const Matrix& pi) {
  if (pi.rows() != w.rows() || pi.cols() != w.cols() ||
      d.b.rows() != w.rows() || d.l.cols() != w.cols() ||
      d.b.cols() != d.l.rows()) {
    throw std::invalid_argument("kkt_report: dimension mismatch");
  }
  KktReport report;
  report.feasibility_residual = (w - d.b * d.l).norm();
  report.stationarity_b = (d.b - pi * d.l.transpose()).norm();

  const Matrix bt_pi = d.b.transpose() * pi;  // r x n
  constexpr double kActiveTol = 1e-6;
  double violation = 0.0;
  double slack = 0.0;
  for (Eigen::Index j = 0; j < d.l.cols(); ++j) {
    const double cn = column_norm(d.l, j, d.mode);
    violation = std::max(violation, cn - 1.0);
    if (cn < 1.0 - kActiveTol) continue;  // inactive: mu_j = 0
    // Least-squares fit of mu_j on the constraint gradient:
    //   L1: bt_pi(:,j) ~ mu_j sign(l_j) on the support of l_j
    //   L2: bt_pi(:,j) ~ mu_j 2 l_j
    double mu = 0.0;
    if (d.mode == SensitivityMode::L1) {
      double dot = 0.0;
      int support = 0;
      for (Eigen::Index i = 0; i < d.l.rows(); ++i) {
        if (d.l(i, j) == 0.0) continue;
        dot += bt_pi(i, j) * (d.l(i, j) < 0.0 ? -1.0 : 1.0);
        ++support;
      }
      if (support > 0) mu = dot / support;
    } else {
      const double denom = 2.0 * d.l.col(j).squaredNorm();
      if (denom > 0.0) mu = bt_pi.col(j).dot(d.l.col(j)) / denom;
    }
    mu = std::max(mu, 0.0);
    slack = std::max(slack, std::abs(mu * (cn - 1.0)));
  }
  report.constraint_violation = std::max(violation, 0.0);
  report.complementary_slack = slack;
  return report;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() ||
      rows[0].empty()) {
    throw std::runtime_error("decomposition document: malformed matrix");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != c) {
      throw std::runtime_error("decomposition document: ragged matrix");
    }
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = row[static_cast<size_t>(j)].get<double>();
  }
  return m;
}

}  // namespace

std::string serialize_decomposition(const Decomposition& d) {
  nlohmann::json doc;
  doc["r"] = d.r();
  doc["mode"] = sensitivity_mode_name(d.mode);
  doc["b"] = matrix_to_json(d.b);
  doc["l"] = matrix_to_json(d.l);
  return doc.dump(2) + "\n";
}

Decomposition parse_decomposition(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  Decomposition d;
  d.mode = parse_sensitivity_mode(doc.at("mode").get<std::string>());
  d.b = matrix_from_json(doc.at("b"));
  d.l = matrix_from_json(doc.at("l"));
  const auto r = doc.at("r").get<Eigen::Index>();
  if (d.b.cols() != r || d.l.rows() != r) {
    throw std::runtime_error("decomposition document: r does not match B/L");
  }
  return d;
}

void save_decomposition(const Decomposition& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_decomposition(d);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Decomposition load_decomposition(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_decomposition(text);
}

}  // namespace lrm
