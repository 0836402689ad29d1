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

#ifndef LRM_BENCH_HPP
#define LRM_BENCH_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrm/analysis.hpp"
#include "lrm/decompose.hpp"
#include "lrm/esm.hpp"
#include "lrm/mechanisms.hpp"
#include "lrm/privacy.hpp"
#include "lrm/workload.hpp"

namespace lrm {

enum class MechanismKind { NOD, NOR, LRM, ESM, COHERENT };

MechanismKind parse_mechanism(const std::string& name);
std::string mechanism_name(MechanismKind kind);

struct ExperimentConfig {
  Matrix workload;
  // Present when the workload was generated; required for n/m/s sweeps and
  // echoed into reports for reproducibility.
  std::optional<WorkloadSpec> spec;
  std::optional<std::string> workload_file;

  // Empty counts request the synthetic generator (heavy-tailed integers
  // floor(exp(1.5 |z|)) kept with probability counts_density, else 0, from a
  // dedicated stream of base_seed).
  Vector counts;
  std::optional<std::string> counts_file;
  double counts_density = 1.0;

  std::vector<MechanismKind> mechanisms;
  PrivacyParams privacy = PrivacyParams::pure(1.0);
  int trials = 20;
  SolverConfig solver;
  EsmConfig esm;
  // Reused instead of solving when present; the mode must match privacy.
  std::optional<Decomposition> lrm_decomposition;
  uint64_t base_seed = 0;
  int threads = 1;
  // Test support: forces every noise vector to zero, so reported error is
  // only the mechanism's approximation bias.
  bool zero_noise = false;
};

struct MechanismResult {
  std::string mechanism;
  double avg_sq_error = 0.0;
  std::optional<double> analytic_error;
  int64_t wall_time_ms = 0;   // mechanism execution across all trials
  int64_t solve_time_ms = 0;  // decomposition / strategy optimization
  // LRM trace summary.
  std::optional<double> residual;
  std::optional<int> outer_iterations;
};

struct ExperimentReport {
  std::vector<MechanismResult> results;
  // Config echo used for report emission; excludes wall-time-like values.
  std::string config_json;
};

// Raised when the decomposition solver fails to converge; carries the
// results of the mechanisms that completed before the failure.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(const std::string& message, ExperimentReport partial)
      : std::runtime_error(message), partial_(std::move(partial)) {}
  const ExperimentReport& partial() const { return partial_; }

 private:
  ExperimentReport partial_;
};

// Synthetic counts used when no counts file is supplied.
Vector synthetic_counts(Eigen::Index n, uint64_t base_seed, double density);

// Runs every configured mechanism for cfg.trials trials. Trial t uses the
// seed stream (base_seed, t), shared across mechanisms; trials may execute
// on cfg.threads threads, with the average reduced in trial order so the
// report does not depend on the thread count. LRM and ESM optimize once per
// experiment, not per trial.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// One report per value, varying exactly one axis of
// {gamma, r_ratio, n, m, s, epsilon}. r_ratio maps to
// r = ceil(ratio * rank(W)); n/m/s require a generated workload spec.
std::vector<ExperimentReport> run_sweep(const ExperimentConfig& base,
                                        const std::string& axis,
                                        const std::vector<double>& values);

// format "json": {"config": {...}, "results": [{"mechanism", "avg_sq_error",
// "analytic_error", "wall_time_ms", ...}]} (an array of such objects when
// more than one report is given). format "csv": fixed header
// mechanism,avg_sq_error,analytic_error,wall_time_ms.
void emit_report(const std::vector<ExperimentReport>& reports,
                 const std::string& format, const std::string& path);
std::string render_report(const std::vector<ExperimentReport>& reports,
                          const std::string& format);

}  // namespace lrm

#endif  // LRM_BENCH_HPP
