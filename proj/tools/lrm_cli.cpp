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

// Command-line front end: workload generation, workload decomposition,
// mechanism benchmark runs, parameter sweeps, and spectral error bounds.
//
// Exit codes: 0 success, 1 usage error, 2 I/O or parse error,
// 3 solver non-convergence.

#include <cmath>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrm/analysis.hpp"
#include "lrm/bench.hpp"
#include "lrm/decompose.hpp"
#include "lrm/linalg.hpp"
#include "lrm/workload.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNoConvergence = 3;

constexpr double kDefaultDelta = 0.0001;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenArgs {
  std::string kind;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index s = 0;
  uint64_t seed = 0;
  std::string out;
};

struct DecomposeArgs {
  std::string workload;
  double gamma = 0.01;
  Eigen::Index r = 0;
  double r_ratio = 0.0;
  std::string mode = "l1";
  uint64_t seed = 0;
  std::string out;
};

struct RunArgs {
  std::string workload;
  std::string counts;
  std::vector<std::string> mechanisms;
  double epsilon = 1.0;
  double delta = 0.0;
  bool approx = false;
  int trials = 20;
  uint64_t seed = 0;
  std::string format = "json";
  std::string out;
  double gamma = 0.01;
  Eigen::Index r = 0;
  std::string decomposition;
  int threads = 1;
  double density = 1.0;
  // Sweep only.
  std::string axis;
  std::vector<double> values;
  std::string kind;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index s = 0;
  uint64_t gen_seed = 0;
};

struct BoundsArgs {
  std::string workload;
  double epsilon = 1.0;
  double delta = 0.0;
  bool approx = false;
};

lrm::PrivacyParams make_privacy(double epsilon, double delta, bool approx) {
  if (delta > 0.0) return lrm::PrivacyParams::approx(epsilon, delta);
  if (approx) return lrm::PrivacyParams::approx(epsilon, kDefaultDelta);
  return lrm::PrivacyParams::pure(epsilon);
}

int cmd_gen(const GenArgs& args) {
  lrm::WorkloadSpec spec;
  spec.kind = lrm::parse_workload_kind(args.kind);
  spec.m = args.m;
  spec.n = args.n;
  spec.s = args.s;
  spec.seed = args.seed;
  if (spec.kind == lrm::WorkloadKind::WRelated && spec.s < 1) {
    throw UsageError("gen: WRelated requires --s");
  }
  const lrm::Matrix w = lrm::gen_workload(spec);
  lrm::save_matrix_csv(w, args.out);
  return 0;
}

int cmd_decompose(const DecomposeArgs& args) {
  const lrm::Matrix w = lrm::load_matrix_csv(args.workload);
  lrm::SolverConfig cfg;
  cfg.gamma = args.gamma;
  cfg.mode = lrm::parse_sensitivity_mode(args.mode);
  cfg.seed = args.seed;
  if (args.r > 0) {
    cfg.r = args.r;
  } else if (args.r_ratio > 0.0) {
    const auto rank = static_cast<double>(lrm::svd(w).rank);
    cfg.r = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::ceil(args.r_ratio * rank)));
  }

  const lrm::SolveResult result = lrm::decompose(w, cfg);
  const lrm::SolverTrace& trace = result.trace;
  std::cerr << "outer_iterations=" << trace.outer_iterations
            << " residual=" << (trace.residual_history.empty()
                                    ? 0.0
                                    : trace.residual_history.back())
            << " beta=" << trace.final_beta
            << " objective=" << trace.final_objective
            << " kkt_stationarity_b=" << trace.kkt.stationarity_b
            << " kkt_constraint_violation=" << trace.kkt.constraint_violation
            << '\n';
  lrm::save_decomposition(result.decomposition, args.out);
  if (!result.converged) {
    std::cerr << "decomposition did not converge; best iterate written\n";
    return kExitNoConvergence;
  }
  return 0;
}

lrm::ExperimentConfig make_run_config(const RunArgs& args, bool sweep) {
  lrm::ExperimentConfig cfg;
  if (!args.workload.empty()) {
    cfg.workload = lrm::load_matrix_csv(args.workload);
    cfg.workload_file = args.workload;
  } else if (!args.kind.empty()) {
    lrm::WorkloadSpec spec;
    spec.kind = lrm::parse_workload_kind(args.kind);
    spec.m = args.m;
    spec.n = args.n;
    spec.s = args.s;
    spec.seed = args.gen_seed;
    cfg.spec = spec;
    cfg.workload = lrm::gen_workload(spec);
  } else {
    throw UsageError("either --workload or --kind is required");
  }
  if (!args.counts.empty()) {
    if (sweep) throw UsageError("sweep uses synthetic counts; drop --counts");
    cfg.counts = lrm::load_counts(args.counts, cfg.workload.cols());
    cfg.counts_file = args.counts;
  }
  cfg.counts_density = args.density;
  if (args.mechanisms.empty()) throw UsageError("at least one --mechanism");
  for (const std::string& name : args.mechanisms) {
    cfg.mechanisms.push_back(lrm::parse_mechanism(name));
  }
  cfg.privacy = make_privacy(args.epsilon, args.delta, args.approx);
  cfg.trials = args.trials;
  cfg.base_seed = args.seed;
  cfg.solver.gamma = args.gamma;
  cfg.solver.r = args.r;
  cfg.solver.seed = args.seed;
  cfg.solver.mode = cfg.privacy.approximate() ? lrm::SensitivityMode::L2
                                              : lrm::SensitivityMode::L1;
  cfg.esm.seed = args.seed;
  cfg.threads = args.threads;
  if (!args.decomposition.empty()) {
    cfg.lrm_decomposition = lrm::load_decomposition(args.decomposition);
  }
  return cfg;
}

int cmd_run(const RunArgs& args) {
  const lrm::ExperimentConfig cfg = make_run_config(args, /*sweep=*/false);
  try {
    const lrm::ExperimentReport report = lrm::run_experiment(cfg);
    lrm::emit_report({report}, args.format, args.out);
  } catch (const lrm::ExperimentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    lrm::emit_report({e.partial()}, args.format, args.out);
    return kExitNoConvergence;
  }
  return 0;
}

int cmd_sweep(const RunArgs& args) {
  const lrm::ExperimentConfig cfg = make_run_config(args, /*sweep=*/true);
  if (args.axis.empty()) throw UsageError("sweep requires --axis");
  try {
    const auto reports = lrm::run_sweep(cfg, args.axis, args.values);
    lrm::emit_report(reports, args.format, args.out);
  } catch (const lrm::ExperimentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  }
  return 0;
}

int cmd_bounds(const BoundsArgs& args) {
  const lrm::Matrix w = lrm::load_matrix_csv(args.workload);
  const lrm::PrivacyParams p = make_privacy(args.epsilon, args.delta, args.approx);
  const lrm::ErrorBounds b = lrm::bounds(w, p);
  std::cout << "kappa=" << lrm::format_double(b.kappa) << '\n'
            << "rho=" << lrm::format_double(b.rho) << '\n'
            << "upper_eps=" << lrm::format_double(b.upper_eps) << '\n';
  if (b.upper_approx.has_value()) {
    std::cout << "upper_approx=" << lrm::format_double(*b.upper_approx) << '\n'
              << "lower_approx=" << lrm::format_double(*b.lower_approx) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear counting queries under differential privacy via "
               "low-rank workload decomposition"};
  app.require_subcommand(1);

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic workload CSV");
  gen->add_option("--kind", gen_args.kind,
                  "WDiscrete | WRange | WMarginal | WRelated")
      ->required();
  gen->add_option("--m", gen_args.m, "number of queries")->required();
  gen->add_option("--n", gen_args.n, "number of unit counts")->required();
  gen->add_option("--s", gen_args.s, "base queries (WRelated)");
  gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--out", gen_args.out, "output CSV path")->required();

  DecomposeArgs dec_args;
  auto* dec = app.add_subcommand("decompose", "Decompose a workload matrix");
  dec->add_option("--workload", dec_args.workload, "workload CSV")->required();
  dec->add_option("--gamma", dec_args.gamma, "residual tolerance");
  dec->add_option("--r", dec_args.r, "number of intermediate queries");
  dec->add_option("--r-ratio", dec_args.r_ratio, "r as a multiple of rank(W)");
  dec->add_option("--mode", dec_args.mode, "l1 | l2");
  dec->add_option("--seed", dec_args.seed, "solver seed");
  dec->add_option("--out", dec_args.out, "output document path")->required();

  auto add_run_options = [](CLI::App* cmd, RunArgs& args, bool sweep) {
    cmd->add_option("--workload", args.workload, "workload CSV");
    cmd->add_option("--mechanism", args.mechanisms,
                    "NOD | NOR | LRM | ESM | COHERENT (repeatable)");
    cmd->add_option("--epsilon", args.epsilon, "privacy budget");
    cmd->add_option("--delta", args.delta, "approximate-DP delta");
    cmd->add_flag("--approx", args.approx,
                  "approximate DP with the default delta");
    cmd->add_option("--trials", args.trials, "trials per mechanism");
    cmd->add_option("--seed", args.seed, "base seed");
    cmd->add_option("--format", args.format, "json | csv");
    cmd->add_option("--out", args.out, "report path")->required();
    cmd->add_option("--gamma", args.gamma, "solver residual tolerance");
    cmd->add_option("--r", args.r, "intermediate queries for LRM");
    cmd->add_option("--threads", args.threads, "parallel trial threads");
    cmd->add_option("--density", args.density, "synthetic counts density");
    cmd->add_option("--kind", args.kind, "generate workload of this kind");
    cmd->add_option("--m", args.m, "queries (with --kind)");
    cmd->add_option("--n", args.n, "unit counts (with --kind)");
    cmd->add_option("--s", args.s, "base queries (with --kind WRelated)");
    cmd->add_option("--gen-seed", args.gen_seed, "workload seed (with --kind)");
    if (!sweep) {
      cmd->add_option("--counts", args.counts, "counts file (one per line)");
      cmd->add_option("--decomposition", args.decomposition,
                      "reuse a decomposition document for LRM");
    }
  };

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run mechanisms and report errors");
  add_run_options(run, run_args, /*sweep=*/false);

  RunArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter axis");
  add_run_options(sweep, sweep_args, /*sweep=*/true);
  sweep->add_option("--axis", sweep_args.axis,
                    "gamma | r_ratio | n | m | s | epsilon");
  sweep->add_option("--values", sweep_args.values, "axis values")
      ->delimiter(',');

  BoundsArgs bounds_args;
  auto* bnd = app.add_subcommand("bounds", "Print spectral error bounds");
  bnd->add_option("--workload", bounds_args.workload, "workload CSV")
      ->required();
  bnd->add_option("--epsilon", bounds_args.epsilon, "privacy budget");
  bnd->add_option("--delta", bounds_args.delta, "approximate-DP delta");
  bnd->add_flag("--approx", bounds_args.approx,
                "approximate DP with the default delta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_args);
    if (dec->parsed()) return cmd_decompose(dec_args);
    if (run->parsed()) return cmd_run(run_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    if (bnd->parsed()) return cmd_bounds(bounds_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
