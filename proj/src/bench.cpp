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

#include "lrm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <thread>

#include <json.hpp>

#include "lrm/rng.hpp"

namespace lrm {

namespace {

// Stream index reserved for synthetic counts; trial streams use 1..trials.
constexpr uint64_t kCountsStreamIndex = 0x636f756e74;

int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

MechanismKind parse_mechanism(const std::string& name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
  if (upper == "NOD") return MechanismKind::NOD;
  if (upper == "NOR") return MechanismKind::NOR;
  if (upper == "LRM") return MechanismKind::LRM;
  if (upper == "ESM") return MechanismKind::ESM;
  if (upper == "COHERENT") return MechanismKind::COHERENT;
  throw std::invalid_argument("unknown mechanism: " + name);
}

std::string mechanism_name(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::NOD: return "NOD";
    case MechanismKind::NOR: return "NOR";
    case MechanismKind::LRM: return "LRM";
    case MechanismKind::ESM: return "ESM";
    case MechanismKind::COHERENT: return "COHERENT";
  }
  throw std::invalid_argument("unknown mechanism");
}

Vector synthetic_counts(Eigen::Index n, uint64_t base_seed, double density) {
  Rng rng = Rng::stream(base_seed, kCountsStreamIndex);
  Vector counts(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rng.next_double() < density) {
      counts(i) = std::floor(std::exp(1.5 * std::abs(rng.next_gaussian())));
    } else {
      counts(i) = 0.0;
    }
  }
  return counts;
}

namespace {

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json workload;
  if (cfg.spec.has_value()) {
    workload["kind"] = workload_kind_name(cfg.spec->kind);
    workload["m"] = cfg.spec->m;
    workload["n"] = cfg.spec->n;
    if (cfg.spec->kind == WorkloadKind::WRelated) workload["s"] = cfg.spec->s;
    workload["seed"] = cfg.spec->seed;
  } else if (cfg.workload_file.has_value()) {
    workload["file"] = *cfg.workload_file;
  } else {
    workload["m"] = cfg.workload.rows();
    workload["n"] = cfg.workload.cols();
  }

  nlohmann::json doc;
  doc["workload"] = std::move(workload);
  doc["counts"] =
      cfg.counts_file.has_value() ? nlohmann::json(*cfg.counts_file)
                                  : nlohmann::json("synthetic");
  nlohmann::json mechs = nlohmann::json::array();
  for (MechanismKind kind : cfg.mechanisms) mechs.push_back(mechanism_name(kind));
  doc["mechanisms"] = std::move(mechs);
  doc["epsilon"] = cfg.privacy.epsilon;
  doc["delta"] = cfg.privacy.delta.has_value()
                     ? nlohmann::json(*cfg.privacy.delta)
                     : nlohmann::json(nullptr);
  doc["trials"] = cfg.trials;
  doc["base_seed"] = cfg.base_seed;
  doc["gamma"] = cfg.solver.gamma;
  doc["r"] = cfg.solver.r;
  doc["mode"] = sensitivity_mode_name(cfg.solver.mode);
  return doc;
}

// Per-trial answer producer; the zero-noise hook swaps in the exact value of
// each mechanism's noise-free output.
using TrialFn = std::function<Vector(uint64_t seed)>;

double average_sq_error(const ExperimentConfig& cfg, const Vector& exact,
                        const TrialFn& trial) {
  const int trials = cfg.trials;
  std::vector<double> errors(static_cast<size_t>(trials), 0.0);
  auto worker = [&](int begin, int end) {
    for (int t = begin; t < end; ++t) {
      const uint64_t seed =
          derive_stream_seed(cfg.base_seed, static_cast<uint64_t>(t) + 1);
      errors[static_cast<size_t>(t)] = (trial(seed) - exact).squaredNorm();
    }
  };
  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || trials < 2) {
    worker(0, trials);
  } else {
    std::vector<std::thread> pool;
    const int used = std::min(threads, trials);
    const int chunk = (trials + used - 1) / used;
    for (int i = 0; i < used; ++i) {
      const int begin = i * chunk;
      const int end = std::min(trials, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  // Fixed reduction order keeps the average independent of the thread count.
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / trials;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.mechanisms.empty()) {
    throw std::invalid_argument("mechanism set must be nonempty");
  }
  const Matrix& w = cfg.workload;
  const Vector counts =
      cfg.counts.size() > 0
          ? cfg.counts
          : synthetic_counts(w.cols(), cfg.base_seed, cfg.counts_density);
  if (counts.size() != w.cols()) {
    throw std::invalid_argument("counts length does not match workload");
  }
  const Vector exact = w * counts;

  ExperimentReport report;
  report.config_json = config_json(cfg).dump();

  for (MechanismKind kind : cfg.mechanisms) {
    MechanismResult result;
    result.mechanism = mechanism_name(kind);
    TrialFn trial;

    switch (kind) {
      case MechanismKind::NOD: {
        result.analytic_error = expected_error_nod(w, cfg.privacy);
        trial = cfg.zero_noise
                    ? TrialFn([&](uint64_t) { return exact; })
                    : TrialFn([&](uint64_t seed) {
                        return run_nod(w, counts, cfg.privacy, seed).values;
                      });
        break;
      }
      case MechanismKind::NOR: {
        result.analytic_error = expected_error_nor(w, cfg.privacy);
        trial = cfg.zero_noise
                    ? TrialFn([&](uint64_t) { return exact; })
                    : TrialFn([&](uint64_t seed) {
                        return run_nor(w, counts, cfg.privacy, seed).values;
                      });
        break;
      }
      case MechanismKind::LRM: {
        SolverConfig solver = cfg.solver;
        solver.mode = cfg.privacy.approximate() ? SensitivityMode::L2
                                                : SensitivityMode::L1;
        std::optional<Decomposition> dcp = cfg.lrm_decomposition;
        if (!dcp.has_value()) {
          const auto start = std::chrono::steady_clock::now();
          SolveResult solved = decompose(w, solver);
          result.solve_time_ms = elapsed_ms(start);
          result.residual = solved.trace.residual_history.empty()
                                ? 0.0
                                : solved.trace.residual_history.back();
          result.outer_iterations = solved.trace.outer_iterations;
          if (!solved.converged) {
            throw ExperimentError(
                "LRM decomposition did not converge (residual " +
                    format_double(*result.residual) + " > gamma " +
                    format_double(solver.gamma) + ")",
                report);
          }
          dcp = std::move(solved.decomposition);
        }
        result.analytic_error = expected_error_lrm(*dcp, cfg.privacy);
        auto shared = std::make_shared<Decomposition>(std::move(*dcp));
        trial = cfg.zero_noise
                    ? TrialFn([&, shared](uint64_t) {
                        return Vector(shared->b * (shared->l * counts));
                      })
                    : TrialFn([&, shared](uint64_t seed) {
                        return run_lrm(*shared, counts, cfg.privacy, seed)
                            .values;
                      });
        break;
      }
      case MechanismKind::ESM: {
        const auto start = std::chrono::steady_clock::now();
        auto strategy = std::make_shared<StrategyMatrix>(esm_solve(w, cfg.esm));
        result.solve_time_ms = elapsed_ms(start);
        result.analytic_error = strategy_error(*strategy, w, cfg.privacy);
        trial = cfg.zero_noise
                    ? TrialFn([&, strategy](uint64_t) {
                        const Matrix recombine =
                            w * pseudo_inverse(strategy->a);
                        return Vector(recombine * (strategy->a * counts));
                      })
                    : TrialFn([&, strategy](uint64_t seed) {
                        return run_strategy(*strategy, w, counts, cfg.privacy,
                                            seed)
                            .values;
                      });
        break;
      }
      case MechanismKind::COHERENT: {
        if (!cfg.privacy.approximate()) {
          throw std::invalid_argument(
              "COHERENT requires (epsilon, delta) privacy");
        }
        const auto start = std::chrono::steady_clock::now();
        auto dcp =
            std::make_shared<Decomposition>(coherent_decomposition(w));
        result.solve_time_ms = elapsed_ms(start);
        result.analytic_error = expected_error_lrm(*dcp, cfg.privacy);
        trial = cfg.zero_noise
                    ? TrialFn([&, dcp](uint64_t) {
                        return Vector(dcp->b * (dcp->l * counts));
                      })
                    : TrialFn([&, dcp](uint64_t seed) {
                        return run_lrm(*dcp, counts, cfg.privacy, seed).values;
                      });
        break;
      }
    }

    const auto start = std::chrono::steady_clock::now();
    result.avg_sq_error = average_sq_error(cfg, exact, trial);
    result.wall_time_ms = elapsed_ms(start);
    report.results.push_back(std::move(result));
  }
  return report;
}

std::vector<ExperimentReport> run_sweep(const ExperimentConfig& base,
                                        const std::string& axis,
                                        const std::vector<double>& values) {
  std::vector<ExperimentReport> reports;
  for (double value : values) {
    ExperimentConfig cfg = base;
    if (axis == "gamma") {
      cfg.solver.gamma = value;
    } else if (axis == "r_ratio") {
      const auto rank = static_cast<double>(svd(cfg.workload).rank);
      cfg.solver.r = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::ceil(value * rank)));
    } else if (axis == "epsilon") {
      cfg.privacy.epsilon = value;
    } else if (axis == "n" || axis == "m" || axis == "s") {
      if (!cfg.spec.has_value()) {
        throw std::invalid_argument("axis '" + axis +
                                    "' requires a generated workload");
      }
      const auto v = static_cast<Eigen::Index>(value);
      if (axis == "n") cfg.spec->n = v;
      if (axis == "m") cfg.spec->m = v;
      if (axis == "s") cfg.spec->s = v;
      cfg.workload = gen_workload(*cfg.spec);
      cfg.counts = Vector();  // re-synthesized at the new width
      cfg.solver.r = 0;
    } else {
      throw std::invalid_argument("unknown sweep axis: " + axis);
    }
    reports.push_back(run_experiment(cfg));
  }
  return reports;
}

namespace {

nlohmann::json report_json(const ExperimentReport& report) {
  nlohmann::json doc;
  doc["config"] = nlohmann::json::parse(report.config_json);
  nlohmann::json results = nlohmann::json::array();
  for (const MechanismResult& r : report.results) {
    nlohmann::json entry;
    entry["mechanism"] = r.mechanism;
    entry["avg_sq_error"] = r.avg_sq_error;
    entry["analytic_error"] = r.analytic_error.has_value()
                                  ? nlohmann::json(*r.analytic_error)
                                  : nlohmann::json(nullptr);
    entry["wall_time_ms"] = r.wall_time_ms;
    entry["solve_time_ms"] = r.solve_time_ms;
    if (r.residual.has_value()) entry["residual"] = *r.residual;
    if (r.outer_iterations.has_value())
      entry["outer_iterations"] = *r.outer_iterations;
    results.push_back(std::move(entry));
  }
  doc["results"] = std::move(results);
  return doc;
}

}  // namespace

std::string render_report(const std::vector<ExperimentReport>& reports,
                          const std::string& format) {
  if (format == "json") {
    if (reports.size() == 1) return report_json(reports.front()).dump(2) + "\n";
    nlohmann::json array = nlohmann::json::array();
    for (const auto& report : reports) array.push_back(report_json(report));
    return array.dump(2) + "\n";
  }
  if (format == "csv") {
    std::string out = "mechanism,avg_sq_error,analytic_error,wall_time_ms\n";
    for (const auto& report : reports) {
      for (const MechanismResult& r : report.results) {
        out += r.mechanism;
        out += ',';
        out += format_double(r.avg_sq_error);
        out += ',';
        if (r.analytic_error.has_value()) out += format_double(*r.analytic_error);
        out += ',';
        out += std::to_string(r.wall_time_ms);
        out += '\n';
      }
    }
    return out;
  }
  throw std::invalid_argument("unknown report format: " + format);
}

void emit_report(const std::vector<ExperimentReport>& reports,
                 const std::string& format, const std::string& path) {
  const std::string rendered = render_report(reports, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << rendered;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lrm
