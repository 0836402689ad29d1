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

#include <cmath>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "test_support.hpp"

using namespace lrm;

namespace {

ExperimentConfig small_nod_config() {
  ExperimentConfig cfg;
  cfg.workload = Matrix::Identity(4, 4);
  cfg.mechanisms = {MechanismKind::NOD};
  cfg.privacy = PrivacyParams::pure(1.0);
  cfg.trials = 1;
  cfg.base_seed = 17;
  Vector d(4);
  d << 1, 2, 3, 4;
  cfg.counts = d;
  return cfg;
}

std::string strip_wall_times(const std::string& rendered) {
  auto doc = nlohmann::json::parse(rendered);
  auto scrub = [](nlohmann::json& report) {
    for (auto& entry : report["results"]) {
      entry.erase("wall_time_ms");
      entry.erase("solve_time_ms");
    }
  };
  if (doc.is_array()) {
    for (auto& report : doc) scrub(report);
  } else {
    scrub(doc);
  }
  return doc.dump();
}

}  // namespace

TEST_CASE("run_experiment with the zero-noise hook reports zero error") {
  ExperimentConfig cfg = small_nod_config();
  cfg.zero_noise = true;
  const ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.results.size() == 1);
  CHECK(report.results[0].avg_sq_error == 0.0);
}

TEST_CASE("run_experiment NOD error approaches the analytic value") {
  ExperimentConfig cfg = small_nod_config();
  cfg.trials = 20000;
  const ExperimentReport report = run_experiment(cfg);
  const MechanismResult& r = report.results[0];
  REQUIRE(r.analytic_error.has_value());
  CHECK(*r.analytic_error == doctest::Approx(8.0).epsilon(1e-12));
  // Loose 3-sigma-style band; the acceptance suite runs the strict version.
  CHECK(r.avg_sq_error == doctest::Approx(8.0).epsilon(0.15));
}

TEST_CASE("identical configs produce identical reports") {
  ExperimentConfig cfg = small_nod_config();
  cfg.mechanisms = {MechanismKind::NOD, MechanismKind::NOR};
  cfg.trials = 50;
  const std::string a = strip_wall_times(render_report({run_experiment(cfg)}, "json"));
  const std::string b = strip_wall_times(render_report({run_experiment(cfg)}, "json"));
  CHECK(a == b);
}

TEST_CASE("thread count does not change the reported averages") {
  ExperimentConfig cfg = small_nod_config();
  cfg.mechanisms = {MechanismKind::NOD, MechanismKind::NOR};
  cfg.trials = 64;
  cfg.threads = 1;
  const ExperimentReport serial = run_experiment(cfg);
  cfg.threads = 4;
  const ExperimentReport parallel = run_experiment(cfg);
  for (size_t i = 0; i < serial.results.size(); ++i) {
    CHECK(serial.results[i].avg_sq_error ==
          parallel.results[i].avg_sq_error);
  }
}

TEST_CASE("LRM and COHERENT entries carry solver metadata") {
  ExperimentConfig cfg;
  cfg.workload = testing::random_low_rank(6, 8, 2, 3);
  cfg.mechanisms = {MechanismKind::LRM, MechanismKind::COHERENT,
                    MechanismKind::ESM};
  cfg.privacy = PrivacyParams::approx(1.0, 1e-4);
  cfg.trials = 10;
  cfg.base_seed = 5;
  cfg.solver.seed = 5;
  const ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.results.size() == 3);
  CHECK(report.results[0].residual.has_value());
  CHECK(report.results[0].outer_iterations.has_value());
  CHECK(report.results[0].analytic_error.has_value());
  CHECK(report.results[1].analytic_error.has_value());
  CHECK(report.results[2].analytic_error.has_value());
  // Coherent decomposition never loses to noise on data.
  CHECK(*report.results[1].analytic_error <=
        expected_error_nod(cfg.workload, cfg.privacy) * (1.0 + 1e-12));
}

TEST_CASE("COHERENT without delta is rejected") {
  ExperimentConfig cfg = small_nod_config();
  cfg.mechanisms = {MechanismKind::COHERENT};
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("non-convergence carries a partial report") {
  ExperimentConfig cfg;
  cfg.workload = testing::random_matrix(4, 6, 9);
  cfg.mechanisms = {MechanismKind::NOD, MechanismKind::LRM};
  cfg.privacy = PrivacyParams::pure(1.0);
  cfg.trials = 3;
  cfg.solver.r = 1;          // too small for a full-rank 4 x 6 workload
  cfg.solver.gamma = 1e-9;
  cfg.solver.max_outer = 20;
  try {
    run_experiment(cfg);
    FAIL("expected ExperimentError");
  } catch (const ExperimentError& e) {
    REQUIRE(e.partial().results.size() == 1);
    CHECK(e.partial().results[0].mechanism == "NOD");
  }
}

TEST_CASE("run_sweep") {
  ExperimentConfig base;
  base.spec = WorkloadSpec{WorkloadKind::WRelated, 12, 16, 3, 7};
  base.workload = gen_workload(*base.spec);
  base.mechanisms = {MechanismKind::NOD};
  base.privacy = PrivacyParams::pure(1.0);
  base.trials = 2;

  SUBCASE("gamma axis emits one report per value") {
    const auto reports =
        run_sweep(base, "gamma", {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0});
    CHECK(reports.size() == 6);
  }
  SUBCASE("empty values produce no reports") {
    CHECK(run_sweep(base, "gamma", {}).empty());
  }
  SUBCASE("unknown axis is rejected") {
    CHECK_THROWS_AS(run_sweep(base, "bogus", {1.0}), std::invalid_argument);
  }
  SUBCASE("n axis regenerates the workload") {
    const auto reports = run_sweep(base, "n", {8, 32});
    REQUIRE(reports.size() == 2);
    const auto first = nlohmann::json::parse(reports[0].config_json);
    const auto second = nlohmann::json::parse(reports[1].config_json);
    CHECK(first["workload"]["n"] == 8);
    CHECK(second["workload"]["n"] == 32);
  }
  SUBCASE("n axis requires a generated workload") {
    ExperimentConfig file_based = base;
    file_based.spec.reset();
    CHECK_THROWS_AS(run_sweep(file_based, "n", {8.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("report rendering") {
  ExperimentConfig cfg = small_nod_config();
  cfg.zero_noise = true;
  const ExperimentReport report = run_experiment(cfg);

  SUBCASE("csv has the fixed column order and one row per mechanism") {
    const std::string csv = render_report({report}, "csv");
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "mechanism,avg_sq_error,analytic_error,wall_time_ms");
    std::string row;
    std::getline(lines, row);
    CHECK(row.substr(0, 4) == "NOD,");
    CHECK(!std::getline(lines, row));
  }
  SUBCASE("json parses and round-trips numeric fields") {
    const std::string rendered = render_report({report}, "json");
    const auto doc = nlohmann::json::parse(rendered);
    REQUIRE(doc["results"].size() == 1);
    CHECK(doc["results"][0]["mechanism"] == "NOD");
    CHECK(doc["results"][0]["avg_sq_error"].get<double>() ==
          report.results[0].avg_sq_error);
    CHECK(doc["results"][0]["analytic_error"].get<double>() ==
          *report.results[0].analytic_error);
    CHECK(doc["config"]["trials"] == 1);
  }
  SUBCASE("unknown format is rejected") {
    CHECK_THROWS_AS(render_report({report}, "xml"), std::invalid_argument);
  }
}

TEST_CASE("synthetic counts are deterministic, nonnegative integers") {
  const Vector a = synthetic_counts(64, 9, 0.8);
  const Vector b = synthetic_counts(64, 9, 0.8);
  CHECK((a - b).norm() == 0.0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    CHECK(a(i) >= 0.0);
    CHECK(a(i) == std::floor(a(i)));
  }
  // Density knob produces zeros.
  const Vector sparse = synthetic_counts(256, 3, 0.1);
  Eigen::Index zeros = 0;
  for (Eigen::Index i = 0; i < sparse.size(); ++i)
    if (sparse(i) == 0.0) ++zeros;
  CHECK(zeros > 128);
}
