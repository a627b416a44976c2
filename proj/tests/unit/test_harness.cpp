/**
 * Copyright 2026 The proxvr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "proxvr/error.hpp"
#include "proxvr/harness.hpp"
#include "proxvr/optimizers.hpp"
#include "proxvr/theory.hpp"

using namespace proxvr;

namespace {

bool bit_equal(const std::vector<double> &a, const std::vector<double> &b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

std::vector<double> geometric(double c, double rho, std::size_t count) {
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(c * std::pow(rho, static_cast<double>(k)));
  return out;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.n = 6;
  cfg.d = 8;
  cfg.s = 20.0;
  cfg.K = 300;
  cfg.repeats = 7;
  cfg.seed = 1234;
  return cfg;
}

}  // namespace

TEST_CASE("rate fit is exact on geometric sequences") {
  const RateFit fit = fit_rate(geometric(1.0, 0.9, 200));
  CHECK(std::abs(fit.slope - std::log(0.9)) <= 1e-9);
  CHECK(std::abs(fit.rho_emp - 0.9) <= 1e-9);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.rho_alt == doctest::Approx(1.0 + std::log(0.9)));
  CHECK(fit.first == 0);
  CHECK(fit.last == 199);

  for (double c : {1e-5, 3.0, 1e8}) {
    const RateFit scaled = fit_rate(geometric(c, 0.9, 200));
    CHECK(std::abs(scaled.slope - fit.slope) <= 1e-12);
  }
}

TEST_CASE("rate fit on a constant sequence") {
  const RateFit fit = fit_rate(std::vector<double>(50, 1.0));
  CHECK(fit.slope == 0.0);
  CHECK(fit.rho_emp == 1.0);
  CHECK(fit.r_squared == 1.0);
}

TEST_CASE("rate fit window stops at the floor") {
  auto traj = geometric(1.0, 0.5, 100);  // 0.5^k falls below 1e-12 at k = 40
  const RateFit fit = fit_rate(traj);
  CHECK(fit.floor == 1e-12);
  CHECK(fit.last == 39);
  CHECK(std::abs(fit.rho_emp - 0.5) <= 1e-9);

  CHECK_THROWS_AS(fit_rate(geometric(1.0, 0.5, 100), 0.01), InsufficientDecayError);
  CHECK_THROWS_AS(fit_rate(std::vector<double>(9, 1.0)), InsufficientDecayError);
  CHECK(default_floor({1e-30}) == 1e-20);
}

TEST_CASE("one repeat reproduces a single run") {
  RunConfig cfg = small_config();
  cfg.repeats = 1;
  const CellResult cell = run_cell(cfg);

  const auto problem = generate_quadratic(cfg.n, cfg.d, cfg.s, cfg.seed);
  const auto stats = compute_stats(problem);
  const double p = 1.0 / 6.0;
  const double gamma = theoretical_stepsize(std::sqrt(stats.delta_sq), p);
  CHECK(cell.gamma == gamma);
  CHECK(cell.p == p);
  const auto t = run(problem, stats, {Method::kLsvrp, gamma, p, 1},
                     default_start(stats, cfg.x0_radius, cfg.seed), cfg.K,
                     repeat_seed(cfg.seed, 0));
  CHECK(bit_equal(cell.mean_sq_dist, t.sq_dist));
  CHECK(cell.mean_sq_dist[0] == doctest::Approx(100.0).epsilon(1e-12));
  for (double se : cell.std_error) CHECK(se == 0.0);
}

TEST_CASE("cell output does not depend on the thread count") {
  const RunConfig cfg = small_config();
  const CellResult a = run_cell(cfg, 1);
  const CellResult b = run_cell(cfg, 3);
  CHECK(bit_equal(a.mean_sq_dist, b.mean_sq_dist));
  CHECK(bit_equal(a.std_error, b.std_error));
}

TEST_CASE("starting at the optimum stays at the floor") {
  const RunConfig cfg = small_config();
  const auto problem = generate_quadratic(cfg.n, cfg.d, cfg.s, cfg.seed);
  const auto stats = compute_stats(problem);
  const CellResult cell = run_cell(problem, stats, cfg, 1, stats.x_star);
  for (double v : cell.mean_sq_dist) CHECK(v <= 1e-18);
}

TEST_CASE("averaged trajectory stays under the theoretical envelope") {
  RunConfig cfg = small_config();
  cfg.repeats = 40;
  cfg.K = 400;
  const CellResult cell = run_cell(cfg);
  const double rho = theoretical_rate(cell.stats.mu, cell.gamma, cell.p);
  const double floor = default_floor(cell.mean_sq_dist);
  for (std::size_t k = 0; k < cell.mean_sq_dist.size(); ++k) {
    if (cell.mean_sq_dist[k] <= floor) break;
    const double envelope = 1.5 * std::pow(rho, static_cast<double>(k)) * cell.mean_sq_dist[0];
    CHECK(cell.mean_sq_dist[k] <= envelope + 3.0 * cell.std_error[k]);
  }
}

TEST_CASE("reference-size cell converges linearly") {
  RunConfig cfg;
  cfg.n = 100;
  cfg.d = 100;
  cfg.s = 100.0;
  cfg.K = 1000;
  cfg.repeats = 10;
  cfg.seed = 7;
  const CellResult cell = run_cell(cfg);
  CHECK(cell.stats.delta_sq >= 975.44 / 4.0);
  CHECK(cell.stats.delta_sq <= 975.44 * 4.0);
  const RateReport report = make_report(cell);
  REQUIRE(report.ok());
  CHECK(report.fit.r_squared >= 0.99);
  CHECK(report.fit.rho_emp < 1.0);
  CHECK(report.fit.rho_emp <= report.rho_theory + 0.01);
}

TEST_CASE("zero dissimilarity falls back to p / (3 mu)") {
  ProblemStats stats;
  stats.delta_sq = 0.0;
  stats.mu = 2.0;
  const StepsizeChoice choice = select_stepsize(stats, 0.3);
  CHECK(choice.fallback);
  CHECK(choice.gamma == doctest::Approx(0.05));
  stats.mu = 0.0;
  CHECK_THROWS_AS(select_stepsize(stats, 0.3), ParameterError);
}

TEST_CASE("run config validation") {
  RunConfig cfg = small_config();
  cfg.K = 1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = small_config();
  cfg.repeats = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = small_config();
  cfg.p = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = small_config();
  CHECK(cfg.probability() == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("grid specs and seeds") {
  const GridSpec desk = desk_grid(5);
  CHECK(desk.cells().size() == 4);
  CHECK(desk.K == 500);
  CHECK(desk.repeats == 50);
  CHECK(desk.d == 100);
  const GridSpec full = full_grid(5);
  CHECK(full.cells().size() == 48);
  CHECK(full.K == 1000);
  CHECK(full.repeats == 200);
  // Cell seeds depend only on (base, n, s).
  CHECK(desk.cells()[3].seed == cell_seed(5, 25, 100.0));
  CHECK(cell_seed(5, 25, 100.0) != cell_seed(5, 25, 5.0));
}

TEST_CASE("grid records failing cells and continues") {
  GridSpec spec;
  spec.n_values = {4};
  spec.s_values = {1.0, 10.0};  // s = 1 on n=4 gives delta = 0 and a fallback stepsize
  spec.d = 6;
  spec.K = 5;  // too short for a 10-point fit
  spec.repeats = 2;
  std::size_t callbacks = 0;
  const GridResult result = run_grid(spec, 1, [&](const CellResult &, const RateReport &) {
    ++callbacks;
  });
  CHECK(callbacks == 2);
  REQUIRE(result.reports.size() == 2);
  for (const auto &r : result.reports) CHECK_FALSE(r.ok());
  CHECK(result.reports[0].gamma_fallback);

  spec.K = 200;
  const GridResult ok = run_grid(spec, 2);
  for (const auto &r : ok.reports) CHECK(r.ok());
}

TEST_CASE("rate comparison rows") {
  RateReport r;
  r.n = 25;
  r.s = 5;
  r.rho_theory = 0.99;
  r.fit.rho_emp = 0.9;
  const auto single = compare_rates({r});
  REQUIRE(single.size() == 1);
  CHECK(std::abs(single[0].margin - (0.99 - 0.9)) <= 1e-15);

  RateReport a = r, b = r, failed = r;
  a.n = 10;
  a.s = 100;
  b.n = 10;
  b.s = 5;
  failed.error = "boom";
  const auto rows = compare_rates({r, a, failed, b});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].n == 10);
  CHECK(rows[0].s == 5);
  CHECK(rows[1].s == 100);
  CHECK(rows[2].n == 25);
}

TEST_CASE("trajectory CSV round-trips exactly") {
  TrajectoryColumns cols;
  cols.mean_sq_dist = {100.0, 1.0 / 3.0, 1e-300, 0.1 + 0.2};
  cols.lyapunov = {100.0, 0.5, 1e-12, 7.0};
  std::stringstream buf;
  write_trajectory_csv(buf, cols);
  std::string header;
  std::getline(std::stringstream(buf.str()), header);
  CHECK(header == "k,mean_sq_dist,lyapunov");
  const TrajectoryColumns back = read_trajectory_csv(buf);
  CHECK(bit_equal(back.mean_sq_dist, cols.mean_sq_dist));
  CHECK(bit_equal(back.lyapunov, cols.lyapunov));
  CHECK(back.f_gap.empty());

  std::stringstream bad("k,value\n0,1\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), FormatError);
  std::stringstream skipped("k,mean_sq_dist\n0,1\n2,1\n");
  CHECK_THROWS_AS(read_trajectory_csv(skipped), FormatError);
  std::stringstream empty("");
  CHECK_THROWS_AS(read_trajectory_csv(empty), FormatError);
}

TEST_CASE("rates CSV header") {
  std::stringstream buf;
  write_rates_csv(buf, {});
  CHECK(buf.str() == "n,s,delta_sq,gamma,p,slope,rho_emp,rho_alt,r_squared,rho_theory,margin\n");
}

TEST_CASE("stored trajectories refit to the in-process report") {
  const CellResult cell = run_cell(small_config());
  const RateReport direct = make_report(cell);
  std::stringstream buf;
  write_trajectory_csv(buf, {cell.mean_sq_dist, {}, {}});
  const TrajectoryMeta meta = meta_from_json(meta_to_json(meta_from_cell(cell)));
  const RateReport stored = report_from_stored(meta, read_trajectory_csv(buf).mean_sq_dist);
  CHECK(stored.fit.rho_emp == direct.fit.rho_emp);
  CHECK(stored.rho_theory == direct.rho_theory);
  CHECK(meta.seed == cell.config.seed);
  CHECK_THROWS_AS(meta_from_json("{\"n\": 3}"), FormatError);
}

TEST_CASE("grid manifest JSON") {
  GridSpec spec = full_grid(77);
  spec.x0_radius = 3.5;
  const GridSpec back = grid_spec_from_json(grid_spec_to_json(spec));
  CHECK(back.scale == "full");
  CHECK(back.n_values == spec.n_values);
  CHECK(back.s_values == spec.s_values);
  CHECK(back.K == 1000);
  CHECK(back.repeats == 200);
  CHECK(back.base_seed == 77);
  CHECK(back.x0_radius == 3.5);

  const GridSpec custom = grid_spec_from_json(
      R"({"scale": "custom", "n_values": [3], "s_values": [2.5], "K": 40})", desk_grid(9));
  CHECK(custom.n_values == std::vector<std::size_t>{3});
  CHECK(custom.K == 40);
  CHECK(custom.repeats == 50);
  CHECK(custom.base_seed == 9);

  CHECK_THROWS_AS(grid_spec_from_json("{not json"), FormatError);
  CHECK_THROWS_AS(grid_spec_from_json(R"({"scale": "huge"})"), FormatError);
  CHECK_THROWS_AS(grid_spec_from_json(R"({"n_values": []})"), FormatError);
  CHECK_THROWS_AS(grid_spec_from_json(R"({"K": "many"})"), FormatError);
  CHECK_THROWS_AS(grid_spec_from_json("[1, 2]"), FormatError);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3u) == 3);
  ::setenv("PROXVR_THREADS", "5", 1);
  CHECK(resolve_threads() == 5);
  ::setenv("PROXVR_THREADS", "zero", 1);
  CHECK(resolve_threads() >= 1);
  ::unsetenv("PROXVR_THREADS");
}

TEST_CASE("atomic writes leave nothing behind on failure") {
  const auto path = std::filesystem::temp_directory_path() / "proxvr_atomic.csv";
  std::filesystem::remove(path);
  CHECK_THROWS(write_file_atomic(path, [](std::ostream &o) {
    o << "partial";
    throw std::runtime_error("fail");
  }));
  CHECK_FALSE(std::filesystem::exists(path));
  auto tmp = path;
  tmp += ".tmp";
  CHECK_FALSE(std::filesystem::exists(tmp));
  write_file_atomic(path, [](std::ostream &o) { o << "ok"; });
  CHECK(std::filesystem::exists(path));
  std::filesystem::remove(path);
}
