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

#ifndef PROXVR_HARNESS_HPP_
#define PROXVR_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proxvr/problems.hpp"

namespace proxvr {

/// One experiment cell: an instance drawn from (n, d, s, seed) and
/// `repeats` independent L-SVRP runs of K steps on it.
struct RunConfig {
  std::size_t n = 10;
  Eigen::Index d = 100;
  double s = 5.0;
  std::optional<double> p;      // defaults to 1/n
  std::size_t K = 1000;
  std::size_t repeats = 200;
  std::uint64_t seed = 0;
  std::optional<double> gamma;  // explicit stepsize; theoretical when empty
  double x0_radius = 10.0;      // ||x0 - x*||

  double probability() const { return p.value_or(1.0 / static_cast<double>(n)); }
  void validate() const;
};

struct StepsizeChoice {
  double gamma = 0.0;
  bool fallback = false;  // delta == 0: gamma = p / (3 mu) was used
};

/// Theoretical stepsize from the realized delta, or p / (3 mu) when the
/// instance has no Hessian dissimilarity.
StepsizeChoice select_stepsize(const ProblemStats &stats, double p);

/// x* + radius * u / ||u|| with u standard normal from the seed's start stream.
Eigen::VectorXd default_start(const ProblemStats &stats, double radius,
                              std::uint64_t seed);

/// Seed of repeat r in a cell; a mixing hash, so order-free.
std::uint64_t repeat_seed(std::uint64_t cell_seed, std::size_t repeat);

/// Worker count: explicit value, else PROXVR_THREADS, else hardware.
unsigned resolve_threads(std::optional<unsigned> requested = std::nullopt);

struct CellResult {
  RunConfig config;
  ProblemStats stats;
  double gamma = 0.0;
  double p = 0.0;
  bool gamma_fallback = false;
  std::vector<double> mean_sq_dist;  // k = 0..K, averaged over repeats
  std::vector<double> std_error;     // standard error of each mean
};

/**
 * Generates the cell's problem and averages ||x_k - x*||^2 over the
 * repeats. Repeats run on up to `threads` workers; the reduction is
 * index-ordered so the output is bitwise independent of the thread count.
 * Throws NumericalError if any repeat produces a non-finite value.
 */
CellResult run_cell(const RunConfig &config, unsigned threads = 1);

/// Same, on a prebuilt instance. `x0` overrides the default start.
CellResult run_cell(const QuadraticProblem &problem, const ProblemStats &stats,
                    const RunConfig &config, unsigned threads = 1,
                    const std::optional<Eigen::VectorXd> &x0 = std::nullopt);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rho_emp = 1.0;   // exp(slope)
  double rho_alt = 1.0;   // 1 - |slope|
  double r_squared = 1.0;
  double floor = 0.0;
  std::size_t first = 0;  // fit window [first, last]
  std::size_t last = 0;
};

/// max(1e-20, 1e-12 * trajectory[0]).
double default_floor(const std::vector<double> &trajectory);

/**
 * Ordinary least squares of ln(value) on k over the pre-floor prefix
 * (k = 0 up to the first value at or below `floor`). Throws
 * InsufficientDecayError with fewer than 10 usable points.
 */
RateFit fit_rate(const std::vector<double> &trajectory,
                 std::optional<double> floor = std::nullopt);

struct RateReport {
  std::size_t n = 0;
  double s = 0.0;
  double delta_sq = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double p = 0.0;
  bool gamma_fallback = false;
  RateFit fit;
  double rho_theory = 1.0;
  std::string error;  // non-empty when the cell failed

  bool ok() const noexcept { return error.empty(); }
  double margin() const noexcept { return rho_theory - fit.rho_emp; }
};

RateReport make_report(const CellResult &cell);

struct GridSpec {
  std::string scale = "desk";
  std::vector<std::size_t> n_values;
  std::vector<double> s_values;
  Eigen::Index d = 100;
  std::size_t K = 500;
  std::size_t repeats = 50;
  std::uint64_t base_seed = 0;
  double x0_radius = 10.0;

  std::vector<RunConfig> cells() const;
};

/// n in {10, 25}, s in {5, 100}, d = 100, K = 500, 50 repeats.
GridSpec desk_grid(std::uint64_t base_seed);
/// The 48-cell study: n in {10, 25, 50, 100, 250, 500},
/// s in {5, 10, 50, 100, 500, 1000, 5000, 10000}, K = 1000, 200 repeats.
GridSpec full_grid(std::uint64_t base_seed);

/// Cell seed derived from (base, n, s) only.
std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t n, double s);

struct GridResult {
  std::vector<RateReport> reports;
  std::vector<CellResult> cells;  // parallel to reports; empty trajectory on failure
};

using CellCallback = std::function<void(const CellResult &, const RateReport &)>;

/// Runs every cell in order. A failing cell is recorded in its report and
/// the grid continues.
GridResult run_grid(const GridSpec &spec, unsigned threads = 1,
                    const CellCallback &on_cell = nullptr);

struct ComparisonRow {
  std::size_t n = 0;
  double s = 0.0;
  double delta_sq = 0.0;
  double gamma = 0.0;
  double rho_emp = 0.0;
  double rho_theory = 0.0;
  double margin = 0.0;
};

/// One row per successful report, sorted by (n, s).
std::vector<ComparisonRow> compare_rates(const std::vector<RateReport> &reports);

// --- file formats ---------------------------------------------------------

struct TrajectoryColumns {
  std::vector<double> mean_sq_dist;
  std::vector<double> lyapunov;
  std::vector<double> f_gap;
};

/// Header `k,mean_sq_dist[,lyapunov][,f_gap]`, 17 significant digits.
void write_trajectory_csv(std::ostream &out, const TrajectoryColumns &columns);
TrajectoryColumns read_trajectory_csv(std::istream &in);

/// Header `n,s,delta_sq,gamma,p,slope,rho_emp,rho_alt,r_squared,rho_theory,margin`.
void write_rates_csv(std::ostream &out, const std::vector<RateReport> &reports);
void write_comparison_csv(std::ostream &out, const std::vector<ComparisonRow> &rows);

// Sidecar written next to each trajectory CSV so rates can be refit later.
struct TrajectoryMeta {
  std::string method = "lsvrp";
  std::size_t n = 0;
  Eigen::Index d = 0;
  double s = 0.0;
  double delta_sq = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double p = 0.0;
  bool gamma_fallback = false;
  std::size_t K = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
};

std::string meta_to_json(const TrajectoryMeta &meta);
TrajectoryMeta meta_from_json(const std::string &text);
TrajectoryMeta meta_from_cell(const CellResult &cell);

/// Rebuilds a report from a stored trajectory and its sidecar.
RateReport report_from_stored(const TrajectoryMeta &meta,
                              const std::vector<double> &mean_sq_dist);

std::string grid_spec_to_json(const GridSpec &spec);
/// Fields present in the manifest override `defaults`; a "scale" key of
/// desk or full first resets to that preset. Throws FormatError on
/// malformed input.
GridSpec grid_spec_from_json(const std::string &text,
                             const GridSpec &defaults = desk_grid(0));

/// Writes via a temporary sibling and renames, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path &path,
                       const std::function<void(std::ostream &)> &writer);

}  // namespace proxvr

#endif  // PROXVR_HARNESS_HPP_
