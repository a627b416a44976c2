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

#include "proxvr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "proxvr/error.hpp"
#include "proxvr/harness.hpp"
#include "proxvr/optimizers.hpp"
#include "proxvr/problems.hpp"
#include "proxvr/prox.hpp"
#include "proxvr/rng.hpp"
#include "proxvr/theory.hpp"

namespace proxvr {

namespace fs = std::filesystem;

namespace {

// Signals a usage problem found after parsing (conflicting flags, ...).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path sidecar_path(const fs::path &csv) {
  fs::path meta = csv;
  meta += ".json";
  return meta;
}

std::string cell_stem(std::size_t n, double s) {
  std::ostringstream name;
  name << "cell_n" << n << "_s" << std::setprecision(17) << s;
  return name.str();
}

// --- gen ------------------------------------------------------------------

struct GenArgs {
  std::size_t n = 0;
  long long d = 100;
  double s = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs &a, std::ostream &out) {
  if (a.d < 1) throw UsageError("--d must be >= 1");
  const QuadraticProblem problem = generate_quadratic(a.n, a.d, a.s, a.seed);
  fs::path tmp(a.out);
  tmp += ".tmp";
  try {
    save_problem(problem, tmp);
  } catch (...) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw;
  }
  fs::rename(tmp, a.out);
  out << "wrote problem n=" << problem.n() << " d=" << problem.d()
      << " s=" << a.s << " seed=" << a.seed << " to " << a.out << '\n';
  return kExitOk;
}

// --- run ------------------------------------------------------------------

struct RunArgs {
  std::string problem;
  std::string method = "lsvrp";
  std::optional<double> gamma;
  bool gamma_theory = false;
  std::optional<double> p;
  std::optional<std::size_t> m;
  std::size_t K = 1000;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  double x0_radius = 10.0;
  bool record_lyapunov = false;
  bool record_f_gap = false;
  std::string out;
  std::optional<unsigned> threads;
};

int cmd_run(const RunArgs &a, std::ostream &out, std::ostream &err) {
  const Method method = parse_method(a.method);
  if (a.gamma.has_value() == a.gamma_theory)
    throw UsageError("exactly one of --gamma and --gamma-theory is required");
  if (a.K < 1) throw UsageError("--K must be >= 1");
  if (a.repeats < 1) throw UsageError("--repeats must be >= 1");

  const QuadraticProblem problem = load_problem(a.problem);
  const ProblemStats stats = compute_stats(problem);
  const double p = a.p.value_or(1.0 / static_cast<double>(problem.n()));
  if (!(p > 0.0 && p <= 1.0)) throw UsageError("--p must lie in (0, 1]");

  MethodConfig config;
  config.method = method;
  config.p = p;
  config.m = a.m.value_or(problem.n());
  bool fallback = false;
  if (a.gamma) {
    config.gamma = *a.gamma;
  } else {
    const StepsizeChoice choice = select_stepsize(stats, p);
    config.gamma = choice.gamma;
    fallback = choice.fallback;
    if (fallback)
      err << "warning: delta = 0, using fallback stepsize p/(3 mu)\n";
  }
  try {
    config.validate();
  } catch (const ParameterError &e) {
    throw UsageError(e.what());
  }

  RecordOptions record;
  const double c = corollary_params(std::sqrt(stats.delta_sq), std::max(0.0, stats.mu),
                                    config.gamma, std::min(1.0, p))
                       .c;
  if (a.record_lyapunov) record.lyapunov_weight = c;
  record.f_gap = a.record_f_gap;

  const Eigen::VectorXd x0 = default_start(stats, a.x0_radius, a.seed);
  std::optional<QuadraticProxTable> table;
  if (method == Method::kSppm || method == Method::kLsvrp)
    table.emplace(problem, config.gamma);

  TrajectoryColumns mean;
  for (std::size_t r = 0; r < a.repeats; ++r) {
    const Trajectory t = run(problem, stats, config, x0, a.K, repeat_seed(a.seed, r),
                             record, std::nullopt, table ? &*table : nullptr);
    auto accumulate = [](std::vector<double> &acc, const std::vector<double> &v) {
      if (acc.empty()) acc.assign(v.size(), 0.0);
      for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
    };
    accumulate(mean.mean_sq_dist, t.sq_dist);
    if (!t.lyapunov.empty()) accumulate(mean.lyapunov, t.lyapunov);
    if (!t.f_gap.empty()) accumulate(mean.f_gap, t.f_gap);
  }
  const double count = static_cast<double>(a.repeats);
  for (auto *col : {&mean.mean_sq_dist, &mean.lyapunov, &mean.f_gap})
    for (double &v : *col) v /= count;
  for (double v : mean.mean_sq_dist)
    if (!std::isfinite(v)) throw NumericalError("run diverged (non-finite distance)");

  TrajectoryMeta meta;
  meta.method = std::string(method_name(method));
  meta.n = problem.n();
  meta.d = problem.d();
  meta.s = problem.origin().eigenvalue_ceiling;
  meta.delta_sq = stats.delta_sq;
  meta.mu = stats.mu;
  meta.gamma = config.gamma;
  meta.p = p;
  meta.gamma_fallback = fallback;
  meta.K = a.K;
  meta.repeats = a.repeats;
  meta.seed = a.seed;

  write_file_atomic(a.out, [&](std::ostream &o) { write_trajectory_csv(o, mean); });
  write_file_atomic(sidecar_path(a.out), [&](std::ostream &o) { o << meta_to_json(meta); });
  out << "method=" << method_name(method) << " gamma=" << std::setprecision(17)
      << config.gamma << " p=" << p << " delta_sq=" << stats.delta_sq
      << " final_mean_sq_dist=" << mean.mean_sq_dist.back() << '\n';
  return kExitOk;
}

// --- grid -----------------------------------------------------------------

struct GridArgs {
  std::string manifest;
  std::string out_dir;
  std::string scale = "desk";
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
};

int cmd_grid(const GridArgs &a, std::ostream &out, std::ostream &err) {
  GridSpec spec = a.scale == "full" ? full_grid(a.seed) : desk_grid(a.seed);
  if (!a.manifest.empty()) spec = grid_spec_from_json(read_text(a.manifest), spec);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir / "trajectories");
  write_file_atomic(dir / "manifest.json",
                    [&](std::ostream &o) { o << grid_spec_to_json(spec); });

  const unsigned threads = resolve_threads(a.threads);
  out << "grid scale=" << spec.scale << " cells=" << spec.cells().size()
      << " K=" << spec.K << " repeats=" << spec.repeats << " threads=" << threads
      << '\n';
  const GridResult result = run_grid(
      spec, threads, [&](const CellResult &cell, const RateReport &report) {
        if (!report.ok()) {
          err << "cell n=" << report.n << " s=" << report.s
              << " failed: " << report.error << '\n';
          if (cell.mean_sq_dist.empty()) return;
        }
        const fs::path csv = dir / "trajectories" / (cell_stem(report.n, report.s) + ".csv");
        TrajectoryColumns cols;
        cols.mean_sq_dist = cell.mean_sq_dist;
        write_file_atomic(csv, [&](std::ostream &o) { write_trajectory_csv(o, cols); });
        write_file_atomic(sidecar_path(csv),
                          [&](std::ostream &o) { o << meta_to_json(meta_from_cell(cell)); });
        if (!report.ok()) return;
        out << std::setprecision(6) << "  n=" << report.n << " s=" << report.s
            << " delta_sq=" << report.delta_sq << " rho_emp=" << report.fit.rho_emp
            << " rho_theory=" << report.rho_theory << " R2=" << report.fit.r_squared
            << '\n';
      });

  write_file_atomic(dir / "rates.csv",
                    [&](std::ostream &o) { write_rates_csv(o, result.reports); });
  write_file_atomic(dir / "comparison.csv", [&](std::ostream &o) {
    write_comparison_csv(o, compare_rates(result.reports));
  });

  std::size_t failed = 0, above = 0, looser = 0;
  for (const auto &r : result.reports) {
    if (!r.ok()) {
      ++failed;
      continue;
    }
    if (r.fit.rho_emp > r.rho_theory + 0.01) ++above;
    if (r.fit.rho_emp < r.rho_theory - 0.01) ++looser;
  }
  out << "cells above theory+0.01: " << above << ", cells better than theory-0.01: "
      << looser << "/" << result.reports.size() << ", failed: " << failed << '\n';
  return failed == 0 ? kExitOk : kExitNumerical;
}

// --- rates ----------------------------------------------------------------

struct RatesArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_rates(const RatesArgs &a, std::ostream &out) {
  std::vector<fs::path> csvs;
  for (const auto &in : a.inputs) {
    const fs::path path(in);
    if (fs::is_directory(path)) {
      fs::path root = fs::is_directory(path / "trajectories") ? path / "trajectories" : path;
      for (const auto &entry : fs::directory_iterator(root))
        if (entry.path().extension() == ".csv") csvs.push_back(entry.path());
    } else if (fs::exists(path)) {
      csvs.push_back(path);
    } else {
      throw FormatError("no such input: " + in);
    }
  }
  if (csvs.empty()) throw FormatError("no trajectory CSV files found");

  std::vector<RateReport> reports;
  for (const auto &csv : csvs) {
    if (!fs::exists(sidecar_path(csv)))
      throw FormatError("missing metadata sidecar " + sidecar_path(csv).string());
    const TrajectoryMeta meta = meta_from_json(read_text(sidecar_path(csv)));
    std::ifstream in(csv);
    if (!in) throw FormatError("cannot open " + csv.string());
    const TrajectoryColumns cols = read_trajectory_csv(in);
    reports.push_back(report_from_stored(meta, cols.mean_sq_dist));
  }
  std::stable_sort(reports.begin(), reports.end(), [](const auto &x, const auto &y) {
    return x.n != y.n ? x.n < y.n : x.s < y.s;
  });
  write_file_atomic(a.out, [&](std::ostream &o) { write_rates_csv(o, reports); });
  for (const auto &r : reports) {
    out << std::setprecision(17) << "n=" << r.n << " s=" << r.s;
    if (r.ok()) out << " rho_emp=" << r.fit.rho_emp << " rho_theory=" << r.rho_theory;
    else out << " error: " << r.error;
    out << '\n';
  }
  return kExitOk;
}

// --- verify ---------------------------------------------------------------

struct VerifyArgs {
  std::string problem;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
};

int cmd_verify(const VerifyArgs &a, std::ostream &out) {
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  const QuadraticProblem problem = load_problem(a.problem);
  const ProblemStats stats = compute_stats(problem);
  const double p = 1.0 / static_cast<double>(problem.n());
  const double delta = std::sqrt(stats.delta_sq);
  out << std::setprecision(17) << "n=" << problem.n() << " d=" << problem.d()
      << " delta_sq=" << stats.delta_sq << " mu=" << stats.mu
      << " l_max=" << stats.l_max << '\n';

  bool all_ok = true;
  auto report = [&](const std::string &name, bool ok, const std::string &detail) {
    out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    all_ok = all_ok && ok;
  };

  {
    const auto failures = check_invariants(problem);
    std::string detail = failures.empty() ? "all hold" : failures.front();
    if (failures.size() > 1) detail += " (+" + std::to_string(failures.size() - 1) + " more)";
    report("instance invariants", failures.empty(), detail);
  }
  {
    const double ratio = check_hessian_similarity(problem, a.trials, a.seed);
    const double slack = 1e-14 * stats.l_max * stats.l_max;
    std::ostringstream d;
    d << std::setprecision(17) << "max ratio " << ratio << " vs delta_sq " << stats.delta_sq;
    report("hessian similarity sampler", ratio <= stats.delta_sq * (1.0 + 1e-8) + slack,
           d.str());
    std::ostringstream b;
    b << "delta_sq " << stats.delta_sq << " <= mean L_i^2 " << stats.mean_l_sq;
    report("similarity vs smoothness", stats.delta_sq <= stats.mean_l_sq + 1e-8, b.str());
  }

  const StepsizeChoice step = select_stepsize(stats, p);
  {
    // Spread the pair budget over components, round-robin.
    double worst = 0.0;
    bool ok = true;
    double worst_resid = 0.0;
    Engine rng = make_engine(a.seed, 0xfeed);
    for (std::size_t i = 0; i < problem.n(); ++i) {
      const std::size_t pairs = std::max<std::size_t>(
          1, a.trials / problem.n() + (i < a.trials % problem.n() ? 1 : 0));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(problem.matrix(i),
                                                         Eigen::EigenvaluesOnly);
      const double mu_i = eig.eigenvalues().minCoeff();
      const ContractionCheck check =
          verify_prox_contraction(problem.matrix(i), problem.offset(i), step.gamma,
                                  std::max(0.0, mu_i), pairs, mix_seed(a.seed, i));
      worst = std::max(worst, check.max_ratio / check.bound);
      ok = ok && check.holds();

      const Eigen::VectorXd x = standard_normal_vector(rng, problem.d()) * 10.0;
      const Eigen::VectorXd y =
          prox_quadratic(problem.matrix(i), problem.offset(i), step.gamma, x);
      const double resid =
          prox_residual(problem.matrix(i), problem.offset(i), step.gamma, x, y);
      worst_resid = std::max(worst_resid, resid / (1.0 + x.norm()));
    }
    std::ostringstream d;
    d << std::setprecision(17) << "gamma " << step.gamma
      << ", max ratio / bound " << worst;
    report("prox contraction", ok, d.str());
    std::ostringstream r;
    r << "max relative residual " << worst_resid;
    report("prox optimality residual", worst_resid <= 1e-10, r.str());
  }
  {
    const double grid_delta = step.fallback ? 1.0 : delta;
    bool ok = true;
    std::size_t checked = 0;
    for (double pp : {0.01, 0.1, 0.5, 1.0}) {
      for (double mg : {0.0, 0.1, 1.0, 10.0}) {
        const double g = theoretical_stepsize(grid_delta, pp);
        const double mu = mg / g;
        const Theorem1Verdict v =
            theorem1_conditions(corollary_params(grid_delta, mu, g, pp), grid_delta);
        ok = ok && v.all() && stepsize_condition(grid_delta, mu, g, pp);
        ++checked;
      }
    }
    report("contraction conditions grid", ok,
           std::to_string(checked) + " (p, mu*gamma) points");
    const bool cond = stepsize_condition(delta, std::max(0.0, stats.mu), step.gamma, p);
    std::ostringstream d;
    d << std::setprecision(17) << "gamma " << step.gamma << " with p = 1/n"
      << (step.fallback ? " (fallback, delta = 0)" : "");
    report("stepsize condition", cond, d.str());
  }
  return all_ok ? kExitOk : kExitVerificationFailed;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"variance-reduced stochastic proximal point experiments", "proxvr"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GenArgs gen;
  auto *gen_cmd = app.add_subcommand("gen", "Generate a random quadratic finite-sum problem");
  gen_cmd->add_option("--n", gen.n, "Number of component functions")->required()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--d", gen.d, "Dimension")->capture_default_str();
  gen_cmd->add_option("--s", gen.s, "Eigenvalue ceiling (eigenvalues uniform on [1, s])")
      ->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output problem container")->required();

  RunArgs run_args;
  auto *run_cmd = app.add_subcommand("run", "Run one method and write its trajectory CSV");
  run_cmd->add_option("--problem", run_args.problem, "Problem container")->required();
  run_cmd->add_option("--method", run_args.method, "sgd | svrg | lsvrg | sppm | lsvrp")
      ->check(CLI::IsMember({"sgd", "svrg", "lsvrg", "sppm", "lsvrp"}))
      ->capture_default_str();
  auto *gamma_opt = run_cmd->add_option("--gamma", run_args.gamma, "Explicit stepsize");
  auto *theory_opt = run_cmd->add_flag("--gamma-theory", run_args.gamma_theory,
                                       "Use the theoretical stepsize for the realized delta");
  gamma_opt->excludes(theory_opt);
  run_cmd->add_option("--p", run_args.p, "Reference refresh probability (default 1/n)");
  run_cmd->add_option("--m", run_args.m, "SVRG inner-loop length (default n)");
  run_cmd->add_option("--K", run_args.K, "Iterations")->capture_default_str();
  run_cmd->add_option("--repeats", run_args.repeats, "Independent runs to average")
      ->capture_default_str();
  run_cmd->add_option("--seed", run_args.seed, "Base seed")->capture_default_str();
  run_cmd->add_option("--x0-radius", run_args.x0_radius, "Distance of x0 from x*")
      ->capture_default_str();
  run_cmd->add_flag("--record-lyapunov", run_args.record_lyapunov,
                    "Add the Lyapunov column (standard weight c)");
  run_cmd->add_flag("--record-f-gap", run_args.record_f_gap, "Add the f(x_k) - f* column");
  run_cmd->add_option("--out", run_args.out, "Output trajectory CSV")->required();
  run_cmd->add_option("--threads", run_args.threads, "Worker cap (unused by single runs)");

  GridArgs grid;
  auto *grid_cmd = app.add_subcommand("grid", "Run the (n, s) rate study");
  grid_cmd->add_option("--manifest", grid.manifest, "Grid manifest JSON")
      ->check(CLI::ExistingFile);
  grid_cmd->add_option("--out-dir", grid.out_dir, "Output directory")->required();
  grid_cmd->add_option("--scale", grid.scale, "desk (4 cells) or full (48 cells)")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  grid_cmd->add_option("--seed", grid.seed, "Base seed when no manifest is given")
      ->capture_default_str();
  grid_cmd->add_option("--threads", grid.threads, "Worker cap (default: PROXVR_THREADS)");

  RatesArgs rates;
  auto *rates_cmd = app.add_subcommand("rates", "Refit rates from stored trajectories");
  rates_cmd->add_option("--in", rates.inputs, "Trajectory CSVs or grid output directories")
      ->required();
  rates_cmd->add_option("--out", rates.out, "Output rates CSV")->required();

  VerifyArgs verify;
  auto *verify_cmd = app.add_subcommand("verify", "Check the instance against the theory");
  verify_cmd->add_option("--problem", verify.problem, "Problem container")->required();
  verify_cmd->add_option("--trials", verify.trials, "Random pairs per sampler")
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed, "Sampler seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, out);
    if (run_cmd->parsed()) return cmd_run(run_args, out, err);
    if (grid_cmd->parsed()) return cmd_grid(grid, out, err);
    if (rates_cmd->parsed()) return cmd_rates(rates, out);
    if (verify_cmd->parsed()) return cmd_verify(verify, out);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError &e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace proxvr
