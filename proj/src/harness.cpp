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

#include "proxvr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "proxvr/error.hpp"
#include "proxvr/optimizers.hpp"
#include "proxvr/prox.hpp"
#include "proxvr/rng.hpp"
#include "proxvr/theory.hpp"

namespace proxvr {

namespace {

using nlohmann::json;

constexpr std::uint64_t kStartStream = 0x5374617274ULL;   // "Start"
constexpr std::uint64_t kRepeatDomain = 0x526570656174ULL; // "Repeat"

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)> &body) {
  std::vector<std::exception_ptr> errors(count);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

std::string fmt_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string &text) {
  std::string trimmed = text;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' '))
    trimmed.pop_back();
  double value = 0.0;
  const auto *begin = trimmed.data();
  const auto *end = begin + trimmed.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw FormatError("not a number: '" + text + "'");
  return value;
}

}  // namespace

void RunConfig::validate() const {
  if (n < 1) throw ParameterError("run config: n must be >= 1");
  if (d < 1) throw ParameterError("run config: d must be >= 1");
  if (!(s >= 1.0)) throw ParameterError("run config: s must be >= 1");
  const double prob = probability();
  if (!(prob > 0.0 && prob <= 1.0))
    throw ParameterError("run config: p must lie in (0, 1]");
  if (K < 2) throw ParameterError("run config: K must be >= 2");
  if (repeats < 1) throw ParameterError("run config: repeats must be >= 1");
  if (gamma && !(*gamma > 0.0)) throw ParameterError("run config: gamma must be > 0");
  if (!(x0_radius >= 0.0)) throw ParameterError("run config: x0 radius must be >= 0");
}

StepsizeChoice select_stepsize(const ProblemStats &stats, double p) {
  // Below this level delta_sq is roundoff from forming A_i - mean(A).
  const double eps = std::numeric_limits<double>::epsilon();
  const double noise = 1e6 * eps * eps * stats.l_max * stats.l_max;
  if (stats.delta_sq > noise)
    return {theoretical_stepsize(std::sqrt(stats.delta_sq), p), false};
  if (!(stats.mu > 0.0))
    throw ParameterError("no stepsize: delta = 0 and mu = 0");
  return {p / (3.0 * stats.mu), true};
}

Eigen::VectorXd default_start(const ProblemStats &stats, double radius,
                              std::uint64_t seed) {
  Engine rng = make_engine(seed, kStartStream);
  Eigen::VectorXd u;
  do {
    u = standard_normal_vector(rng, stats.x_star.size());
  } while (u.norm() == 0.0);
  return stats.x_star + radius * u / u.norm();
}

std::uint64_t repeat_seed(std::uint64_t cell_seed, std::size_t repeat) {
  return mix_seed(mix_seed(cell_seed, kRepeatDomain), repeat);
}

unsigned resolve_threads(std::optional<unsigned> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char *env = std::getenv("PROXVR_THREADS")) {
    unsigned value = 0;
    const std::string text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && ptr == text.data() + text.size() && value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CellResult run_cell(const RunConfig &config, unsigned threads) {
  config.validate();
  const QuadraticProblem problem =
      generate_quadratic(config.n, config.d, config.s, config.seed);
  const ProblemStats stats = compute_stats(problem);
  return run_cell(problem, stats, config, threads);
}

CellResult run_cell(const QuadraticProblem &problem, const ProblemStats &stats,
                    const RunConfig &config, unsigned threads,
                    const std::optional<Eigen::VectorXd> &x0) {
  CellResult cell;
  cell.config = config;
  cell.config.n = problem.n();
  cell.config.d = problem.d();
  cell.config.validate();
  cell.stats = stats;
  cell.p = cell.config.probability();
  if (config.gamma) {
    cell.gamma = *config.gamma;
  } else {
    const StepsizeChoice choice = select_stepsize(stats, cell.p);
    cell.gamma = choice.gamma;
    cell.gamma_fallback = choice.fallback;
  }

  const Eigen::VectorXd start =
      x0 ? *x0 : default_start(stats, config.x0_radius, config.seed);
  const QuadraticProxTable table(problem, cell.gamma);
  const MethodConfig method{Method::kLsvrp, cell.gamma, cell.p, 1};

  const std::size_t repeats = config.repeats;
  const std::size_t points = config.K + 1;
  std::vector<std::vector<double>> runs(repeats);
  parallel_for(repeats, threads, [&](std::size_t r) {
    Trajectory t = run(problem, stats, method, start, config.K,
                       repeat_seed(config.seed, r), {}, std::nullopt, &table);
    for (std::size_t k = 0; k < t.sq_dist.size(); ++k) {
      if (!std::isfinite(t.sq_dist[k])) {
        std::ostringstream msg;
        msg << "repeat " << r << " of cell (n=" << problem.n() << ", s="
            << config.s << ") produced a non-finite distance at k=" << k
            << " (gamma=" << cell.gamma << ", p=" << cell.p << ")";
        throw NumericalError(msg.str());
      }
    }
    runs[r] = std::move(t.sq_dist);
  });

  cell.mean_sq_dist.assign(points, 0.0);
  cell.std_error.assign(points, 0.0);
  const double count = static_cast<double>(repeats);
  for (std::size_t k = 0; k < points; ++k) {
    double sum = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) sum += runs[r][k];
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      const double dev = runs[r][k] - mean;
      ss += dev * dev;
    }
    cell.mean_sq_dist[k] = mean;
    cell.std_error[k] = repeats > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
  }
  return cell;
}

double default_floor(const std::vector<double> &trajectory) {
  const double start = trajectory.empty() ? 0.0 : trajectory.front();
  return std::max(1e-20, 1e-12 * start);
}

RateFit fit_rate(const std::vector<double> &trajectory, std::optional<double> floor) {
  RateFit fit;
  fit.floor = floor.value_or(default_floor(trajectory));
  if (!(fit.floor > 0.0)) throw ParameterError("fit_rate: floor must be > 0");

  std::size_t end = 0;
  while (end < trajectory.size() && std::isfinite(trajectory[end]) &&
         trajectory[end] > fit.floor)
    ++end;
  if (end < 10) {
    std::ostringstream msg;
    msg << "fit_rate: only " << end << " points above floor " << fit.floor
        << " (need 10)";
    throw InsufficientDecayError(msg.str());
  }
  fit.first = 0;
  fit.last = end - 1;

  const double count = static_cast<double>(end);
  double mean_k = 0.0, mean_y = 0.0;
  for (std::size_t k = 0; k < end; ++k) {
    mean_k += static_cast<double>(k);
    mean_y += std::log(trajectory[k]);
  }
  mean_k /= count;
  mean_y /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < end; ++k) {
    const double dk = static_cast<double>(k) - mean_k;
    const double dy = std::log(trajectory[k]) - mean_y;
    sxx += dk * dk;
    sxy += dk * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_k;
  fit.rho_emp = std::exp(fit.slope);
  fit.rho_alt = 1.0 - std::abs(fit.slope);

  double ss_res = 0.0;
  for (std::size_t k = 0; k < end; ++k) {
    const double e = std::log(trajectory[k]) -
                     (fit.intercept + fit.slope * static_cast<double>(k));
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

RateReport make_report(const CellResult &cell) {
  RateReport report;
  report.n = cell.config.n;
  report.s = cell.config.s;
  report.delta_sq = cell.stats.delta_sq;
  report.mu = cell.stats.mu;
  report.gamma = cell.gamma;
  report.p = cell.p;
  report.gamma_fallback = cell.gamma_fallback;
  report.rho_theory = theoretical_rate(std::max(0.0, cell.stats.mu), cell.gamma, cell.p);
  try {
    report.fit = fit_rate(cell.mean_sq_dist);
  } catch (const InsufficientDecayError &e) {
    report.error = e.what();
  }
  return report;
}

std::vector<RunConfig> GridSpec::cells() const {
  std::vector<RunConfig> out;
  for (std::size_t n : n_values) {
    for (double s : s_values) {
      RunConfig cfg;
      cfg.n = n;
      cfg.d = d;
      cfg.s = s;
      cfg.K = K;
      cfg.repeats = repeats;
      cfg.seed = cell_seed(base_seed, n, s);
      cfg.x0_radius = x0_radius;
      out.push_back(cfg);
    }
  }
  return out;
}

GridSpec desk_grid(std::uint64_t base_seed) {
  GridSpec spec;
  spec.scale = "desk";
  spec.n_values = {10, 25};
  spec.s_values = {5, 100};
  spec.K = 500;
  spec.repeats = 50;
  spec.base_seed = base_seed;
  return spec;
}

GridSpec full_grid(std::uint64_t base_seed) {
  GridSpec spec;
  spec.scale = "full";
  spec.n_values = {10, 25, 50, 100, 250, 500};
  spec.s_values = {5, 10, 50, 100, 500, 1000, 5000, 10000};
  spec.K = 1000;
  spec.repeats = 200;
  spec.base_seed = base_seed;
  return spec;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t n, double s) {
  return mix_seed(mix_seed(base_seed, n), std::bit_cast<std::uint64_t>(s));
}

GridResult run_grid(const GridSpec &spec, unsigned threads,
                    const CellCallback &on_cell) {
  GridResult result;
  for (const RunConfig &cfg : spec.cells()) {
    RateReport report;
    CellResult cell;
    try {
      cell = run_cell(cfg, threads);
      report = make_report(cell);
    } catch (const std::exception &e) {
      report = RateReport{};
      report.n = cfg.n;
      report.s = cfg.s;
      report.error = e.what();
      cell = CellResult{};
      cell.config = cfg;
    }
    if (on_cell) on_cell(cell, report);
    result.reports.push_back(std::move(report));
    result.cells.push_back(std::move(cell));
  }
  return result;
}

std::vector<ComparisonRow> compare_rates(const std::vector<RateReport> &reports) {
  std::vector<ComparisonRow> rows;
  for (const auto &r : reports) {
    if (!r.ok()) continue;
    rows.push_back({r.n, r.s, r.delta_sq, r.gamma, r.fit.rho_emp, r.rho_theory,
                    r.margin()});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) {
    return a.n != b.n ? a.n < b.n : a.s < b.s;
  });
  return rows;
}

void write_trajectory_csv(std::ostream &out, const TrajectoryColumns &columns) {
  const std::size_t rows = columns.mean_sq_dist.size();
  const bool lyap = !columns.lyapunov.empty();
  const bool gap = !columns.f_gap.empty();
  if ((lyap && columns.lyapunov.size() != rows) || (gap && columns.f_gap.size() != rows))
    throw ParameterError("trajectory columns differ in length");
  out << "k,mean_sq_dist";
  if (lyap) out << ",lyapunov";
  if (gap) out << ",f_gap";
  out << '\n';
  for (std::size_t k = 0; k < rows; ++k) {
    out << k << ',' << fmt_double(columns.mean_sq_dist[k]);
    if (lyap) out << ',' << fmt_double(columns.lyapunov[k]);
    if (gap) out << ',' << fmt_double(columns.f_gap[k]);
    out << '\n';
  }
}

TrajectoryColumns read_trajectory_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "k" || header[1] != "mean_sq_dist")
    throw FormatError("trajectory CSV header must start with k,mean_sq_dist");
  int lyap_col = -1, gap_col = -1;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "lyapunov") lyap_col = static_cast<int>(c);
    else if (header[c] == "f_gap") gap_col = static_cast<int>(c);
    else throw FormatError("unknown trajectory column '" + header[c] + "'");
  }

  TrajectoryColumns cols;
  std::size_t expected_k = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw FormatError("trajectory row " + std::to_string(expected_k) +
                        " has the wrong number of fields");
    if (parse_double(fields[0]) != static_cast<double>(expected_k))
      throw FormatError("trajectory rows must be numbered 0, 1, 2, ...");
    cols.mean_sq_dist.push_back(parse_double(fields[1]));
    if (lyap_col >= 0) cols.lyapunov.push_back(parse_double(fields[lyap_col]));
    if (gap_col >= 0) cols.f_gap.push_back(parse_double(fields[gap_col]));
    ++expected_k;
  }
  return cols;
}

void write_rates_csv(std::ostream &out, const std::vector<RateReport> &reports) {
  out << "n,s,delta_sq,gamma,p,slope,rho_emp,rho_alt,r_squared,rho_theory,margin\n";
  for (const auto &r : reports) {
    const double nan = std::nan("");
    const RateFit &f = r.fit;
    out << r.n << ',' << fmt_double(r.s) << ',' << fmt_double(r.delta_sq) << ','
        << fmt_double(r.gamma) << ',' << fmt_double(r.p) << ','
        << fmt_double(r.ok() ? f.slope : nan) << ','
        << fmt_double(r.ok() ? f.rho_emp : nan) << ','
        << fmt_double(r.ok() ? f.rho_alt : nan) << ','
        << fmt_double(r.ok() ? f.r_squared : nan) << ',' << fmt_double(r.rho_theory)
        << ',' << fmt_double(r.ok() ? r.margin() : nan) << '\n';
  }
}

void write_comparison_csv(std::ostream &out, const std::vector<ComparisonRow> &rows) {
  out << "n,s,delta_sq,gamma,rho_emp,rho_theory,margin\n";
  for (const auto &r : rows)
    out << r.n << ',' << fmt_double(r.s) << ',' << fmt_double(r.delta_sq) << ','
        << fmt_double(r.gamma) << ',' << fmt_double(r.rho_emp) << ','
        << fmt_double(r.rho_theory) << ',' << fmt_double(r.margin) << '\n';
}

std::string meta_to_json(const TrajectoryMeta &meta) {
  json j = {{"method", meta.method},     {"n", meta.n},
            {"d", meta.d},               {"s", meta.s},
            {"delta_sq", meta.delta_sq}, {"mu", meta.mu},
            {"gamma", meta.gamma},       {"p", meta.p},
            {"gamma_fallback", meta.gamma_fallback},
            {"K", meta.K},               {"repeats", meta.repeats},
            {"seed", meta.seed}};
  return j.dump(2) + "\n";
}

TrajectoryMeta meta_from_json(const std::string &text) {
  try {
    const json j = json::parse(text);
    TrajectoryMeta meta;
    meta.method = j.at("method").get<std::string>();
    meta.n = j.at("n").get<std::size_t>();
    meta.d = j.at("d").get<Eigen::Index>();
    meta.s = j.at("s").get<double>();
    meta.delta_sq = j.at("delta_sq").get<double>();
    meta.mu = j.at("mu").get<double>();
    meta.gamma = j.at("gamma").get<double>();
    meta.p = j.at("p").get<double>();
    meta.gamma_fallback = j.value("gamma_fallback", false);
    meta.K = j.at("K").get<std::size_t>();
    meta.repeats = j.at("repeats").get<std::size_t>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    return meta;
  } catch (const json::exception &e) {
    throw FormatError(std::string("malformed trajectory metadata: ") + e.what());
  }
}

TrajectoryMeta meta_from_cell(const CellResult &cell) {
  TrajectoryMeta meta;
  meta.n = cell.config.n;
  meta.d = cell.config.d;
  meta.s = cell.config.s;
  meta.delta_sq = cell.stats.delta_sq;
  meta.mu = cell.stats.mu;
  meta.gamma = cell.gamma;
  meta.p = cell.p;
  meta.gamma_fallback = cell.gamma_fallback;
  meta.K = cell.config.K;
  meta.repeats = cell.config.repeats;
  meta.seed = cell.config.seed;
  return meta;
}

RateReport report_from_stored(const TrajectoryMeta &meta,
                              const std::vector<double> &mean_sq_dist) {
  RateReport report;
  report.n = meta.n;
  report.s = meta.s;
  report.delta_sq = meta.delta_sq;
  report.mu = meta.mu;
  report.gamma = meta.gamma;
  report.p = meta.p;
  report.gamma_fallback = meta.gamma_fallback;
  report.rho_theory = theoretical_rate(std::max(0.0, meta.mu), meta.gamma, meta.p);
  try {
    report.fit = fit_rate(mean_sq_dist);
  } catch (const InsufficientDecayError &e) {
    report.error = e.what();
  }
  return report;
}

std::string grid_spec_to_json(const GridSpec &spec) {
  json j = {{"scale", spec.scale},
            {"n_values", spec.n_values},
            {"s_values", spec.s_values},
            {"d", spec.d},
            {"K", spec.K},
            {"repeats", spec.repeats},
            {"p", "1/n"},
            {"gamma", "theoretical"},
            {"base_seed", spec.base_seed},
            {"x0", {{"kind", "x_star + radius * unit Gaussian direction"},
                    {"radius", spec.x0_radius}}},
            {"w0", "x0"},
            {"cells", spec.n_values.size() * spec.s_values.size()}};
  return j.dump(2) + "\n";
}

GridSpec grid_spec_from_json(const std::string &text, const GridSpec &defaults) {
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw FormatError("grid manifest must be a JSON object");
    GridSpec spec = defaults;
    if (j.contains("scale")) {
      const std::string scale = j.at("scale").get<std::string>();
      if (scale == "full") spec = full_grid(defaults.base_seed);
      else if (scale == "desk") spec = desk_grid(defaults.base_seed);
      else if (scale != "custom")
        throw FormatError("grid manifest: unknown scale '" + scale + "'");
      spec.scale = scale;
    }
    if (j.contains("n_values")) spec.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    if (j.contains("s_values")) spec.s_values = j.at("s_values").get<std::vector<double>>();
    spec.d = j.value("d", spec.d);
    spec.K = j.value("K", spec.K);
    spec.repeats = j.value("repeats", spec.repeats);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    if (j.contains("x0") && j.at("x0").is_object())
      spec.x0_radius = j.at("x0").value("radius", spec.x0_radius);
    if (spec.n_values.empty() || spec.s_values.empty())
      throw FormatError("grid manifest: n_values and s_values must be non-empty");
    for (auto n : spec.n_values)
      if (n < 1) throw FormatError("grid manifest: n values must be >= 1");
    for (auto s : spec.s_values)
      if (!(s >= 1.0)) throw FormatError("grid manifest: s values must be >= 1");
    if (spec.d < 1 || spec.K < 2 || spec.repeats < 1)
      throw FormatError("grid manifest: need d >= 1, K >= 2, repeats >= 1");
    return spec;
  } catch (const json::exception &e) {
    throw FormatError(std::string("malformed grid manifest: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path &path,
                       const std::function<void(std::ostream &)> &writer) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    try {
      writer(out);
      out.flush();
      if (!out) throw FormatError("write failed for " + path.string());
    } catch (...) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw;
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace proxvr
