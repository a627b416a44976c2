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

#ifndef PROXVR_OPTIMIZERS_HPP_
#define PROXVR_OPTIMIZERS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "proxvr/rng.hpp"

namespace proxvr {

class QuadraticProblem;
class QuadraticProxTable;
struct ProblemStats;

enum class Method { kSgd, kSvrg, kLsvrg, kSppm, kLsvrp };

std::string_view method_name(Method method) noexcept;
/// Accepts sgd, svrg, lsvrg, sppm, lsvrp (case-sensitive).
Method parse_method(std::string_view name);

struct MethodConfig {
  Method method = Method::kLsvrp;
  double gamma = 0.0;
  double p = 1.0;      // L-SVRG / L-SVRP reference refresh probability
  std::size_t m = 1;   // SVRG inner-loop length

  void validate() const;
};

/**
 * Iterate x_k, reference point w_k, counter k, the run's random stream and
 * the cached full gradient at w_k. The cache is refreshed exactly when w
 * changes; methods without a reference point leave it empty.
 */
struct OptimizerState {
  Eigen::VectorXd x;
  Eigen::VectorXd w;
  std::size_t k = 0;
  Engine rng;
  std::optional<Eigen::VectorXd> full_grad_at_w;

  OptimizerState(Eigen::VectorXd x0, Eigen::VectorXd w0, std::uint64_t seed);

  void refresh_reference_gradient(const QuadraticProblem &problem);
};

// What a single step drew from the stream.
struct StepRecord {
  std::size_t index = 0;
  bool reference_updated = false;
  Eigen::VectorXd anchor;  // prox anchor for SPPM / L-SVRP, empty otherwise
};

// Every step draws the component index first and, where the method has a
// reference coin, the coin second, each consuming one engine output.

StepRecord sgd_step(const QuadraticProblem &problem, OptimizerState &state,
                    double gamma);

/// Inner SVRG step; w becomes x_{k+1} when (k + 1) is a multiple of m.
StepRecord svrg_step(const QuadraticProblem &problem, OptimizerState &state,
                     double gamma, std::size_t m);

StepRecord lsvrg_step(const QuadraticProblem &problem, OptimizerState &state,
                      double gamma, double p);

/// x' = prox_{gamma f_i}(x). Uses `cache` when it was built for this gamma.
StepRecord sppm_step(const QuadraticProblem &problem, OptimizerState &state,
                     double gamma, const QuadraticProxTable *cache = nullptr);

/// x' = prox_{gamma f_i}(x + gamma (grad f_i(w) - grad f(w))), then
/// w' = x' with probability p.
StepRecord lsvrp_step(const QuadraticProblem &problem, OptimizerState &state,
                      double gamma, double p,
                      const QuadraticProxTable *cache = nullptr);

StepRecord step(const QuadraticProblem &problem, const MethodConfig &config,
                OptimizerState &state, const QuadraticProxTable *cache = nullptr);

struct RecordOptions {
  std::optional<double> lyapunov_weight;  // records Lambda_k when set
  bool f_gap = false;
};

struct Trajectory {
  std::vector<double> sq_dist;   // ||x_k - x*||^2, k = 0..K
  std::vector<double> lyapunov;  // empty unless requested
  std::vector<double> f_gap;     // f(x_k) - f*, empty unless requested
};

/// Runs K SVRG steps from (x0, w0) on the given stream.
std::vector<Eigen::VectorXd> svrg_run(const QuadraticProblem &problem,
                                      const Eigen::VectorXd &x0,
                                      const Eigen::VectorXd &w0, double gamma,
                                      std::size_t m, std::size_t K,
                                      std::uint64_t seed);

/**
 * Runs K steps of the configured method and records metrics at k = 0..K.
 * Deterministic given seed. `w0` defaults to `x0`. A prox table built for
 * config.gamma may be passed to skip per-run factorizations.
 */
Trajectory run(const QuadraticProblem &problem, const ProblemStats &stats,
               const MethodConfig &config, const Eigen::VectorXd &x0,
               std::size_t K, std::uint64_t seed,
               const RecordOptions &record = {},
               const std::optional<Eigen::VectorXd> &w0 = std::nullopt,
               const QuadraticProxTable *cache = nullptr);

}  // namespace proxvr

#endif  // PROXVR_OPTIMIZERS_HPP_
