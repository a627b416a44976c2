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

#include "proxvr/optimizers.hpp"

#include <cmath>
#include <string>

#include "proxvr/error.hpp"
#include "proxvr/problems.hpp"
#include "proxvr/prox.hpp"
#include "proxvr/theory.hpp"

namespace proxvr {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ParameterError("stepsize gamma must be finite and > 0");
}

void check_probability(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("probability p must lie in (0, 1]");
}

const Eigen::VectorXd &reference_gradient(const QuadraticProblem &problem,
                                          OptimizerState &state) {
  if (!state.full_grad_at_w) state.refresh_reference_gradient(problem);
  return *state.full_grad_at_w;
}

// grad f_i(x) - grad f_i(w) + grad f(w), grouped so that the correction
// vanishes exactly when n = 1.
Eigen::VectorXd variance_reduced_direction(const QuadraticProblem &problem,
                                           OptimizerState &state, std::size_t i) {
  const Eigen::VectorXd &full_w = reference_gradient(problem, state);
  Eigen::VectorXd correction = full_w - problem.grad_component(i, state.w);
  return problem.grad_component(i, state.x) + correction;
}

Eigen::VectorXd apply_prox(const QuadraticProblem &problem, std::size_t i,
                           double gamma, const Eigen::VectorXd &anchor,
                           const QuadraticProxTable *cache) {
  if (cache != nullptr && cache->matches(gamma)) return cache->apply(i, anchor);
  return prox_quadratic(problem.matrix(i), problem.offset(i), gamma, anchor);
}

void maybe_move_reference(const QuadraticProblem &problem, OptimizerState &state,
                          bool move, StepRecord &record) {
  record.reference_updated = move;
  if (move) {
    state.w = state.x;
    state.refresh_reference_gradient(problem);
  }
}

}  // namespace

std::string_view method_name(Method method) noexcept {
  switch (method) {
    case Method::kSgd: return "sgd";
    case Method::kSvrg: return "svrg";
    case Method::kLsvrg: return "lsvrg";
    case Method::kSppm: return "sppm";
    case Method::kLsvrp: return "lsvrp";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kSgd, Method::kSvrg, Method::kLsvrg, Method::kSppm,
                   Method::kLsvrp})
    if (method_name(m) == name) return m;
  throw ParameterError("unknown method '" + std::string(name) + "'");
}

void MethodConfig::validate() const {
  check_gamma(gamma);
  if (method == Method::kLsvrg || method == Method::kLsvrp) check_probability(p);
  if (method == Method::kSvrg && m < 1)
    throw ParameterError("SVRG inner-loop length m must be >= 1");
}

OptimizerState::OptimizerState(Eigen::VectorXd x0, Eigen::VectorXd w0,
                               std::uint64_t seed)
    : x(std::move(x0)), w(std::move(w0)), rng(seed) {
  if (x.size() != w.size())
    throw ParameterError("initial iterate and reference point differ in size");
}

void OptimizerState::refresh_reference_gradient(const QuadraticProblem &problem) {
  full_grad_at_w = problem.grad_full(w);
}

StepRecord sgd_step(const QuadraticProblem &problem, OptimizerState &state,
                    double gamma) {
  check_gamma(gamma);
  StepRecord record;
  record.index = draw_index(state.rng, problem.n());
  state.x -= gamma * problem.grad_component(record.index, state.x);
  ++state.k;
  return record;
}

StepRecord svrg_step(const QuadraticProblem &problem, OptimizerState &state,
                     double gamma, std::size_t m) {
  check_gamma(gamma);
  if (m < 1) throw ParameterError("SVRG inner-loop length m must be >= 1");
  StepRecord record;
  record.index = draw_index(state.rng, problem.n());
  state.x -= gamma * variance_reduced_direction(problem, state, record.index);
  ++state.k;
  maybe_move_reference(problem, state, state.k % m == 0, record);
  return record;
}

StepRecord lsvrg_step(const QuadraticProblem &problem, OptimizerState &state,
                      double gamma, double p) {
  check_gamma(gamma);
  check_probability(p);
  StepRecord record;
  record.index = draw_index(state.rng, problem.n());
  state.x -= gamma * variance_reduced_direction(problem, state, record.index);
  ++state.k;
  maybe_move_reference(problem, state, draw_coin(state.rng, p), record);
  return record;
}

StepRecord sppm_step(const QuadraticProblem &problem, OptimizerState &state,
                     double gamma, const QuadraticProxTable *cache) {
  check_gamma(gamma);
  StepRecord record;
  record.index = draw_index(state.rng, problem.n());
  record.anchor = state.x;
  state.x = apply_prox(problem, record.index, gamma, record.anchor, cache);
  ++state.k;
  return record;
}

StepRecord lsvrp_step(const QuadraticProblem &problem, OptimizerState &state,
                      double gamma, double p, const QuadraticProxTable *cache) {
  check_gamma(gamma);
  check_probability(p);
  StepRecord record;
  record.index = draw_index(state.rng, problem.n());
  const Eigen::VectorXd &full_w = reference_gradient(problem, state);
  const Eigen::VectorXd shift = problem.grad_component(record.index, state.w) - full_w;
  record.anchor = state.x + gamma * shift;
  state.x = apply_prox(problem, record.index, gamma, record.anchor, cache);
  ++state.k;
  maybe_move_reference(problem, state, draw_coin(state.rng, p), record);
  return record;
}

StepRecord step(const QuadraticProblem &problem, const MethodConfig &config,
                OptimizerState &state, const QuadraticProxTable *cache) {
  switch (config.method) {
    case Method::kSgd: return sgd_step(problem, state, config.gamma);
    case Method::kSvrg: return svrg_step(problem, state, config.gamma, config.m);
    case Method::kLsvrg: return lsvrg_step(problem, state, config.gamma, config.p);
    case Method::kSppm: return sppm_step(problem, state, config.gamma, cache);
    case Method::kLsvrp:
      return lsvrp_step(problem, state, config.gamma, config.p, cache);
  }
  throw ParameterError("unknown method");
}

std::vector<Eigen::VectorXd> svrg_run(const QuadraticProblem &problem,
                                      const Eigen::VectorXd &x0,
                                      const Eigen::VectorXd &w0, double gamma,
                                      std::size_t m, std::size_t K,
                                      std::uint64_t seed) {
  if (K < 1) throw ParameterError("svrg_run needs K >= 1");
  OptimizerState state(x0, w0, seed);
  state.refresh_reference_gradient(problem);
  std::vector<Eigen::VectorXd> iterates;
  iterates.reserve(K + 1);
  iterates.push_back(state.x);
  for (std::size_t k = 0; k < K; ++k) {
    svrg_step(problem, state, gamma, m);
    iterates.push_back(state.x);
  }
  return iterates;
}

Trajectory run(const QuadraticProblem &problem, const ProblemStats &stats,
               const MethodConfig &config, const Eigen::VectorXd &x0,
               std::size_t K, std::uint64_t seed, const RecordOptions &record,
               const std::optional<Eigen::VectorXd> &w0,
               const QuadraticProxTable *cache) {
  config.validate();
  if (K < 1) throw ParameterError("run needs K >= 1");
  if (x0.size() != problem.d()) throw ParameterError("x0 has wrong dimension");
  if (record.lyapunov_weight && !(*record.lyapunov_weight > 0.0))
    throw ParameterError("Lyapunov weight c must be > 0");

  OptimizerState state(x0, w0.value_or(x0), seed);
  if (config.method != Method::kSgd && config.method != Method::kSppm)
    state.refresh_reference_gradient(problem);

  Trajectory out;
  out.sq_dist.reserve(K + 1);
  auto observe = [&] {
    out.sq_dist.push_back((state.x - stats.x_star).squaredNorm());
    if (record.lyapunov_weight)
      out.lyapunov.push_back(
          lyapunov(state.x, state.w, stats.x_star, *record.lyapunov_weight));
    if (record.f_gap) out.f_gap.push_back(problem.value(state.x) - stats.f_star);
  };

  observe();
  for (std::size_t k = 0; k < K; ++k) {
    step(problem, config, state, cache);
    observe();
  }
  return out;
}

}  // namespace proxvr
