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

#include "proxvr/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "proxvr/error.hpp"

namespace proxvr {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_probability(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("probability p must lie in (0, 1]");
}

void check_nonnegative(double v, const char *name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ParameterError(std::string(name) + " must be finite and >= 0");
}

void check_positive(double v, const char *name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ParameterError(std::string(name) + " must be finite and > 0");
}

}  // namespace

void TheoryParams::validate() const {
  check_nonnegative(delta, "delta");
  check_nonnegative(mu, "mu");
  check_probability(p);
  check_positive(gamma, "gamma");
  check_positive(c, "c");
  if (!(xi >= 0.0 && xi <= 1.0)) throw ParameterError("xi must lie in [0, 1]");
  check_positive(zeta, "zeta");
  check_positive(r, "r");
}

TheoryParams corollary_params(double delta, double mu, double gamma, double p) {
  TheoryParams params;
  params.delta = delta;
  params.mu = mu;
  params.gamma = gamma;
  params.p = p;
  params.c = 2.0 * p / ((3.0 - p) * (3.0 - p) * (1.0 + mu * gamma));
  params.xi = 0.5;
  params.r = p / 4.0;
  params.zeta = p / (4.0 - 2.0 * p);
  params.validate();
  return params;
}

double theoretical_stepsize(double delta, double p) {
  check_probability(p);
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ParameterError("theoretical stepsize undefined for delta <= 0");
  return (1.0 / delta) * (p / (3.0 - p)) * std::sqrt((p + 1.0) / 2.0);
}

double stepsize_condition_margin(double delta, double mu, double gamma, double p) {
  check_nonnegative(delta, "delta");
  check_nonnegative(mu, "mu");
  check_positive(gamma, "gamma");
  check_probability(p);
  const double factor = 2.0 * (3.0 - p) * (3.0 - p) / (p * p * (p + 1.0));
  return factor * delta * delta * gamma * gamma - (1.0 + mu * gamma);
}

bool stepsize_condition(double delta, double mu, double gamma, double p) {
  const double rhs = 1.0 + mu * gamma;
  return stepsize_condition_margin(delta, mu, gamma, p) <= 8.0 * kEps * rhs;
}

double theoretical_rate(double mu, double gamma, double p) {
  check_nonnegative(mu, "mu");
  check_positive(gamma, "gamma");
  check_probability(p);
  return std::max(1.0 / (1.0 + mu * gamma), 1.0 - p / 4.0);
}

std::size_t iteration_complexity(double delta, double mu, double p,
                                 double dist0_sq, double eps) {
  check_nonnegative(delta, "delta");
  check_positive(mu, "mu");
  check_probability(p);
  check_positive(eps, "eps");
  check_nonnegative(dist0_sq, "dist0_sq");
  if (eps >= dist0_sq) return 0;
  const double k = (1.0 + (3.0 * delta / mu + 4.0) / p) * std::log(dist0_sq / eps);
  return static_cast<std::size_t>(std::ceil(k));
}

RateBound rate_bound(double delta, double mu, double gamma, double p,
                     double dist0_sq, double eps) {
  return RateBound{theoretical_rate(mu, gamma, p),
                   iteration_complexity(delta, mu, p, dist0_sq, eps)};
}

double lyapunov(const Eigen::VectorXd &x, const Eigen::VectorXd &w,
                const Eigen::VectorXd &x_star, double c) {
  check_positive(c, "Lyapunov weight c");
  return (x - x_star).squaredNorm() + c * (w - x).squaredNorm();
}

Theorem1Verdict theorem1_conditions(const TheoryParams &params, double delta) {
  params.validate();
  check_nonnegative(delta, "delta");
  const double mg = params.mu * params.gamma;
  const double keep = 1.0 - params.p * (1.0 - params.xi);
  const double lag = 1.0 - params.c * (1.0 - params.p);
  if (!(lag > 0.0))
    throw ParameterError("theorem1_conditions requires c (1 - p) < 1");

  Theorem1Verdict verdict;
  // Both inequalities are tight for the standard recipe at p = 1, mu = 0,
  // so they are compared with the same 8 ulp slack as stepsize_condition.
  const double c_max = 1.0 / ((1.0 + mg) * keep * (1.0 + 1.0 / params.zeta));
  verdict.c_bound = params.c <= c_max * (1.0 + 8.0 * kEps);

  const double inv = params.mu + 1.0 / params.gamma;
  const double needed = delta * delta / (inv * inv * lag);
  verdict.stepsize = params.c * params.p * params.xi >= needed * (1.0 - 8.0 * kEps);

  const double lhs = 1.0 - params.r;
  const double rhs = keep * (1.0 + params.zeta);
  verdict.governance = std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs));
  return verdict;
}

double convex_gap_bound(double dist0_sq, double gamma, std::size_t K) {
  check_nonnegative(dist0_sq, "dist0_sq");
  check_positive(gamma, "gamma");
  if (K < 1) throw ParameterError("convex_gap_bound needs K >= 1");
  return dist0_sq / (2.0 * gamma * static_cast<double>(K));
}

}  // namespace proxvr
