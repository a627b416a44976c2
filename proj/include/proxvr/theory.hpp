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

#ifndef PROXVR_THEORY_HPP_
#define PROXVR_THEORY_HPP_

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace proxvr {

/**
 * Constants of the Lyapunov contraction certificate for L-SVRP:
 * Lambda = ||x - x*||^2 + c ||w - x||^2 contracts by
 * max{1/(1 + mu gamma), 1 - r} when the three conditions checked by
 * theorem1_conditions() hold.
 */
struct TheoryParams {
  double delta = 0.0;  // sqrt of the Hessian dissimilarity
  double mu = 0.0;
  double p = 1.0;
  double gamma = 1.0;
  double c = 0.5;
  double xi = 0.5;
  double zeta = 1.0;
  double r = 0.25;

  void validate() const;
};

/// The standard choice c = 2p / ((3 - p)^2 (1 + mu gamma)), xi = 1/2,
/// r = p/4, zeta = p / (4 - 2p).
TheoryParams corollary_params(double delta, double mu, double gamma, double p);

struct RateBound {
  double contraction = 1.0;
  std::size_t iters_to_eps = 0;
};

/// gamma = (1/delta) * p/(3 - p) * sqrt((p + 1)/2). Throws ParameterError
/// for delta <= 0; callers pick a fallback (see harness::select_stepsize).
double theoretical_stepsize(double delta, double p);

/// [2 (3 - p)^2 / (p^2 (p + 1))] delta^2 gamma^2 <= 1 + mu gamma, with a
/// relative slack of 8 ulp so the closed-form stepsize (which hits the
/// boundary exactly in real arithmetic when mu = 0) is accepted.
bool stepsize_condition(double delta, double mu, double gamma, double p);

/// Left-hand side minus right-hand side of stepsize_condition.
double stepsize_condition_margin(double delta, double mu, double gamma, double p);

/// max{1/(1 + mu gamma), 1 - p/4}.
double theoretical_rate(double mu, double gamma, double p);

/// ceil((1 + (3 delta/mu + 4)/p) log(dist0_sq / eps)); 0 when eps >= dist0_sq.
std::size_t iteration_complexity(double delta, double mu, double p,
                                 double dist0_sq, double eps);

RateBound rate_bound(double delta, double mu, double gamma, double p,
                     double dist0_sq, double eps);

double lyapunov(const Eigen::VectorXd &x, const Eigen::VectorXd &w,
                const Eigen::VectorXd &x_star, double c);

struct Theorem1Verdict {
  bool c_bound = false;     // c <= 1/((1+mu g)(1 - p(1-xi))(1 + 1/zeta))
  bool stepsize = false;    // c p xi >= delta^2 / ((mu + 1/g)^2 (1 - c(1-p)))
  bool governance = false;  // 1 - r == (1 - p(1-xi))(1 + zeta), to 1e-12 rel.

  bool all() const noexcept { return c_bound && stepsize && governance; }
};

/// Evaluates the three conditions (the two inequalities with 8 ulp slack).
/// Throws ParameterError when
/// c (1 - p) >= 1, where the second condition's divisor changes sign.
Theorem1Verdict theorem1_conditions(const TheoryParams &params, double delta);

/// ||x0 - x*||^2 / (2 gamma K), the averaged-gap bound for mu = 0.
double convex_gap_bound(double dist0_sq, double gamma, std::size_t K);

}  // namespace proxvr

#endif  // PROXVR_THEORY_HPP_
