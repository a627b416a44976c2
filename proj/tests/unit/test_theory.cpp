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
#include <random>

#include "doctest.h"
#include "proxvr/error.hpp"
#include "proxvr/theory.hpp"

using namespace proxvr;

TEST_CASE("theoretical stepsize closed form") {
  CHECK(theoretical_stepsize(1.0, 1.0) == 0.5);
  // (0.5 / 2.5) * sqrt(0.75)
  CHECK(theoretical_stepsize(1.0, 0.5) == doctest::Approx(0.17320508075688773).epsilon(1e-15));
  for (double p : {0.01, 0.3, 1.0}) {
    for (double delta : {0.1, 1.0, 37.5}) {
      CHECK(theoretical_stepsize(10.0 * delta, p) ==
            doctest::Approx(theoretical_stepsize(delta, p) / 10.0).epsilon(1e-15));
    }
  }
  CHECK_THROWS_AS(theoretical_stepsize(0.0, 0.5), ParameterError);
  CHECK_THROWS_AS(theoretical_stepsize(1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(theoretical_stepsize(1.0, 1.5), ParameterError);
}

TEST_CASE("stepsize condition predicate") {
  for (double gamma : {1e-6, 1.0, 1e6}) CHECK(stepsize_condition(0.0, 0.0, gamma, 0.3));
  // LHS = [2 * 4 / 2] * 0.25 = 1 <= 1.
  CHECK(stepsize_condition(1.0, 0.0, 0.5, 1.0));
  CHECK(stepsize_condition_margin(1.0, 0.0, 0.5, 1.0) == 0.0);
  // LHS = 4 * 0.2601 > 1.
  CHECK_FALSE(stepsize_condition(1.0, 0.0, 0.51, 1.0));
}

TEST_CASE("theoretical stepsize always satisfies the stepsize condition") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> log_delta(-4.0, 4.0), unit(0.0, 1.0);
  for (int t = 0; t < 5000; ++t) {
    const double delta = std::pow(10.0, log_delta(rng));
    const double p = std::max(1e-4, unit(rng));
    const double mu = t % 4 == 0 ? 0.0 : std::pow(10.0, log_delta(rng));
    const double gamma = theoretical_stepsize(delta, p);
    INFO("delta " << delta << " p " << p << " mu " << mu);
    CHECK(stepsize_condition(delta, mu, gamma, p));
  }
}

TEST_CASE("contraction factor") {
  CHECK(theoretical_rate(1.0, 0.5, 1.0) == 0.75);
  CHECK(theoretical_rate(0.0, 3.0, 0.5) == 1.0);
  // Tie point p = 4 mu gamma / (1 + mu gamma).
  const double mu = 2.0, gamma = 0.1;
  const double p = 4.0 * mu * gamma / (1.0 + mu * gamma);
  CHECK(1.0 / (1.0 + mu * gamma) == doctest::Approx(1.0 - p / 4.0).epsilon(1e-15));
  CHECK(theoretical_rate(mu, gamma, p) == doctest::Approx(1.0 / 1.2).epsilon(1e-15));
}

TEST_CASE("contraction factor is non-increasing in gamma and p") {
  for (double mu : {0.0, 0.1, 1.0, 10.0}) {
    double prev = 2.0;
    for (double gamma = 1e-4; gamma < 1e3; gamma *= 1.7) {
      const double r = theoretical_rate(mu, gamma, 0.2);
      CHECK(r <= prev);
      prev = r;
    }
    prev = 2.0;
    for (double p = 0.01; p <= 1.0; p += 0.01) {
      const double r = theoretical_rate(mu, 0.05, p);
      CHECK(r <= prev);
      prev = r;
    }
  }
}

TEST_CASE("iteration complexity") {
  CHECK(iteration_complexity(1.0, 1.0, 1.0, std::exp(1.0), 1.0) == 8);
  CHECK(iteration_complexity(3.0, 1.0, 0.5, 2.0, 2.0) == 0);
  CHECK(iteration_complexity(3.0, 1.0, 0.5, 2.0, 5.0) == 0);
  CHECK_THROWS_AS(iteration_complexity(1.0, 0.0, 0.5, 2.0, 1.0), ParameterError);

  // With p = 1/n, doubling n doubles K up to the additive one inside the bracket.
  const double kappa = 12.0, dist = 100.0, eps = 1e-6;
  const double log_term = std::log(dist / eps);
  for (std::size_t n : {10u, 25u, 100u, 500u}) {
    const auto k1 = static_cast<double>(iteration_complexity(kappa, 1.0, 1.0 / n, dist, eps));
    const auto k2 =
        static_cast<double>(iteration_complexity(kappa, 1.0, 1.0 / (2 * n), dist, eps));
    CHECK(std::abs(k2 - 2.0 * k1) <= log_term + 2.0);
  }

  const RateBound b = rate_bound(1.0, 1.0, 0.5, 1.0, std::exp(1.0), 1.0);
  CHECK(b.contraction == 0.75);
  CHECK(b.iters_to_eps == 8);
}

TEST_CASE("Lyapunov function") {
  const Eigen::Vector3d xs(1, 2, 3);
  CHECK(lyapunov(xs, xs, xs, 0.7) == 0.0);
  CHECK(corollary_params(1.0, 0.0, 1.0, 1.0).c == 0.5);
  const Eigen::Vector3d x(0, 0, 0), w(5, 5, 5);
  CHECK(lyapunov(x, w, xs, 0.2) >= (x - xs).squaredNorm());
  CHECK(lyapunov(x, w, xs, 0.2) == doctest::Approx(14.0 + 0.2 * 75.0));
  CHECK_THROWS_AS(lyapunov(x, w, xs, 0.0), ParameterError);
}

TEST_CASE("standard constants satisfy all three contraction conditions") {
  for (double p : {0.01, 0.1, 0.5, 1.0}) {
    for (double mg : {0.0, 0.1, 1.0, 10.0}) {
      for (double delta : {0.3, 1.0, 31.0}) {
        const double gamma = theoretical_stepsize(delta, p);
        const double mu = mg / gamma;
        const TheoryParams params = corollary_params(delta, mu, gamma, p);
        const Theorem1Verdict v = theorem1_conditions(params, delta);
        INFO("p " << p << " mu*gamma " << mg << " delta " << delta);
        CHECK(v.c_bound);
        CHECK(v.stepsize);
        CHECK(v.governance);
        CHECK(params.c <= 0.5);
        CHECK(params.c == doctest::Approx(2.0 * p / ((3.0 - p) * (3.0 - p) * (1.0 + mg))));
      }
    }
  }
}

TEST_CASE("zeta from the governance equality") {
  for (double p : {0.05, 0.5, 0.9, 1.0}) {
    TheoryParams params = corollary_params(1.0, 0.0, theoretical_stepsize(1.0, p), p);
    CHECK(params.zeta == doctest::Approx(p / (4.0 - 2.0 * p)).epsilon(1e-15));
    CHECK(1.0 - params.r ==
          doctest::Approx((1.0 - p * (1.0 - params.xi)) * (1.0 + params.zeta)).epsilon(1e-14));
    params.zeta *= 1.01;
    CHECK_FALSE(theorem1_conditions(params, 1.0).governance);
  }
}

TEST_CASE("inflating the dissimilarity breaks the stepsize condition") {
  const double delta = 2.0, p = 0.2;
  const double gamma = theoretical_stepsize(delta, p);
  const TheoryParams params = corollary_params(delta, 0.5, gamma, p);
  CHECK(theorem1_conditions(params, delta).stepsize);
  CHECK_FALSE(theorem1_conditions(params, 100.0 * delta).stepsize);
}

TEST_CASE("condition domain check") {
  TheoryParams params = corollary_params(1.0, 0.0, 0.1, 0.1);
  params.c = 2.0;  // c (1 - p) = 1.8
  CHECK_THROWS_AS(theorem1_conditions(params, 1.0), ParameterError);
  params.c = 0.1;
  params.xi = 1.5;
  CHECK_THROWS_AS(theorem1_conditions(params, 1.0), ParameterError);
}

TEST_CASE("convex-case gap bound") {
  CHECK(convex_gap_bound(0.0, 0.3, 10) == 0.0);
  CHECK(convex_gap_bound(4.0, 0.5, 4) == 1.0);
  CHECK(convex_gap_bound(3.0, 0.2, 20) == doctest::Approx(convex_gap_bound(3.0, 0.2, 10) / 2.0));
  CHECK_THROWS_AS(convex_gap_bound(1.0, 0.5, 0), ParameterError);
}
