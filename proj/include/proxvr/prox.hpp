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

#ifndef PROXVR_PROX_HPP_
#define PROXVR_PROX_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace proxvr {

class QuadraticProblem;

using GradientOracle = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;
using HessianOracle = std::function<Eigen::MatrixXd(const Eigen::VectorXd &)>;

/// prox_{gamma g}(x) for g(y) = 1/2 y^T A y + b^T y, i.e. the solution of
/// (I + gamma A) y = x - gamma b. A must be symmetric with
/// lambda_min(A) > -1/gamma.
Eigen::VectorXd prox_quadratic(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                               double gamma, const Eigen::VectorXd &x);

/// ||y + gamma (A y + b) - x||, the optimality residual of a quadratic prox.
double prox_residual(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                     double gamma, const Eigen::VectorXd &x,
                     const Eigen::VectorXd &y);

// Cholesky factor of I + gamma A, reusable across anchors for fixed gamma.
class QuadraticProx {
 public:
  QuadraticProx(const Eigen::MatrixXd &a, const Eigen::VectorXd &b, double gamma);

  double gamma() const noexcept { return gamma_; }
  Eigen::VectorXd operator()(const Eigen::VectorXd &x) const;

 private:
  double gamma_;
  Eigen::VectorXd scaled_offset_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

/**
 * One QuadraticProx per component of a problem, all for the same gamma.
 * Built eagerly and immutable afterwards, so one table can serve every
 * repeat of a cell concurrently.
 */
class QuadraticProxTable {
 public:
  QuadraticProxTable(const QuadraticProblem &problem, double gamma);

  double gamma() const noexcept { return gamma_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// True when this table was built for exactly this gamma (bitwise).
  bool matches(double gamma) const noexcept;

  Eigen::VectorXd apply(std::size_t i, const Eigen::VectorXd &x) const;

 private:
  double gamma_;
  std::vector<QuadraticProx> entries_;
};

struct IterativeProxOptions {
  double tol = 1e-12;
  std::size_t max_iter = 200;
  // Used only when no Hessian oracle is supplied.
  double fd_step = 1e-6;
};

struct IterativeProxResult {
  Eigen::VectorXd point;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/**
 * Solves y + gamma * grad(y) = x by damped Newton. The unit step is taken
 * when it lowers the residual norm, otherwise the step is halved up to 40
 * times. Without a Hessian oracle the Jacobian is built by central
 * differences of `grad`.
 *
 * Stops when ||y + gamma grad(y) - x|| <= tol (1 + ||x||). Throws
 * NonConvergenceError (carrying the residual) after max_iter iterations.
 * `mu` is the strong-convexity modulus of g; it only shapes the error
 * message, since convergence is governed by the 1 / (1 + gamma mu)
 * contraction of the prox itself.
 */
IterativeProxResult prox_iterative(const GradientOracle &grad, double mu,
                                   double gamma, const Eigen::VectorXd &x,
                                   const IterativeProxOptions &options = {},
                                   const HessianOracle &hessian = nullptr);

struct QuadraticTarget {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

struct SmoothTarget {
  GradientOracle grad;
  double mu = 0.0;
  HessianOracle hessian;
};

struct ProxRequest {
  double gamma = 1.0;
  Eigen::VectorXd anchor;
  std::variant<QuadraticTarget, SmoothTarget> target;
};

/// Dispatches to prox_quadratic or prox_iterative.
Eigen::VectorXd evaluate_prox(const ProxRequest &request,
                              const IterativeProxOptions &options = {});

struct ContractionCheck {
  double max_ratio = 0.0;  // max ||prox(x) - prox(y)|| / ||x - y||
  double bound = 1.0;      // 1 / (1 + gamma mu)

  bool holds(double rel_tol = 1e-8) const noexcept {
    return max_ratio <= bound * (1.0 + rel_tol);
  }
};

/// Samples `pairs` Gaussian pairs and measures the prox Lipschitz ratio.
ContractionCheck verify_prox_contraction(const Eigen::MatrixXd &a,
                                         const Eigen::VectorXd &b, double gamma,
                                         double mu, std::size_t pairs,
                                         std::uint64_t seed);

}  // namespace proxvr

#endif  // PROXVR_PROX_HPP_
