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

#include "proxvr/prox.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <string>

#include "proxvr/error.hpp"
#include "proxvr/problems.hpp"
#include "proxvr/rng.hpp"

namespace proxvr {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ParameterError("prox stepsize gamma must be finite and > 0");
}

Eigen::LLT<Eigen::MatrixXd> factor_shifted(const Eigen::MatrixXd &a, double gamma) {
  if (a.rows() != a.cols()) throw ParameterError("prox matrix must be square");
  if (!a.allFinite()) throw ParameterError("prox matrix is not finite");
  Eigen::MatrixXd shifted = gamma * a;
  shifted.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw NumericalError("I + gamma A is not positive definite");
  return llt;
}

}  // namespace

Eigen::VectorXd prox_quadratic(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                               double gamma, const Eigen::VectorXd &x) {
  return QuadraticProx(a, b, gamma)(x);
}

double prox_residual(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                     double gamma, const Eigen::VectorXd &x,
                     const Eigen::VectorXd &y) {
  Eigen::VectorXd r = y - x + gamma * b;
  r.noalias() += gamma * (a * y);
  return r.norm();
}

QuadraticProx::QuadraticProx(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                             double gamma)
    : gamma_(gamma) {
  check_gamma(gamma);
  if (b.size() != a.rows()) throw ParameterError("prox offset has wrong size");
  if (!b.allFinite()) throw ParameterError("prox offset is not finite");
  factor_ = factor_shifted(a, gamma);
  scaled_offset_ = gamma * b;
}

Eigen::VectorXd QuadraticProx::operator()(const Eigen::VectorXd &x) const {
  if (x.size() != scaled_offset_.size())
    throw ParameterError("prox anchor has wrong size");
  if (!x.allFinite()) throw ParameterError("prox anchor is not finite");
  return factor_.solve(x - scaled_offset_);
}

QuadraticProxTable::QuadraticProxTable(const QuadraticProblem &problem,
                                       double gamma)
    : gamma_(gamma) {
  check_gamma(gamma);
  entries_.reserve(problem.n());
  for (std::size_t i = 0; i < problem.n(); ++i)
    entries_.emplace_back(problem.matrix(i), problem.offset(i), gamma);
}

bool QuadraticProxTable::matches(double gamma) const noexcept {
  return std::bit_cast<std::uint64_t>(gamma) == std::bit_cast<std::uint64_t>(gamma_);
}

Eigen::VectorXd QuadraticProxTable::apply(std::size_t i,
                                          const Eigen::VectorXd &x) const {
  return entries_.at(i)(x);
}

IterativeProxResult prox_iterative(const GradientOracle &grad, double mu,
                                   double gamma, const Eigen::VectorXd &x,
                                   const IterativeProxOptions &options,
                                   const HessianOracle &hessian) {
  check_gamma(gamma);
  if (!grad) throw ParameterError("prox_iterative needs a gradient oracle");
  if (!(options.tol > 0.0)) throw ParameterError("prox_iterative: tol must be > 0");
  if (!x.allFinite()) throw ParameterError("prox anchor is not finite");

  const Eigen::Index d = x.size();
  const double target = options.tol * (1.0 + x.norm());
  auto residual_of = [&](const Eigen::VectorXd &y) -> Eigen::VectorXd {
    return y + gamma * grad(y) - x;
  };

  IterativeProxResult result;
  result.point = x;
  Eigen::VectorXd r = residual_of(result.point);
  result.residual = r.norm();

  while (result.residual > target) {
    if (result.iterations >= options.max_iter) {
      std::ostringstream msg;
      msg << "prox_iterative did not converge in " << options.max_iter
          << " iterations (residual " << result.residual << ", mu " << mu << ")";
      throw NonConvergenceError(msg.str(), result.residual);
    }
    ++result.iterations;

    Eigen::MatrixXd jac;
    if (hessian) {
      jac = gamma * hessian(result.point);
    } else {
      jac.resize(d, d);
      Eigen::VectorXd probe = result.point;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double h = options.fd_step * (1.0 + std::abs(probe(j)));
        const double saved = probe(j);
        probe(j) = saved + h;
        const Eigen::VectorXd up = grad(probe);
        probe(j) = saved - h;
        const Eigen::VectorXd down = grad(probe);
        probe(j) = saved;
        jac.col(j) = gamma * (up - down) / (2.0 * h);
      }
      jac = 0.5 * (jac + jac.transpose()).eval();
    }
    jac.diagonal().array() += 1.0;

    Eigen::VectorXd step = jac.ldlt().solve(-r);
    if (!step.allFinite()) step = -r;

    double scale = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= 40; ++halvings, scale *= 0.5) {
      Eigen::VectorXd trial = result.point + scale * step;
      Eigen::VectorXd trial_r = residual_of(trial);
      const double trial_norm = trial_r.norm();
      if (std::isfinite(trial_norm) && trial_norm < result.residual) {
        result.point = std::move(trial);
        r = std::move(trial_r);
        result.residual = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "prox_iterative stalled at residual " << result.residual;
      throw NonConvergenceError(msg.str(), result.residual);
    }
  }
  return result;
}

Eigen::VectorXd evaluate_prox(const ProxRequest &request,
                              const IterativeProxOptions &options) {
  if (const auto *quad = std::get_if<QuadraticTarget>(&request.target)) {
    if ((quad->a - quad->a.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * quad->a.cwiseAbs().maxCoeff())
      throw ParameterError("quadratic prox target must be symmetric");
    return prox_quadratic(quad->a, quad->b, request.gamma, request.anchor);
  }
  const auto &smooth = std::get<SmoothTarget>(request.target);
  if (smooth.mu < 0.0) throw ParameterError("strong convexity mu must be >= 0");
  return prox_iterative(smooth.grad, smooth.mu, request.gamma, request.anchor,
                        options, smooth.hessian)
      .point;
}

ContractionCheck verify_prox_contraction(const Eigen::MatrixXd &a,
                                         const Eigen::VectorXd &b, double gamma,
                                         double mu, std::size_t pairs,
                                         std::uint64_t seed) {
  if (pairs == 0) throw ParameterError("verify_prox_contraction: pairs >= 1");
  const QuadraticProx prox(a, b, gamma);
  Engine rng = make_engine(seed, 0xc0de);
  ContractionCheck check;
  check.bound = 1.0 / (1.0 + gamma * mu);
  for (std::size_t t = 0; t < pairs; ++t) {
    Eigen::VectorXd x, y;
    do {
      x = standard_normal_vector(rng, a.rows());
      y = standard_normal_vector(rng, a.rows());
    } while ((x - y).squaredNorm() == 0.0);
    const double ratio = (prox(x) - prox(y)).norm() / (x - y).norm();
    check.max_ratio = std::max(check.max_ratio, ratio);
  }
  return check;
}

}  // namespace proxvr
