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

#ifndef PROXVR_TESTS_ORACLES_HPP_
#define PROXVR_TESTS_ORACLES_HPP_

// Independent reference computations used only by the test suites. None
// of these share code paths with the library routines they check.

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "proxvr/problems.hpp"

namespace proxvr::oracle {

// Spectral norm of a symmetric matrix by power iteration on M^2 (which is
// PSD, so the dominant eigenvalue is unique in magnitude).
inline double power_iteration_norm(const Eigen::MatrixXd &m, double tol = 1e-10,
                                   std::size_t cap = 100000) {
  const Eigen::MatrixXd sq = m * m;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 0.1 * static_cast<double>(i);
  v.normalize();
  double lambda = 0.0;
  for (std::size_t it = 0; it < cap; ++it) {
    Eigen::VectorXd next = sq * v;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    const double estimate = next.dot(sq * next);
    if (std::abs(estimate - lambda) <= tol * std::max(1.0, std::abs(estimate))) {
      lambda = estimate;
      break;
    }
    lambda = estimate;
    v = next;
  }
  return std::sqrt(std::max(0.0, lambda));
}

// (1/n) sum A_i^2 - A_bar^2 assembled literally, without centring.
inline Eigen::MatrixXd raw_dissimilarity(const QuadraticProblem &problem) {
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(problem.d(), problem.d());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(problem.d(), problem.d());
  for (const auto &a : problem.matrices()) {
    sum_sq += a * a;
    sum += a;
  }
  const double n = static_cast<double>(problem.n());
  const Eigen::MatrixXd mean = sum / n;
  return sum_sq / n - mean * mean;
}

// Operator norm of the explicit inverse (I + gamma A)^{-1} via SVD.
inline double resolvent_norm(const Eigen::MatrixXd &a, double gamma) {
  const Eigen::MatrixXd shifted =
      Eigen::MatrixXd::Identity(a.rows(), a.cols()) + gamma * a;
  const Eigen::MatrixXd inv = shifted.inverse();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(inv);
  return svd.singularValues()(0);
}

// Random SPD matrix with eigenvalues in [lo, hi], from std::mt19937.
inline Eigen::MatrixXd random_spd(std::mt19937_64 &rng, Eigen::Index d, double lo,
                                  double hi) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> eig(lo, hi);
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd diag(d);
  for (Eigen::Index i = 0; i < d; ++i) diag(i) = eig(rng);
  Eigen::MatrixXd a = q * diag.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

inline Eigen::VectorXd random_vector(std::mt19937_64 &rng, Eigen::Index d,
                                     double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

inline QuadraticProblem diag_problem(const std::vector<Eigen::VectorXd> &diagonals,
                                     const std::vector<Eigen::VectorXd> &offsets) {
  std::vector<Eigen::MatrixXd> mats;
  for (const auto &dg : diagonals) mats.emplace_back(dg.asDiagonal());
  return QuadraticProblem(mats, offsets);
}

}  // namespace proxvr::oracle

#endif  // PROXVR_TESTS_ORACLES_HPP_
