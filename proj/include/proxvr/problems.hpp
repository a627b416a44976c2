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

#ifndef PROXVR_PROBLEMS_HPP_
#define PROXVR_PROBLEMS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace proxvr {

// Parameters a generated instance was drawn from. Hand-built instances
// leave both at zero.
struct GeneratorInfo {
  double eigenvalue_ceiling = 0.0;
  std::uint64_t seed = 0;
};

/**
 * Finite-sum quadratic f(x) = (1/n) sum_i f_i(x) with
 * f_i(x) = 1/2 x^T A_i x + b_i^T x.
 *
 * Immutable once built; safe to share read-only across threads. The
 * constructor checks shapes, finiteness and symmetry. Positive
 * definiteness and the mean-zero offset convention are properties of
 * generate_quadratic(), checked by check_invariants(), since tests and
 * the convex-case instances need to build problems outside them.
 */
class QuadraticProblem {
 public:
  QuadraticProblem(std::vector<Eigen::MatrixXd> matrices,
                   std::vector<Eigen::VectorXd> offsets,
                   GeneratorInfo origin = {});

  std::size_t n() const noexcept { return matrices_.size(); }
  Eigen::Index d() const noexcept { return mean_matrix_.rows(); }

  const Eigen::MatrixXd &matrix(std::size_t i) const;
  const Eigen::VectorXd &offset(std::size_t i) const;
  const std::vector<Eigen::MatrixXd> &matrices() const noexcept {
    return matrices_;
  }
  const std::vector<Eigen::VectorXd> &offsets() const noexcept {
    return offsets_;
  }
  const Eigen::MatrixXd &mean_matrix() const noexcept { return mean_matrix_; }
  const Eigen::VectorXd &mean_offset() const noexcept { return mean_offset_; }
  const GeneratorInfo &origin() const noexcept { return origin_; }

  double value(const Eigen::VectorXd &x) const;
  double component_value(std::size_t i, const Eigen::VectorXd &x) const;

  /// A_i x + b_i. Throws std::out_of_range for i >= n.
  Eigen::VectorXd grad_component(std::size_t i, const Eigen::VectorXd &x) const;

  /// Average of the n component gradients (not A_bar x + b_bar), so that
  /// for n = 1 it is bit-identical to grad_component(0, x).
  Eigen::VectorXd grad_full(const Eigen::VectorXd &x) const;

 private:
  void check_point(const Eigen::VectorXd &x) const;

  std::vector<Eigen::MatrixXd> matrices_;
  std::vector<Eigen::VectorXd> offsets_;
  Eigen::MatrixXd mean_matrix_;
  Eigen::VectorXd mean_offset_;
  GeneratorInfo origin_;
};

struct ProblemStats {
  double delta_sq = 0.0;  // ||(1/n) sum A_i^2 - A_bar^2||_2
  double mu = 0.0;        // min_i lambda_min(A_i)
  double l_max = 0.0;     // max_i lambda_max(A_i)
  double mean_l_sq = 0.0; // (1/n) sum_i lambda_max(A_i)^2
  Eigen::VectorXd x_star;
  double f_star = 0.0;
};

/**
 * Draws A_i = Q_i D_i Q_i^T with Q_i Haar-orthogonal (sign-corrected QR of
 * a Gaussian matrix) and D_i uniform on [1, s], and b_i standard normal
 * recentred to mean zero. Component i uses RNG streams 2i (matrix) and
 * 2i + 1 (offset) of the seed, so output does not depend on build order.
 */
QuadraticProblem generate_quadratic(std::size_t n, Eigen::Index d, double s,
                                    std::uint64_t seed);

/// The Hessian-dissimilarity matrix (1/n) sum_i (A_i - A_bar)^2, which
/// equals (1/n) sum_i A_i^2 - A_bar^2 but without the cancellation.
Eigen::MatrixXd dissimilarity_matrix(const QuadraticProblem &problem);

ProblemStats compute_stats(const QuadraticProblem &problem);

/// Violated invariants of a generated instance, one message each; empty
/// when all hold.
std::vector<std::string> check_invariants(const QuadraticProblem &problem);

/// (1/n) sum_i ||grad f_i(x) - grad f_i(y) - grad f(x) + grad f(y)||^2
/// divided by ||x - y||^2. Requires x != y.
double similarity_ratio(const QuadraticProblem &problem,
                        const Eigen::VectorXd &x, const Eigen::VectorXd &y);

/// Largest similarity_ratio over `trials` random Gaussian pairs. Never
/// exceeds compute_stats().delta_sq beyond rounding.
double check_hessian_similarity(const QuadraticProblem &problem,
                                std::size_t trials, std::uint64_t seed);

// Binary container: "PXVRQP01", n, d, s, seed (little-endian), then the
// A_i blocks row-major and the b_i vectors, all as IEEE-754 doubles.
void save_problem(const QuadraticProblem &problem,
                  const std::filesystem::path &path);
QuadraticProblem load_problem(const std::filesystem::path &path);

}  // namespace proxvr

#endif  // PROXVR_PROBLEMS_HPP_
