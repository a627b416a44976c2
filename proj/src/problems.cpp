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

#include "proxvr/problems.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "proxvr/error.hpp"
#include "proxvr/rng.hpp"

namespace proxvr {

namespace {

constexpr char kMagic[8] = {'P', 'X', 'V', 'R', 'Q', 'P', '0', '1'};

bool all_finite(const Eigen::MatrixXd &m) { return m.allFinite(); }

double max_abs(const Eigen::MatrixXd &m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void put_u64(std::ostream &out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream &out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_u64(std::istream &in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char *>(bytes.data()), bytes.size());
  if (!in) throw FormatError("problem file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

double get_f64(std::istream &in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

QuadraticProblem::QuadraticProblem(std::vector<Eigen::MatrixXd> matrices,
                                   std::vector<Eigen::VectorXd> offsets,
                                   GeneratorInfo origin)
    : matrices_(std::move(matrices)),
      offsets_(std::move(offsets)),
      origin_(origin) {
  if (matrices_.empty()) throw ParameterError("problem needs n >= 1 components");
  if (matrices_.size() != offsets_.size())
    throw ParameterError("matrix and offset counts differ");
  const Eigen::Index d = matrices_.front().rows();
  if (d < 1) throw ParameterError("problem needs dimension d >= 1");

  mean_matrix_ = Eigen::MatrixXd::Zero(d, d);
  mean_offset_ = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < matrices_.size(); ++i) {
    const auto &a = matrices_[i];
    const auto &b = offsets_[i];
    if (a.rows() != d || a.cols() != d || b.size() != d)
      throw ParameterError("component " + std::to_string(i) + " has wrong shape");
    if (!all_finite(a) || !b.allFinite())
      throw ParameterError("component " + std::to_string(i) + " is not finite");
    if (max_abs(a - a.transpose()) > 1e-12 * max_abs(a))
      throw ParameterError("matrix " + std::to_string(i) + " is not symmetric");
    mean_matrix_ += a;
    mean_offset_ += b;
  }
  const double inv_n = 1.0 / static_cast<double>(matrices_.size());
  mean_matrix_ *= inv_n;
  mean_offset_ *= inv_n;
}

const Eigen::MatrixXd &QuadraticProblem::matrix(std::size_t i) const {
  return matrices_.at(i);
}

const Eigen::VectorXd &QuadraticProblem::offset(std::size_t i) const {
  return offsets_.at(i);
}

void QuadraticProblem::check_point(const Eigen::VectorXd &x) const {
  if (x.size() != d()) throw ParameterError("point has wrong dimension");
}

double QuadraticProblem::value(const Eigen::VectorXd &x) const {
  check_point(x);
  return 0.5 * x.dot(mean_matrix_ * x) + mean_offset_.dot(x);
}

double QuadraticProblem::component_value(std::size_t i,
                                         const Eigen::VectorXd &x) const {
  check_point(x);
  const auto &a = matrix(i);
  return 0.5 * x.dot(a * x) + offsets_[i].dot(x);
}

Eigen::VectorXd QuadraticProblem::grad_component(std::size_t i,
                                                 const Eigen::VectorXd &x) const {
  if (i >= n())
    throw std::out_of_range("component index " + std::to_string(i) +
                            " out of range for n = " + std::to_string(n()));
  check_point(x);
  Eigen::VectorXd g = offsets_[i];
  g.noalias() += matrices_[i] * x;
  return g;
}

Eigen::VectorXd QuadraticProblem::grad_full(const Eigen::VectorXd &x) const {
  check_point(x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d());
  for (std::size_t i = 0; i < n(); ++i) {
    g += offsets_[i];
    g.noalias() += matrices_[i] * x;
  }
  return g / static_cast<double>(n());
}

QuadraticProblem generate_quadratic(std::size_t n, Eigen::Index d, double s,
                                    std::uint64_t seed) {
  if (n == 0) throw ParameterError("generate_quadratic: n must be >= 1");
  if (d < 1) throw ParameterError("generate_quadratic: d must be >= 1");
  if (!(s >= 1.0) || !std::isfinite(s))
    throw ParameterError("generate_quadratic: s must be a finite value >= 1");

  std::vector<Eigen::MatrixXd> matrices;
  std::vector<Eigen::VectorXd> offsets;
  matrices.reserve(n);
  offsets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Engine rng = make_engine(seed, 2 * static_cast<std::uint64_t>(i));
    const Eigen::MatrixXd gauss = standard_normal_matrix(rng, d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd &packed = qr.matrixQR();
    for (Eigen::Index j = 0; j < d; ++j)
      if (packed(j, j) < 0.0) q.col(j) = -q.col(j);

    std::uniform_real_distribution<double> eig(1.0, s);
    Eigen::VectorXd diag(d);
    for (Eigen::Index j = 0; j < d; ++j) diag(j) = s == 1.0 ? 1.0 : eig(rng);

    Eigen::MatrixXd a = q * diag.asDiagonal() * q.transpose();
    matrices.emplace_back(0.5 * (a + a.transpose()));

    Engine offset_rng = make_engine(seed, 2 * static_cast<std::uint64_t>(i) + 1);
    offsets.push_back(standard_normal_vector(offset_rng, d));
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto &b : offsets) mean += b;
  mean /= static_cast<double>(n);
  for (auto &b : offsets) b -= mean;

  return QuadraticProblem(std::move(matrices), std::move(offsets),
                          GeneratorInfo{s, seed});
}

Eigen::MatrixXd dissimilarity_matrix(const QuadraticProblem &problem) {
  const Eigen::Index d = problem.d();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd centred(d, d);
  for (const auto &a : problem.matrices()) {
    centred = a - problem.mean_matrix();
    acc.noalias() += centred * centred;
  }
  acc /= static_cast<double>(problem.n());
  return 0.5 * (acc + acc.transpose());
}

ProblemStats compute_stats(const QuadraticProblem &problem) {
  ProblemStats stats;
  if (problem.n() == 1) {
    stats.delta_sq = 0.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dis(
        dissimilarity_matrix(problem), Eigen::EigenvaluesOnly);
    if (dis.info() != Eigen::Success)
      throw NumericalError("eigensolver failed on the dissimilarity matrix");
    stats.delta_sq = dis.eigenvalues().cwiseAbs().maxCoeff();
  }

  stats.mu = std::numeric_limits<double>::infinity();
  stats.l_max = -std::numeric_limits<double>::infinity();
  double sum_l_sq = 0.0;
  for (const auto &a : problem.matrices()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
      throw NumericalError("eigensolver failed on a component Hessian");
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    stats.mu = std::min(stats.mu, lo);
    stats.l_max = std::max(stats.l_max, hi);
    sum_l_sq += hi * hi;
  }
  stats.mean_l_sq = sum_l_sq / static_cast<double>(problem.n());

  Eigen::LLT<Eigen::MatrixXd> llt(problem.mean_matrix());
  if (llt.info() != Eigen::Success)
    throw NumericalError("average Hessian is not positive definite");
  stats.x_star = llt.solve(-problem.mean_offset());
  if (!stats.x_star.allFinite())
    throw NumericalError("minimizer solve produced non-finite values");
  stats.f_star = problem.value(stats.x_star);
  return stats;
}

std::vector<std::string> check_invariants(const QuadraticProblem &problem) {
  std::vector<std::string> failures;
  double max_b = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const auto &a = problem.matrix(i);
    if (max_abs(a - a.transpose()) > 1e-12 * max_abs(a))
      failures.push_back("A_" + std::to_string(i) + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < 1.0 - 1e-9) {
      std::ostringstream msg;
      msg << "A_" << i << " has eigenvalue " << eig.eigenvalues().minCoeff()
          << " below 1";
      failures.push_back(msg.str());
    }
    max_b = std::max(max_b, problem.offset(i).norm());
  }
  const double mean_norm = problem.mean_offset().norm();
  if (mean_norm > 1e-10 * max_b) {
    std::ostringstream msg;
    msg << "offsets are not mean-zero: ||b_bar|| = " << mean_norm;
    failures.push_back(msg.str());
  }
  return failures;
}

double similarity_ratio(const QuadraticProblem &problem,
                        const Eigen::VectorXd &x, const Eigen::VectorXd &y) {
  const Eigen::VectorXd z = x - y;
  const double z_sq = z.squaredNorm();
  if (z_sq == 0.0) throw ParameterError("similarity_ratio needs x != y");
  // grad f_i(x) - grad f_i(y) = A_i z; the offsets cancel.
  const Eigen::VectorXd mean_diff = problem.mean_matrix() * z;
  double acc = 0.0;
  for (const auto &a : problem.matrices())
    acc += (a * z - mean_diff).squaredNorm();
  return acc / static_cast<double>(problem.n()) / z_sq;
}

double check_hessian_similarity(const QuadraticProblem &problem,
                                std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw ParameterError("check_hessian_similarity: trials >= 1");
  Engine rng = make_engine(seed, 0x5eed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::VectorXd x, y;
    do {
      x = standard_normal_vector(rng, problem.d());
      y = standard_normal_vector(rng, problem.d());
    } while ((x - y).squaredNorm() == 0.0);
    worst = std::max(worst, similarity_ratio(problem, x, y));
  }
  return worst;
}

void save_problem(const QuadraticProblem &problem,
                  const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  put_u64(out, problem.n());
  put_u64(out, static_cast<std::uint64_t>(problem.d()));
  put_f64(out, problem.origin().eigenvalue_ceiling);
  put_u64(out, problem.origin().seed);
  const Eigen::Index d = problem.d();
  for (const auto &a : problem.matrices())
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) put_f64(out, a(r, c));
  for (const auto &b : problem.offsets())
    for (Eigen::Index r = 0; r < d; ++r) put_f64(out, b(r));
  if (!out) throw FormatError("write failed for " + path.string());
}

QuadraticProblem load_problem(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open problem file " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError(path.string() + " is not a problem container");
  const std::uint64_t n = get_u64(in);
  const std::uint64_t d = get_u64(in);
  GeneratorInfo origin;
  origin.eigenvalue_ceiling = get_f64(in);
  origin.seed = get_u64(in);
  if (n == 0 || d == 0 || n > (1ULL << 24) || d > (1ULL << 16))
    throw FormatError("implausible problem dimensions in " + path.string());

  const auto dim = static_cast<Eigen::Index>(d);
  std::vector<Eigen::MatrixXd> matrices(n, Eigen::MatrixXd(dim, dim));
  std::vector<Eigen::VectorXd> offsets(n, Eigen::VectorXd(dim));
  for (auto &a : matrices)
    for (Eigen::Index r = 0; r < dim; ++r)
      for (Eigen::Index c = 0; c < dim; ++c) a(r, c) = get_f64(in);
  for (auto &b : offsets)
    for (Eigen::Index r = 0; r < dim; ++r) b(r) = get_f64(in);
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes in " + path.string());
  try {
    return QuadraticProblem(std::move(matrices), std::move(offsets), origin);
  } catch (const ParameterError &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace proxvr
