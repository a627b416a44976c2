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

#include "proxvr/rng.hpp"

namespace proxvr {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

Engine make_engine(std::uint64_t base, std::uint64_t stream) {
  return Engine(mix_seed(base, stream));
}

std::size_t draw_index(Engine &rng, std::size_t n) {
  // Multiply-high reduction; bias is at most n / 2^64.
  const u128 wide = static_cast<u128>(rng()) * static_cast<std::uint64_t>(n);
  return static_cast<std::size_t>(wide >> 64);
}

bool draw_coin(Engine &rng, double p) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < p;
}

Eigen::MatrixXd standard_normal_matrix(Engine &rng, Eigen::Index rows,
                                       Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  // Fill row-major so the draw order matches the on-disk layout.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
  return out;
}

Eigen::VectorXd standard_normal_vector(Engine &rng, Eigen::Index size) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(size);
  for (Eigen::Index i = 0; i < size; ++i) out(i) = normal(rng);
  return out;
}

}  // namespace proxvr
