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

#ifndef PROXVR_RNG_HPP_
#define PROXVR_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace proxvr {

// All randomness flows through mt19937_64 engines seeded from a
// (base seed, stream id) pair by a splitmix64 mixing hash. Streams are
// therefore independent of the order in which they are created.
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t base,
                                 std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Engine make_engine(std::uint64_t base, std::uint64_t stream);

// Uniform index in [0, n). Consumes exactly one engine output.
std::size_t draw_index(Engine &rng, std::size_t n);

// Bernoulli(p) coin. Consumes exactly one engine output, even for p = 1.
bool draw_coin(Engine &rng, double p);

Eigen::MatrixXd standard_normal_matrix(Engine &rng, Eigen::Index rows,
                                       Eigen::Index cols);
Eigen::VectorXd standard_normal_vector(Engine &rng, Eigen::Index size);

}  // namespace proxvr

#endif  // PROXVR_RNG_HPP_
