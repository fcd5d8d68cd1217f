/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

#include "dance/tensor.hpp"

namespace dance {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed for an independent stream identified by a path of integers below a
/// master seed, e.g. derive_seed(seed, {stream::prior}) or
/// derive_seed(seed, {stream::rim, restart}).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ull));
  return h;
}

namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t batches = 2;
inline constexpr std::uint64_t prior = 3;
inline constexpr std::uint64_t rim = 4;
inline constexpr std::uint64_t kmeans = 5;
inline constexpr std::uint64_t pretrain = 6;
inline constexpr std::uint64_t refine = 7;
inline constexpr std::uint64_t probe = 8;
}  // namespace stream

/// n x dims matrix of i.i.d. N(0, sigma^2) draws.
template <class T = float>
BasicTensor<T> gaussian_sample(Rng& rng, std::size_t n, std::size_t dims, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_sample: sigma must be > 0");
  BasicTensor<T> out({n, dims});
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : out.values()) v = static_cast<T>(normal(rng));
  return out;
}

/// Yields shuffled index batches, reshuffling at every epoch boundary.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
      : order_(n), batch_(std::min(batch_size, n)), rng_(seed) {
    if (n == 0 || batch_size == 0) throw ConfigError("BatchSampler: empty dataset or batch");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<std::size_t> next() {
    if (pos_ + batch_ > order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    std::vector<std::size_t> out(order_.begin() + pos_, order_.begin() + pos_ + batch_);
    pos_ += batch_;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng rng_;
};

}  // namespace dance
