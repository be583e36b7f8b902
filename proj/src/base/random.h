// base/random.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_BASE_RANDOM_H_
#define CSFNET_BASE_RANDOM_H_

#include <cstdint>
#include <random>

#include "base/tensor.h"

namespace csfnet {

// Seeded generator used for every stochastic choice in the project, so a
// fixed seed reproduces parameters, mixtures and occlusions exactly.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  // Integer uniform on [lo, hi] inclusive.
  int64_t UniformInt(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(engine_);
  }
  double Normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  uint64_t NextSeed() { return engine_(); }

  Tensor UniformTensor(Shape shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = Uniform(lo, hi);
    return t;
  }
  Tensor NormalTensor(Shape shape, double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = Normal(0.0, stddev);
    return t;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Stable per-item seed derivation (splitmix64 finalizer).
inline uint64_t MixSeed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace csfnet

#endif  // CSFNET_BASE_RANDOM_H_
