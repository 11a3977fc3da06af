#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "idsc/tensor.hpp"

namespace idsc {

// Seeded generator with hand-pinned float draws. std::mt19937 output is
// specified by the standard, and we avoid std distributions on top of it so
// that sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(static_cast<std::mt19937_64::result_type>(seed)) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(eng_() % static_cast<uint64_t>(hi - lo + 1));
  }

  double normal() {
    // Box-Muller, cosine branch only.
    double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Standard normal clipped by resampling; used for prior initialization.
  double truncated_normal(double clip = 2.0) {
    for (;;) {
      double z = normal();
      if (z >= -clip && z <= clip) return z;
    }
  }

  Tensor normal_tensor(std::vector<int> shape, double scale) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(normal() * scale);
    return t;
  }

  Tensor truncated_normal_tensor(std::vector<int> shape, double scale) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) {
      t[i] = static_cast<float>(truncated_normal() * scale);
    }
    return t;
  }

  Tensor uniform_tensor(std::vector<int> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(uniform(lo, hi));
    return t;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace idsc
