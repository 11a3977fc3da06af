#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "idsc/tensor.hpp"

namespace idsc {

// Elementwise |a - n| / max(|n|, clamp), maximum over the tensor.
inline double max_rel_err(const Tensor& analytic, const Tensor& numeric, double clamp = 1e-6) {
  double worst = 0.0;
  for (int64_t i = 0; i < analytic.numel(); ++i) {
    double denom = std::max(std::abs(static_cast<double>(numeric[i])), clamp);
    worst = std::max(worst, std::abs(static_cast<double>(analytic[i]) - numeric[i]) / denom);
  }
  return worst;
}

struct GradBlockResult {
  std::string name;
  double max_err = 0.0;
  bool pass = false;
};

// Defined in gradcheck.cpp once the model blocks exist.
std::vector<GradBlockResult> run_gradient_blocks(const std::string& which, uint32_t seed,
                                                 double tolerance, bool corrupt);

}  // namespace idsc
