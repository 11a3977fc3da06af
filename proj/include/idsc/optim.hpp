#pragma once

#include <vector>

#include "idsc/tensor.hpp"

namespace idsc {

struct AdamWConfig {
  double lr = 2e-4;        // plateau rate, held before the decay phase
  double lr_final = 2e-5;  // cosine floor reached at the last step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.02;  // decoupled, applied to the raw parameter
  double clip_norm = 10.0;     // global gradient norm ceiling; <= 0 disables
  int total_steps = 2000;
  double warm_frac = 0.3;  // fraction of the run spent on the plateau
};

// Plateau-then-cosine: lr for the first warm_frac of the run, then a half
// cosine down to lr_final at step total_steps - 1.
double cosine_lr(const AdamWConfig& cfg, int step);

double global_norm(const std::vector<const Tensor*>& grads);

class AdamW {
 public:
  // Borrows the parameter tensors; they must outlive the optimizer.
  AdamW(std::vector<Tensor*> params, const AdamWConfig& cfg);

  // One update from gradients aligned with the parameter list.
  // Returns the learning rate that was applied.
  double step(const std::vector<const Tensor*>& grads);

  int steps_taken() const { return t_; }

 private:
  std::vector<Tensor*> params_;
  std::vector<Tensor> m_, v_;
  AdamWConfig cfg_;
  int t_ = 0;
};

}  // namespace idsc
