#pragma once

#include <string>

#include "idsc/blocks.hpp"
#include "idsc/graph.hpp"

namespace idsc {

inline constexpr int kDefaultAfpIterations = 2;

// Pixel-axis normalization floor applied to the partition columns.
inline constexpr float kPartitionNormEps = 1e-8f;

// Adaptive feature partitioning: a set of N internal discrete representations
// (IDRs) iteratively refined by transposed cross-attention against the pixel
// features F. One projection set is shared by every iteration; keys and
// values depend only on F, so they are constant across iterations.
struct AfpParams {
  Tensor h_prior;  // [N x C] learnable priors
  Affine q, k, v;  // C -> C, shared across iterations
  ResidFfn ffn;    // residual wrapper applied after each aggregation

  static AfpParams init(int n, int c, Rng& rng);
};

struct AfpVars {
  Var h_prior;
  AffineVars q, k, v;
  ResidFfnVars ffn;
};

AfpVars bind_params(Graph& g, const AfpParams& p, const std::string& prefix);

struct AfpStep {
  Var w;       // [M x N] pixel-to-IDR weights, rows sum to 1
  Var q_next;  // [N x C]
};

// One iteration: W = rowsoftmax(K q^T), columns renormalized along pixels,
// q_next = q + W_hat^T V followed by the residual feed-forward wrapper.
// When scale_logits is set the attention logits are scaled by 1/sqrt(C).
AfpStep transposed_attention_step(Graph& g, Var f, Var q, const AfpVars& p,
                                  bool scale_logits = false);

struct AfpRun {
  Var h;  // refined IDRs [N x C]; bitwise the priors when iterations == 0
  Var w;  // final-iteration partition weights [M x N]
};

AfpRun afp_run(Graph& g, Var f, const AfpVars& p, int iterations,
               bool scale_logits = false);

// Shannon entropy in nats of each pixel's partition row; [M x N] -> [M].
Tensor partition_entropy(const Tensor& w);

struct IdrSet {
  Tensor h_prior;  // [N x C]
  Tensor h;        // refined representations [N x C]
  int resolution = 1;
};

struct AfpEval {
  IdrSet idrs;
  Tensor w;  // [M x N]
};

// Value-level convenience: runs the stage on a scratch graph.
AfpEval afp_run_eval(const Tensor& f, const AfpParams& p, int iterations, int resolution,
                     bool scale_logits = false);

// Unpack pixel-to-IDR weights [M x N] into N maps of shape [N x h x w].
Tensor partition_maps(const Tensor& w, int h, int width);

}  // namespace idsc
