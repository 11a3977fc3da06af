#pragma once

#include <string>
#include <vector>

#include "idsc/blocks.hpp"
#include "idsc/graph.hpp"

namespace idsc {

inline constexpr int kDefaultIsdLayers = 2;

// One decode layer: per-pixel cross-attention from pixel embeddings P onto
// the refined IDRs H, accumulated into D. Projections are per layer and not
// shared across the stack.
struct IsdLayerParams {
  Affine q;  // C  -> Ck (from P)
  Linear k;  // Ch -> Ck (from H); a key bias shifts every IDR's logit by the
             // same per-pixel amount, which the softmax removes, so none is kept
  Affine v;  // Ch -> Cv (from H)
  ResidFfn ffn;  // wrapper over Cv, applied after the attention update

  static IsdLayerParams init(int c, Rng& rng);  // square C -> C layer
};

struct IsdLayerVars {
  AffineVars q, v;
  LinearVars k;
  ResidFfnVars ffn;
};

IsdLayerVars bind_params(Graph& g, const IsdLayerParams& p, const std::string& prefix);

// D_next = softmax(Q K^T) V + D, softmax over the IDR axis per pixel.
Var isd_layer(Graph& g, Var p, Var h, Var d, const IsdLayerVars& lp);

// isd_layer followed by the residual feed-forward wrapper.
Var isd_block(Graph& g, Var p, Var h, Var d, const IsdLayerVars& lp);

// Full decode stack starting from D_0 = 0.
Var isd_run(Graph& g, Var p, Var h, const std::vector<IsdLayerVars>& layers);

// Explicit discretization: depth as a convex combination of N learned scalar
// values. Similarity uses the representation channels of the embedding (all
// but the last, matching the stacked [R | v] layout of width C).
struct EddHead {
  Tensor r_repr;  // [N x C-1]
  Tensor v;       // [N x 1]
  float temperature = 1.0f;

  static EddHead init(int n, int c, Rng& rng);

  // Init with v spanning [d_min, d_max] evenly in log space, the usual
  // spacing for ordinal depth bins.
  static EddHead init_depth_bins(int n, int c, float d_min, float d_max, Rng& rng);
};

struct EddVars {
  Var r_repr, v;
};

EddVars bind_params(Graph& g, const EddHead& e, const std::string& prefix);

Var edd_head(Graph& g, Var p, const EddVars& e, float temperature);

// Arithmetic mean of maps after resizing each to (out_h, out_w).
Var fuse_mean(Graph& g, const std::vector<Var>& maps, int out_h, int out_w);

}  // namespace idsc
