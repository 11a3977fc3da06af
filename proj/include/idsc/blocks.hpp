#pragma once

#include <string>

#include "idsc/graph.hpp"
#include "idsc/rng.hpp"

namespace idsc {

// x @ w + b with w [in x out].
struct Affine {
  Tensor w, b;
  static Affine init(int in, int out, Rng& rng);
  static Affine zeros(int in, int out);
};

struct AffineVars {
  Var w, b;
};

AffineVars bind_params(Graph& g, const Affine& a, const std::string& prefix);
Var apply(Var x, const AffineVars& a);

// Bias-free projection, for positions where a bias would be a no-op (e.g.
// key maps feeding a softmax that normalizes it away).
struct Linear {
  Tensor w;
  static Linear init(int in, int out, Rng& rng);
};

struct LinearVars {
  Var w;
};

LinearVars bind_params(Graph& g, const Linear& l, const std::string& prefix);
Var apply(Var x, const LinearVars& l);

// Pre-norm residual feed-forward: x + W2 gelu(W1 LN(x)), hidden width 2c.
struct ResidFfn {
  Tensor ln_g, ln_b;
  Tensor w1, b1;
  Tensor w2, b2;
  static ResidFfn init(int c, Rng& rng);
};

struct ResidFfnVars {
  Var ln_g, ln_b, w1, b1, w2, b2;
};

ResidFfnVars bind_params(Graph& g, const ResidFfn& f, const std::string& prefix);
Var apply(Var x, const ResidFfnVars& f);

}  // namespace idsc
