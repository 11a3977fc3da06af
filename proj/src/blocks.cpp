#include "idsc/blocks.hpp"

#include <cmath>

namespace idsc {

Affine Affine::init(int in, int out, Rng& rng) {
  Affine a;
  a.w = rng.normal_tensor({in, out}, std::sqrt(1.0 / in));
  a.b = Tensor({out});
  return a;
}

Affine Affine::zeros(int in, int out) {
  Affine a;
  a.w = Tensor({in, out});
  a.b = Tensor({out});
  return a;
}

AffineVars bind_params(Graph& g, const Affine& a, const std::string& prefix) {
  return AffineVars{g.param(prefix + ".w", a.w), g.param(prefix + ".b", a.b)};
}

Var apply(Var x, const AffineVars& a) { return affine(x, a.w, a.b); }

Linear Linear::init(int in, int out, Rng& rng) {
  return Linear{rng.normal_tensor({in, out}, std::sqrt(1.0 / in))};
}

LinearVars bind_params(Graph& g, const Linear& l, const std::string& prefix) {
  return LinearVars{g.param(prefix + ".w", l.w)};
}

Var apply(Var x, const LinearVars& l) { return matmul(x, l.w); }

ResidFfn ResidFfn::init(int c, Rng& rng) {
  ResidFfn f;
  f.ln_g = Tensor::full({c}, 1.0f);
  f.ln_b = Tensor({c});
  f.w1 = rng.normal_tensor({c, 2 * c}, std::sqrt(1.0 / c));
  f.b1 = Tensor({2 * c});
  f.w2 = rng.normal_tensor({2 * c, c}, std::sqrt(0.5 / c));
  f.b2 = Tensor({c});
  return f;
}

ResidFfnVars bind_params(Graph& g, const ResidFfn& f, const std::string& prefix) {
  ResidFfnVars v;
  v.ln_g = g.param(prefix + ".ln_g", f.ln_g);
  v.ln_b = g.param(prefix + ".ln_b", f.ln_b);
  v.w1 = g.param(prefix + ".w1", f.w1);
  v.b1 = g.param(prefix + ".b1", f.b1);
  v.w2 = g.param(prefix + ".w2", f.w2);
  v.b2 = g.param(prefix + ".b2", f.b2);
  return v;
}

Var apply(Var x, const ResidFfnVars& f) {
  Var h = layer_norm_rows(x, f.ln_g, f.ln_b);
  h = gelu(affine(h, f.w1, f.b1));
  h = affine(h, f.w2, f.b2);
  return add(x, h);
}

}  // namespace idsc
