#include "idsc/isd.hpp"

namespace idsc {

IsdLayerParams IsdLayerParams::init(int c, Rng& rng) {
  if (c <= 0) throw ContractError("IsdLayerParams: c must be positive");
  IsdLayerParams p;
  p.q = Affine::init(c, c, rng);
  p.k = Linear::init(c, c, rng);
  p.v = Affine::init(c, c, rng);
  p.ffn = ResidFfn::init(c, rng);
  return p;
}

IsdLayerVars bind_params(Graph& g, const IsdLayerParams& p, const std::string& prefix) {
  IsdLayerVars v;
  v.q = bind_params(g, p.q, prefix + ".q");
  v.k = bind_params(g, p.k, prefix + ".k");
  v.v = bind_params(g, p.v, prefix + ".v");
  v.ffn = bind_params(g, p.ffn, prefix + ".ffn");
  return v;
}

Var isd_layer(Graph& g, Var p, Var h, Var d, const IsdLayerVars& lp) {
  Var q = apply(p, lp.q);
  Var k = apply(h, lp.k);
  Var v = apply(h, lp.v);
  Var attn = softmax_along(matmul(q, transpose(k)), 1);  // [M x N]
  (void)g;
  return add(matmul(attn, v), d);
}

Var isd_block(Graph& g, Var p, Var h, Var d, const IsdLayerVars& lp) {
  return apply(isd_layer(g, p, h, d, lp), lp.ffn);
}

Var isd_run(Graph& g, Var p, Var h, const std::vector<IsdLayerVars>& layers) {
  if (layers.empty()) throw ContractError("isd_run: at least one layer required");
  const Tensor& pv = g.value(p);
  const int cv = g.value(layers.front().v.b).dim(0);
  Var d = g.input(Tensor({pv.dim(0), cv}));
  for (const IsdLayerVars& lp : layers) d = isd_block(g, p, h, d, lp);
  return d;
}

EddHead EddHead::init(int n, int c, Rng& rng) {
  if (n <= 0 || c < 2) throw ContractError("EddHead: need n > 0 and c >= 2");
  EddHead e;
  e.r_repr = rng.truncated_normal_tensor({n, c - 1}, 0.02);
  e.v = rng.normal_tensor({n, 1}, 1.0);
  return e;
}

EddHead EddHead::init_depth_bins(int n, int c, float d_min, float d_max, Rng& rng) {
  if (!(d_min > 0.0f) || !(d_max > d_min)) {
    throw ContractError("EddHead: need 0 < d_min < d_max");
  }
  EddHead e = init(n, c, rng);
  const double lo = std::log(static_cast<double>(d_min));
  const double hi = std::log(static_cast<double>(d_max));
  for (int j = 0; j < n; ++j) {
    const double t = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
    e.v[j] = static_cast<float>(std::exp(lo + t * (hi - lo)));
  }
  return e;
}

EddVars bind_params(Graph& g, const EddHead& e, const std::string& prefix) {
  return EddVars{g.param(prefix + ".r_repr", e.r_repr), g.param(prefix + ".v", e.v)};
}

Var edd_head(Graph& g, Var p, const EddVars& e, float temperature) {
  if (temperature <= 0.0f) throw ContractError("edd_head: temperature must be positive");
  const Tensor& pv = g.value(p);
  const Tensor& rv = g.value(e.r_repr);
  if (pv.rank() != 2 || rv.rank() != 2 || pv.dim(1) != rv.dim(1) + 1) {
    throw ShapeError("edd_head: embeddings " + shape_str(pv.shape()) +
                     " do not match representations " + shape_str(rv.shape()));
  }
  Var p_sel = slice_cols(p, 0, pv.dim(1) - 1);
  Var logits = matmul(p_sel, transpose(e.r_repr));
  if (temperature != 1.0f) logits = mul_scalar(logits, 1.0f / temperature);
  Var attn = softmax_along(logits, 1);
  return matmul(attn, e.v);  // [M x 1], convex combination of v
}

Var fuse_mean(Graph& g, const std::vector<Var>& maps, int out_h, int out_w) {
  if (maps.empty()) throw ContractError("fuse_mean: no maps");
  Var acc{nullptr, -1};
  for (Var m : maps) {
    Var r = bilinear_resize(m, out_h, out_w);
    acc = acc.valid() ? add(acc, r) : r;
  }
  (void)g;
  return mul_scalar(acc, 1.0f / static_cast<float>(maps.size()));
}

}  // namespace idsc
