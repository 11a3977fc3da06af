#include "idsc/afp.hpp"

#include <cmath>

namespace idsc {

AfpParams AfpParams::init(int n, int c, Rng& rng) {
  if (n <= 0 || c <= 0) throw ContractError("AfpParams: n and c must be positive");
  AfpParams p;
  p.h_prior = rng.truncated_normal_tensor({n, c}, 0.02);
  p.q = Affine::init(c, c, rng);
  p.k = Affine::init(c, c, rng);
  p.v = Affine::init(c, c, rng);
  p.ffn = ResidFfn::init(c, rng);
  return p;
}

AfpVars bind_params(Graph& g, const AfpParams& p, const std::string& prefix) {
  AfpVars v;
  v.h_prior = g.param(prefix + ".h_prior", p.h_prior);
  v.q = bind_params(g, p.q, prefix + ".q");
  v.k = bind_params(g, p.k, prefix + ".k");
  v.v = bind_params(g, p.v, prefix + ".v");
  v.ffn = bind_params(g, p.ffn, prefix + ".ffn");
  return v;
}

static Var partition_weights(Graph& g, Var f, Var q, const AfpVars& p, bool scale_logits) {
  Var keys = apply(f, p.k);
  Var logits = matmul(keys, transpose(q));  // [M x N]
  if (scale_logits) {
    const int c = g.value(keys).dim(1);
    logits = mul_scalar(logits, static_cast<float>(1.0 / std::sqrt(static_cast<double>(c))));
  }
  return softmax_along(logits, 1);
}

AfpStep transposed_attention_step(Graph& g, Var f, Var q, const AfpVars& p, bool scale_logits) {
  Var w = partition_weights(g, f, q, p, scale_logits);
  Var denom = add_scalar(sum_axis0(w), kPartitionNormEps);
  Var w_hat = div_rowvec(w, denom);
  Var values = apply(f, p.v);
  Var agg = matmul(transpose(w_hat), values);  // [N x C]
  Var a = add(q, agg);
  return AfpStep{w, apply(a, p.ffn)};
}

AfpRun afp_run(Graph& g, Var f, const AfpVars& p, int iterations, bool scale_logits) {
  if (iterations < 0) throw ContractError("afp_run: iterations must be >= 0");
  Var q = apply(p.h_prior, p.q);
  if (iterations == 0) {
    // Non-adaptive partitioning: the priors pass through untouched and the
    // weights are exported for diagnostics only.
    return AfpRun{p.h_prior, partition_weights(g, f, q, p, scale_logits)};
  }
  Var w{nullptr, -1};
  for (int t = 0; t < iterations; ++t) {
    AfpStep step = transposed_attention_step(g, f, q, p, scale_logits);
    w = step.w;
    q = step.q_next;
  }
  return AfpRun{q, w};
}

Tensor partition_entropy(const Tensor& w) {
  if (w.rank() != 2) {
    throw ShapeError("partition_entropy: expected [pixels x idrs], got " + shape_str(w.shape()));
  }
  const int m = w.dim(0), n = w.dim(1);
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double h = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p = w.at2(i, j);
      if (p > 0.0) h -= p * std::log(p);
    }
    out[i] = static_cast<float>(h);
  }
  return out;
}

AfpEval afp_run_eval(const Tensor& f, const AfpParams& p, int iterations, int resolution,
                     bool scale_logits) {
  Graph g;
  Var fv = g.input(f);
  AfpVars vars = bind_params(g, p, "afp");
  AfpRun run = afp_run(g, fv, vars, iterations, scale_logits);
  AfpEval out;
  out.idrs.h_prior = p.h_prior;
  out.idrs.h = g.value(run.h);
  out.idrs.resolution = resolution;
  out.w = g.value(run.w);
  return out;
}

Tensor partition_maps(const Tensor& w, int h, int width) {
  if (w.rank() != 2 || w.dim(0) != h * width) {
    throw ShapeError("partition_maps: weights " + shape_str(w.shape()) + " do not cover " +
                     std::to_string(h) + "x" + std::to_string(width) + " pixels");
  }
  const int n = w.dim(1);
  Tensor out({n, h, width});
  for (int j = 0; j < n; ++j) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < width; ++x) out.at3(j, y, x) = w.at2(y * width + x, j);
    }
  }
  return out;
}

}  // namespace idsc
