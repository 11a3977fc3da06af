#include "idsc/gradcheck.hpp"

#include <algorithm>
#include <utility>

#include "idsc/afp.hpp"
#include "idsc/errors.hpp"
#include "idsc/isd.hpp"
#include "idsc/metrics.hpp"
#include "idsc/refeval.hpp"
#include "idsc/rng.hpp"

namespace idsc {

namespace {

// Miniature sizes: a 16x16 map, 8 channels, 4 representations. Small enough
// that probing every element stays fast, large enough to exercise the
// reductions along each axis.
constexpr int kSide = 16;
// Pixel count seen by the attention blocks: the finest pyramid scale of a
// 16x16 input is 8x8. Full-resolution maps stay at kSide * kSide.
constexpr int kBlockPixels = 64;
constexpr int kChannels = 8;
constexpr int kReprs = 4;

// Max relative error over every trainable leaf of a recorded graph, analytic
// backward against central differences of the double-precision reference.
// `corrupt` deliberately bends the first analytic gradient so callers can
// prove the comparison is alive.
double check_graph(Graph& g, Var loss, bool corrupt) {
  GradMap grads = g.backward(loss);
  double worst = 0.0;
  bool first = true;
  for (int id = 0; id < g.size(); ++id) {
    const Node& node = g.node(id);
    if (node.op != Op::kParam) continue;
    Tensor analytic = grads.at(node.name);
    if (corrupt && first) {
      analytic[0] += 0.25f;
      first = false;
    }
    auto fn = [&](const Tensor& x) {
      RefEval probe(g);
      probe.set_leaf(id, x);
      return probe.scalar(loss.id);
    };
    Tensor numeric = numeric_grad(fn, node.out, 1e-4);
    worst = std::max(worst, static_cast<double>(max_rel_err(analytic, numeric)));
  }
  return worst;
}

// Random signed weighting turns a tensor output into a scalar without
// flattening any gradient direction.
Tensor weighting(Rng& rng, std::vector<int> shape) {
  Tensor w = rng.uniform_tensor(std::move(shape), 0.5, 1.5);
  for (int64_t i = 0; i < w.numel(); ++i) {
    if (rng.uniform() < 0.5) w[i] = -w[i];
  }
  return w;
}

double afp_err(uint32_t seed, bool corrupt) {
  Rng rng(seed);
  const int m = kBlockPixels;
  AfpParams params = AfpParams::init(kReprs, kChannels, rng);
  Tensor f = rng.normal_tensor({m, kChannels}, 1.0);

  Graph g;
  AfpVars pv = bind_params(g, params, "afp");
  AfpRun run = afp_run(g, g.param("f", std::move(f)), pv, kDefaultAfpIterations, false);
  Var loss = add(sum_all(mul(run.h, g.input(weighting(rng, {kReprs, kChannels})))),
                 sum_all(mul(run.w, g.input(weighting(rng, {m, kReprs})))));
  return check_graph(g, loss, corrupt);
}

double isd_err(uint32_t seed, bool corrupt) {
  Rng rng(seed);
  const int m = kBlockPixels;
  std::vector<IsdLayerParams> layers;
  for (int i = 0; i < kDefaultIsdLayers; ++i) layers.push_back(IsdLayerParams::init(kChannels, rng));
  Tensor p = rng.normal_tensor({m, kChannels}, 1.0);
  Tensor h = rng.normal_tensor({kReprs, kChannels}, 1.0);

  Graph g;
  std::vector<IsdLayerVars> lv;
  for (size_t i = 0; i < layers.size(); ++i) {
    lv.push_back(bind_params(g, layers[i], "isd." + std::to_string(i)));
  }
  Var d = isd_run(g, g.param("p", std::move(p)), g.param("h", std::move(h)), lv);
  Var loss = sum_all(mul(d, g.input(weighting(rng, {m, kChannels}))));
  return check_graph(g, loss, corrupt);
}

double edd_err(uint32_t seed, bool corrupt) {
  Rng rng(seed);
  const int m = kBlockPixels;
  EddHead head = EddHead::init(kReprs, kChannels, rng);
  Tensor p = rng.normal_tensor({m, kChannels}, 1.0);

  Graph g;
  Var out = edd_head(g, g.param("p", std::move(p)), bind_params(g, head, "edd"), 0.7f);
  Var loss = sum_all(mul(out, g.input(weighting(rng, {m, 1}))));
  return check_graph(g, loss, corrupt);
}

double si_log_err(uint32_t seed, bool corrupt) {
  Rng rng(seed);
  Tensor pred = rng.uniform_tensor({1, kSide, kSide}, 0.8, 6.0);
  Tensor gt = rng.uniform_tensor({1, kSide, kSide}, 0.8, 6.0);
  EvalMask mask;
  mask.flags = Tensor::full({kSide, kSide}, 1.0f);
  for (int i = 0; i < 40; ++i) {
    mask.flags[rng.uniform_int(0, kSide * kSide - 1)] = 0.0f;
  }
  mask.depth_cap = 5.5f;

  Graph g;
  Var loss = build_si_log_loss(g, g.param("pred", std::move(pred)), gt, mask);
  return check_graph(g, loss, corrupt);
}

}  // namespace

std::vector<GradBlockResult> run_gradient_blocks(const std::string& which, uint32_t seed,
                                                 double tolerance, bool corrupt) {
  struct Entry {
    const char* name;
    double (*fn)(uint32_t, bool);
  };
  static const Entry table[] = {
      {"afp", afp_err}, {"isd", isd_err}, {"edd", edd_err}, {"si_log", si_log_err}};

  std::vector<GradBlockResult> out;
  for (const Entry& e : table) {
    if (which != "all" && which != e.name) continue;
    GradBlockResult r;
    r.name = e.name;
    r.max_err = e.fn(seed, corrupt);
    r.pass = r.max_err < tolerance;
    out.push_back(r);
  }
  if (out.empty()) {
    throw ContractError("gradcheck: unknown block selector '" + which +
                        "' (expected afp, isd, edd, si_log, or all)");
  }
  return out;
}

}  // namespace idsc
