#include "idsc/model.hpp"

#include <algorithm>
#include <cmath>

#include "idsc/errors.hpp"

namespace idsc {

namespace {

constexpr float kDepthFloor = 1e-3f;

// RGB plus two normalized pixel-coordinate planes: scene depth is strongly
// tied to absolute position, which convolution alone cannot observe.
constexpr int kEncInputPlanes = 5;

Tensor with_coord_planes(const Tensor& image, int h, int w) {
  Tensor out({kEncInputPlanes, h, w});
  std::copy(image.data(), image.data() + image.numel(), out.data());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at3(3, y, x) = 2.0f * static_cast<float>(x) / static_cast<float>(w - 1) - 1.0f;
      out.at3(4, y, x) = 2.0f * static_cast<float>(y) / static_cast<float>(h - 1) - 1.0f;
    }
  }
  return out;
}

// Level index 0, 1, 2 <-> downsample factor 2, 4, 8.
const char* kLevelTag[3] = {"2", "4", "8"};

Var to_rows(Graph& g, Var x) {
  const Tensor& v = g.value(x);
  return transpose(reshape(x, {v.dim(0), v.dim(1) * v.dim(2)}));
}

Var from_rows(Graph& g, Var rows, int h, int w) {
  const Tensor& v = g.value(rows);
  return reshape(transpose(rows), {v.dim(1), h, w});
}

}  // namespace

void ModelConfig::validate() const {
  if (height < 8 || width < 8 || height % 8 != 0 || width % 8 != 0) {
    throw ConfigError("model.height and model.width must be positive multiples of 8, got " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
  if (channels < 2) throw ConfigError("model.channels must be at least 2");
  if (n_idrs < 1) throw ConfigError("model.n_idrs must be positive");
  if (head != "isd" && head != "edd") {
    throw ConfigError("model.head must be 'isd' or 'edd', got '" + head + "'");
  }
  if (output != "depth" && output != "normals") {
    throw ConfigError("model.output must be 'depth' or 'normals', got '" + output + "'");
  }
  if (head == "edd" && output == "normals") {
    throw ConfigError("the edd head predicts scalar depth values and cannot emit normals");
  }
  if (!(depth_min > 0.0f) || !(depth_max > depth_min)) {
    throw ConfigError("depth range must satisfy 0 < model.depth_min < model.depth_max");
  }
  if (afp_iters < 0) throw ConfigError("afp.iters must be >= 0");
  if (isd_layers < 1) throw ConfigError("isd.layers must be positive");
  if (!(edd_temperature > 0.0f)) throw ConfigError("edd.temperature must be positive");
}

ConvStage ConvStage::init(int in, int out, Rng& rng) {
  ConvStage s;
  s.w = rng.normal_tensor({out, in, 3, 3}, std::sqrt(1.0 / (9.0 * in)));
  s.b = Tensor({out});
  s.ln_g = Tensor::full({out}, 1.0f);
  s.ln_b = Tensor({out});
  return s;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const int c = cfg_.channels;

  enc_.push_back(ConvStage::init(kEncInputPlanes, c, rng));
  enc_.push_back(ConvStage::init(c, 2 * c, rng));
  enc_.push_back(ConvStage::init(2 * c, 4 * c, rng));

  lateral_.push_back(Affine::init(c, c, rng));
  lateral_.push_back(Affine::init(2 * c, c, rng));
  lateral_.push_back(Affine::init(4 * c, c, rng));

  if (cfg_.use_msda) {
    for (int t = 0; t < 3; ++t) {
      msda_gate_.push_back(Tensor({1}));
      std::vector<Affine> from;
      for (int s = 0; s < 3; ++s) {
        if (s != t) from.push_back(Affine::init(c, c, rng));
      }
      msda_mix_.push_back(std::move(from));
    }
  }

  for (int l = 0; l < 3; ++l) {
    pyr_ln_.emplace_back(Tensor::full({c}, 1.0f), Tensor({c}));
  }

  if (cfg_.head == "isd") {
    for (int l = 0; l < 3; ++l) {
      if (cfg_.use_afp) {
        afp_.push_back(AfpParams::init(cfg_.n_idrs, c, rng));
      } else {
        prior_.push_back(rng.truncated_normal_tensor({cfg_.n_idrs, c}, 0.02));
      }
    }
    for (int l = 0; l < 3; ++l) {
      std::vector<IsdLayerParams> stack;
      for (int i = 0; i < cfg_.isd_layers; ++i) stack.push_back(IsdLayerParams::init(c, rng));
      isd_.push_back(std::move(stack));
    }
    out_proj_ = Affine::init(c, cfg_.out_channels(), rng);
    if (cfg_.output == "depth") {
      out_scale_ = Tensor::scalar(0.5f * (cfg_.depth_min + cfg_.depth_max));
    }
  } else {
    edd_ = EddHead::init_depth_bins(kEddBinCount, c, cfg_.depth_min, cfg_.depth_max, rng);
  }
}

template <typename Fn>
void Model::visit_params(Fn&& fn) const {
  for (int l = 0; l < 3; ++l) {
    const std::string p = std::string("enc") + kLevelTag[l];
    fn(p + ".w", enc_[l].w);
    fn(p + ".b", enc_[l].b);
    fn(p + ".ln_g", enc_[l].ln_g);
    fn(p + ".ln_b", enc_[l].ln_b);
  }
  for (int l = 0; l < 3; ++l) {
    const std::string p = std::string("lat") + kLevelTag[l];
    fn(p + ".w", lateral_[l].w);
    fn(p + ".b", lateral_[l].b);
  }
  if (cfg_.use_msda) {
    for (int t = 0; t < 3; ++t) {
      const std::string p = std::string("msda") + kLevelTag[t];
      fn(p + ".gate", msda_gate_[t]);
      int idx = 0;
      for (int s = 0; s < 3; ++s) {
        if (s == t) continue;
        fn(p + ".from" + kLevelTag[s] + ".w", msda_mix_[t][idx].w);
        fn(p + ".from" + kLevelTag[s] + ".b", msda_mix_[t][idx].b);
        ++idx;
      }
    }
  }
  for (int l = 0; l < 3; ++l) {
    const std::string p = std::string("pyr") + kLevelTag[l];
    fn(p + ".ln_g", pyr_ln_[l].first);
    fn(p + ".ln_b", pyr_ln_[l].second);
  }
  if (cfg_.head == "isd") {
    for (int l = 0; l < 3; ++l) {
      const std::string p = std::string("afp") + kLevelTag[l];
      if (cfg_.use_afp) {
        const AfpParams& a = afp_[l];
        fn(p + ".h_prior", a.h_prior);
        fn(p + ".q.w", a.q.w);
        fn(p + ".q.b", a.q.b);
        fn(p + ".k.w", a.k.w);
        fn(p + ".k.b", a.k.b);
        fn(p + ".v.w", a.v.w);
        fn(p + ".v.b", a.v.b);
        fn(p + ".ffn.ln_g", a.ffn.ln_g);
        fn(p + ".ffn.ln_b", a.ffn.ln_b);
        fn(p + ".ffn.w1", a.ffn.w1);
        fn(p + ".ffn.b1", a.ffn.b1);
        fn(p + ".ffn.w2", a.ffn.w2);
        fn(p + ".ffn.b2", a.ffn.b2);
      } else {
        fn(p + ".h_prior", prior_[l]);
      }
    }
    for (int l = 0; l < 3; ++l) {
      for (size_t i = 0; i < isd_[l].size(); ++i) {
        const std::string p =
            std::string("isd") + kLevelTag[l] + "." + std::to_string(i);
        const IsdLayerParams& lp = isd_[l][i];
        fn(p + ".q.w", lp.q.w);
        fn(p + ".q.b", lp.q.b);
        fn(p + ".k.w", lp.k.w);
        fn(p + ".v.w", lp.v.w);
        fn(p + ".v.b", lp.v.b);
        fn(p + ".ffn.ln_g", lp.ffn.ln_g);
        fn(p + ".ffn.ln_b", lp.ffn.ln_b);
        fn(p + ".ffn.w1", lp.ffn.w1);
        fn(p + ".ffn.b1", lp.ffn.b1);
        fn(p + ".ffn.w2", lp.ffn.w2);
        fn(p + ".ffn.b2", lp.ffn.b2);
      }
    }
    fn("out.w", out_proj_.w);
    fn("out.b", out_proj_.b);
    if (cfg_.output == "depth") fn("out.scale", out_scale_);
  } else {
    fn("edd.r_repr", edd_.r_repr);
    fn("edd.v", edd_.v);
  }
}

std::vector<std::pair<std::string, Tensor*>> Model::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  visit_params([&](const std::string& name, const Tensor& t) {
    out.emplace_back(name, const_cast<Tensor*>(&t));
  });
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_params() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  visit_params([&](const std::string& name, const Tensor& t) { out.emplace_back(name, &t); });
  return out;
}

int64_t Model::param_count() const {
  int64_t n = 0;
  visit_params([&](const std::string&, const Tensor& t) { n += t.numel(); });
  return n;
}

BoundModel Model::bind(Graph& g) const {
  BoundModel bm;
  for (int l = 0; l < 3; ++l) {
    const std::string p = std::string("enc") + kLevelTag[l];
    bm.enc.push_back(ConvStageVars{
        g.param(p + ".w", enc_[l].w), g.param(p + ".b", enc_[l].b),
        g.param(p + ".ln_g", enc_[l].ln_g), g.param(p + ".ln_b", enc_[l].ln_b)});
  }
  for (int l = 0; l < 3; ++l) {
    bm.lateral.push_back(bind_params(g, lateral_[l], std::string("lat") + kLevelTag[l]));
  }
  if (cfg_.use_msda) {
    for (int t = 0; t < 3; ++t) {
      const std::string p = std::string("msda") + kLevelTag[t];
      bm.msda_gate.push_back(g.param(p + ".gate", msda_gate_[t]));
      std::vector<AffineVars> from;
      int idx = 0;
      for (int s = 0; s < 3; ++s) {
        if (s == t) continue;
        from.push_back(bind_params(g, msda_mix_[t][idx], p + ".from" + kLevelTag[s]));
        ++idx;
      }
      bm.msda_mix.push_back(std::move(from));
    }
  }
  for (int l = 0; l < 3; ++l) {
    const std::string p = std::string("pyr") + kLevelTag[l];
    bm.pyr_ln.emplace_back(g.param(p + ".ln_g", pyr_ln_[l].first),
                           g.param(p + ".ln_b", pyr_ln_[l].second));
  }
  if (cfg_.head == "isd") {
    for (int l = 0; l < 3; ++l) {
      const std::string p = std::string("afp") + kLevelTag[l];
      if (cfg_.use_afp) {
        bm.afp.push_back(bind_params(g, afp_[l], p));
      } else {
        bm.prior.push_back(g.param(p + ".h_prior", prior_[l]));
      }
    }
    for (int l = 0; l < 3; ++l) {
      std::vector<IsdLayerVars> stack;
      for (size_t i = 0; i < isd_[l].size(); ++i) {
        stack.push_back(bind_params(
            g, isd_[l][i], std::string("isd") + kLevelTag[l] + "." + std::to_string(i)));
      }
      bm.isd.push_back(std::move(stack));
    }
    bm.out_proj = bind_params(g, out_proj_, "out");
    if (cfg_.output == "depth") bm.out_scale = g.param("out.scale", out_scale_);
  } else {
    bm.edd = bind_params(g, edd_, "edd");
  }
  return bm;
}

ForwardArtifacts Model::forward(Graph& g, const BoundModel& bm, const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != cfg_.height ||
      image.dim(2) != cfg_.width) {
    throw ShapeError("forward: image must be [3 x " + std::to_string(cfg_.height) + " x " +
                     std::to_string(cfg_.width) + "], got " + shape_str(image.shape()));
  }
  const int hs[3] = {cfg_.height / 2, cfg_.height / 4, cfg_.height / 8};
  const int ws[3] = {cfg_.width / 2, cfg_.width / 4, cfg_.width / 8};

  // Encoder: three stride-2 stages, each normalized over channels.
  Var cur = g.input(with_coord_planes(image, cfg_.height, cfg_.width));
  std::vector<Var> feat_rows;
  for (int l = 0; l < 3; ++l) {
    Var conv = conv2d(cur, bm.enc[l].w, bm.enc[l].b, 2, 1);
    Var rows = layer_norm_rows(to_rows(g, gelu(conv)), bm.enc[l].ln_g, bm.enc[l].ln_b);
    feat_rows.push_back(rows);
    if (l < 2) cur = from_rows(g, rows, hs[l], ws[l]);
  }

  std::vector<Var> lat;
  for (int l = 0; l < 3; ++l) lat.push_back(apply(feat_rows[l], bm.lateral[l]));

  // Optional cross-scale mixing, an identity at gate == 0.
  if (cfg_.use_msda) {
    std::vector<Var> mixed;
    for (int t = 0; t < 3; ++t) {
      Var acc{nullptr, -1};
      int idx = 0;
      for (int s = 0; s < 3; ++s) {
        if (s == t) continue;
        Var resampled =
            to_rows(g, bilinear_resize(from_rows(g, lat[s], hs[s], ws[s]), hs[t], ws[t]));
        Var term = apply(resampled, bm.msda_mix[t][idx]);
        acc = acc.valid() ? add(acc, term) : term;
        ++idx;
      }
      mixed.push_back(add(lat[t], mul_bcast(acc, bm.msda_gate[t])));
    }
    lat = std::move(mixed);
  }

  // Top-down pyramid: coarse content flows into finer scales.
  std::vector<Var> pyr(3, Var{nullptr, -1});
  pyr[2] = lat[2];
  for (int l = 1; l >= 0; --l) {
    Var up = to_rows(g, bilinear_resize(from_rows(g, pyr[l + 1], hs[l + 1], ws[l + 1]),
                                        hs[l], ws[l]));
    pyr[l] = add(lat[l], up);
  }

  std::vector<Var> embed;
  for (int l = 0; l < 3; ++l) {
    embed.push_back(layer_norm_rows(pyr[l], bm.pyr_ln[l].first, bm.pyr_ln[l].second));
  }

  ForwardArtifacts art;
  if (cfg_.head == "edd") {
    Var scores = edd_head(g, embed[0], bm.edd, cfg_.edd_temperature);
    Var map = from_rows(g, scores, hs[0], ws[0]);
    art.prediction = bilinear_resize(map, cfg_.height, cfg_.width);
    return art;
  }

  std::vector<Var> maps;
  for (int l = 0; l < 3; ++l) {
    Var idrs;
    if (cfg_.use_afp) {
      AfpRun run = afp_run(g, embed[l], bm.afp[l], cfg_.afp_iters, cfg_.afp_scale_logits);
      idrs = run.h;
      art.partitions.push_back(run.w);
    } else {
      idrs = bm.prior[l];
    }
    Var decoded = isd_run(g, embed[l], idrs, bm.isd[l]);
    Var rows = apply(decoded, bm.out_proj);
    if (cfg_.output == "depth") {
      rows = mul_bcast(add_scalar(softplus(rows), kDepthFloor), bm.out_scale);
    } else {
      rows = l2_normalize_rows(rows);
    }
    maps.push_back(from_rows(g, rows, hs[l], ws[l]));
  }
  art.scale_maps = maps;
  Var fused = fuse_mean(g, maps, cfg_.height, cfg_.width);
  if (cfg_.output == "normals") {
    fused = from_rows(g, l2_normalize_rows(to_rows(g, fused)), cfg_.height, cfg_.width);
  }
  art.prediction = fused;
  return art;
}

ForwardArtifacts Model::build_forward(Graph& g, const Tensor& image) const {
  return forward(g, bind(g), image);
}

Tensor Model::predict(const Tensor& image) const {
  Graph g;
  return g.value(build_forward(g, image).prediction);
}

void Model::set_output_scale(float scale) {
  if (cfg_.head != "isd" || cfg_.output != "depth") {
    throw ContractError("set_output_scale: only the isd depth head has an output scale");
  }
  if (!(scale > 0.0f)) throw ContractError("set_output_scale: scale must be positive");
  out_scale_[0] = scale;
}

NamedTensors Model::state() const {
  NamedTensors out;
  visit_params([&](const std::string& name, const Tensor& t) { out.emplace_back(name, t); });
  return out;
}

void Model::load_state(const NamedTensors& entries) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : entries) {
    if (!by_name.emplace(name, &t).second) {
      throw ContractError("load_state: duplicate entry '" + name + "'");
    }
  }
  size_t used = 0;
  visit_params([&](const std::string& name, const Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ContractError("load_state: missing entry '" + name + "'");
    if (it->second->shape() != t.shape()) {
      throw ContractError("load_state: shape mismatch for '" + name + "': expected " +
                          shape_str(t.shape()) + ", got " + shape_str(it->second->shape()));
    }
    const_cast<Tensor&>(t) = *it->second;
    ++used;
  });
  if (used != by_name.size()) {
    throw ContractError("load_state: " + std::to_string(by_name.size() - used) +
                        " unrecognized entries");
  }
}

float median_valid_depth(const std::vector<TrainSample>& data) {
  std::vector<float> vals;
  for (const TrainSample& s : data) {
    if (s.target.rank() != 3 || s.target.dim(0) != 1) {
      throw ContractError("median_valid_depth: targets must be [1 x h x w] depth maps");
    }
    const int h = s.target.dim(1), w = s.target.dim(2);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float d = s.target.at3(0, y, x);
        if (!s.mask.usable(y, x, h, w) || !(d > 0.0f)) continue;
        if (s.mask.depth_cap > 0.0f && d > s.mask.depth_cap) continue;
        vals.push_back(d);
      }
    }
  }
  if (vals.empty()) throw DataError("median_valid_depth: no valid target depths");
  std::sort(vals.begin(), vals.end());
  return vals[(vals.size() - 1) / 2];
}

namespace {

std::vector<Tensor*> raw_pointers(std::vector<std::pair<std::string, Tensor*>>& params) {
  std::vector<Tensor*> out;
  out.reserve(params.size());
  for (auto& [name, t] : params) out.push_back(t);
  return out;
}

}  // namespace

Trainer::Trainer(Model& model, const AdamWConfig& opt_cfg)
    : model_(model), params_(model.named_params()), opt_(raw_pointers(params_), opt_cfg) {}

TrainStepResult Trainer::step(const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw ContractError("train step: empty batch");
  Graph g;
  const BoundModel bm = model_.bind(g);
  Var total{nullptr, -1};
  for (const TrainSample& s : batch) {
    ForwardArtifacts art = model_.forward(g, bm, s.image);
    Var loss = model_.config().output == "depth"
                   ? build_si_log_loss(g, art.prediction, s.target, s.mask)
                   : build_cosine_normal_loss(g, art.prediction, s.target, s.mask);
    total = total.valid() ? add(total, loss) : loss;
  }
  total = mul_scalar(total, 1.0f / static_cast<float>(batch.size()));

  GradMap grads = g.backward(total);
  std::vector<const Tensor*> gs;
  gs.reserve(params_.size());
  for (const auto& [name, t] : params_) gs.push_back(&grads.at(name));
  TrainStepResult out;
  out.lr = opt_.step(gs);
  out.loss = g.value(total)[0];
  return out;
}

}  // namespace idsc
