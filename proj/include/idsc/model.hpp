#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "idsc/afp.hpp"
#include "idsc/checkpoint.hpp"
#include "idsc/graph.hpp"
#include "idsc/isd.hpp"
#include "idsc/metrics.hpp"
#include "idsc/optim.hpp"

namespace idsc {

// Bin count of the explicit-discretization head; not tied to n_idrs.
inline constexpr int kEddBinCount = 32;

struct ModelConfig {
  int height = 48;
  int width = 64;
  int channels = 32;  // embedding width C at every scale
  int n_idrs = 8;     // internal representations per resolution

  std::string head = "isd";      // isd | edd
  std::string output = "depth";  // depth | normals
  bool use_afp = true;   // off: the internal representations stay at their priors
  bool use_msda = false; // cross-scale mixer in front of the decoder

  float depth_min = 1.0f;
  float depth_max = 10.0f;
  uint64_t seed = 0;

  int afp_iters = kDefaultAfpIterations;
  bool afp_scale_logits = false;
  int isd_layers = kDefaultIsdLayers;
  float edd_temperature = 1.0f;

  int out_channels() const { return output == "normals" ? 3 : 1; }
  void validate() const;  // throws ConfigError
};

// Stride-2 3x3 convolution, GeLU, then layer norm over channels.
struct ConvStage {
  Tensor w, b;  // [out x in x 3 x 3], [out]
  Tensor ln_g, ln_b;
  static ConvStage init(int in, int out, Rng& rng);
};

struct ConvStageVars {
  Var w, b, ln_g, ln_b;
};

// Everything the forward pass needs, bound into one graph. Rebinding per
// graph keeps the model itself free of graph state.
struct BoundModel {
  std::vector<ConvStageVars> enc;
  std::vector<AffineVars> lateral;
  std::vector<Var> msda_gate;                   // empty unless use_msda
  std::vector<std::vector<AffineVars>> msda_mix;  // [target][other-scale]
  std::vector<std::pair<Var, Var>> pyr_ln;      // gain, bias per scale
  std::vector<AfpVars> afp;      // full stage when use_afp
  std::vector<Var> prior;        // bare priors when !use_afp
  std::vector<std::vector<IsdLayerVars>> isd;
  AffineVars out_proj;
  Var out_scale;  // depth mode only
  EddVars edd;    // edd head only
};

struct ForwardArtifacts {
  Var prediction;               // [out_channels x H x W]
  std::vector<Var> scale_maps;  // per-resolution maps before fusion (isd head)
  std::vector<Var> partitions;  // pixel-to-IDR weights per resolution (use_afp)
};

// Three-scale pipeline: encoder at /2, /4, /8 -> laterals (optional
// cross-scale mixer) -> top-down pyramid -> per-resolution bottleneck and
// decode -> fused prediction. Parameter initialization is a pure function
// of the config (flags change which parameters exist and hence the draw
// order, so configs are comparable only to themselves).
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  // Creation-order walk over (name, tensor); identical order every call.
  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
  int64_t param_count() const;

  BoundModel bind(Graph& g) const;
  ForwardArtifacts forward(Graph& g, const BoundModel& bm, const Tensor& image) const;
  ForwardArtifacts build_forward(Graph& g, const Tensor& image) const;

  Tensor predict(const Tensor& image) const;

  // Output scale of the depth positive-map, normally set to the median
  // depth of the training targets before the first step.
  void set_output_scale(float scale);

  NamedTensors state() const;
  void load_state(const NamedTensors& entries);

 private:
  ModelConfig cfg_;
  std::vector<ConvStage> enc_;
  std::vector<Affine> lateral_;
  std::vector<Tensor> msda_gate_;
  std::vector<std::vector<Affine>> msda_mix_;
  std::vector<std::pair<Tensor, Tensor>> pyr_ln_;
  std::vector<AfpParams> afp_;
  std::vector<Tensor> prior_;
  std::vector<std::vector<IsdLayerParams>> isd_;
  Affine out_proj_;
  Tensor out_scale_;
  EddHead edd_;

  template <typename Fn>
  void visit_params(Fn&& fn) const;
};

struct TrainSample {
  Tensor image;   // [3 x H x W]
  Tensor target;  // [1 x H x W] depth or [3 x H x W] unit normals
  EvalMask mask;
};

// Median of the valid target depths across the set; DataError when empty.
float median_valid_depth(const std::vector<TrainSample>& data);

struct TrainStepResult {
  double loss = 0.0;
  double lr = 0.0;
};

// One optimizer around one model: builds the batch graph, averages the
// per-sample losses, backpropagates, and applies the update.
class Trainer {
 public:
  Trainer(Model& model, const AdamWConfig& opt_cfg);

  TrainStepResult step(const std::vector<TrainSample>& batch);
  int steps_taken() const { return opt_.steps_taken(); }

 private:
  Model& model_;
  std::vector<std::pair<std::string, Tensor*>> params_;
  AdamW opt_;
};

}  // namespace idsc
