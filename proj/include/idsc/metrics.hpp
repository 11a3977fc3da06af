#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "idsc/graph.hpp"
#include "idsc/tensor.hpp"

namespace idsc {

inline constexpr float kSiLogAlpha = 10.0f;
inline constexpr float kSiLogLambda = 0.15f;

// Which pixels participate in loss and evaluation. Flags and crop restrict
// by position; ground-truth depth must additionally be positive and at most
// depth_cap. An empty flags tensor means every position is usable.
struct EvalMask {
  Tensor flags;  // [h x w], nonzero = usable
  float depth_cap = std::numeric_limits<float>::infinity();
  int crop_x0 = 0, crop_y0 = 0;
  int crop_x1 = -1, crop_y1 = -1;  // exclusive; -1 means the full extent

  bool usable(int y, int x, int h, int w) const;
};

struct DepthEvalReport {
  double rms = 0.0;
  double rms_log = 0.0;
  double log10 = 0.0;
  double a_rel = 0.0;
  double s_rel = 0.0;
  double d05 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double si_log = 0.0;
  int64_t n_valid = 0;
};

struct NormalEvalReport {
  double mean_deg = 0.0;
  double median_deg = 0.0;
  double rms_deg = 0.0;
  double in_11_5 = 0.0, in_22_5 = 0.0, in_30 = 0.0;
  int64_t n_valid = 0;
};

// Scale-invariant log loss alpha*sqrt(V[eps] + lambda*E^2[eps]) with
// eps = ln pred - ln gt over valid pixels; population variance, V = 0 when
// only one pixel is valid. pred and gt are [h x w] or [1 x h x w].
// Throws DataError when no pixel is valid and DomainError when a valid
// prediction is non-positive.
float si_log_loss(const Tensor& pred, const Tensor& gt, const EvalMask& mask,
                  float alpha = kSiLogAlpha, float lambda = kSiLogLambda);

// Same objective recorded on a graph for training. pred must be positive
// everywhere (not only on valid pixels) so the log stays finite; invalid
// pixels receive exactly zero gradient.
Var build_si_log_loss(Graph& g, Var pred, const Tensor& gt, const EvalMask& mask,
                      float alpha = kSiLogAlpha, float lambda = kSiLogLambda);

// Mean (1 - cosine similarity) against unit target normals over the valid
// pixels, recorded on a graph. Targets must be unit length on valid pixels
// (within 1e-3, DomainError beyond); invalid pixels get exactly zero weight
// and zero gradient. DataError when no pixel is valid.
Var build_cosine_normal_loss(Graph& g, Var pred, const Tensor& gt, const EvalMask& mask);

DepthEvalReport depth_metrics(const Tensor& pred, const Tensor& gt, const EvalMask& mask);

// pred and gt hold unit 3-vectors as [3 x h x w]; tolerates norm error up to
// 1e-3 and throws DomainError beyond that.
NormalEvalReport normal_metrics(const Tensor& pred, const Tensor& gt, const EvalMask& mask);

// Unweighted mean of per-sample reports; n_valid sums.
DepthEvalReport aggregate(const std::vector<DepthEvalReport>& reports);
NormalEvalReport aggregate(const std::vector<NormalEvalReport>& reports);

// Flat `key = value` record, %.6g numbers, one key per line.
std::string kv_record(const DepthEvalReport& r);
std::string kv_record(const NormalEvalReport& r);

}  // namespace idsc
