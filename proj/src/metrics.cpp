#include "idsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "idsc/errors.hpp"

namespace idsc {

namespace {

constexpr double kRadToDeg = 57.29577951308232;

// Accepts [h x w] or [1 x h x w] and reports the spatial extents.
void spatial_extents(const Tensor& t, const char* who, int* h, int* w) {
  if (t.rank() == 2) {
    *h = t.dim(0);
    *w = t.dim(1);
  } else if (t.rank() == 3 && t.dim(0) == 1) {
    *h = t.dim(1);
    *w = t.dim(2);
  } else {
    throw ShapeError(std::string(who) + ": expected a single-channel map, got " +
                     shape_str(t.shape()));
  }
}

struct ValidSet {
  std::vector<int64_t> idx;  // flat spatial index y*w + x
  int h = 0, w = 0;
};

ValidSet depth_valid_set(const Tensor& pred, const Tensor& gt, const EvalMask& mask,
                         const char* who) {
  ValidSet v;
  int ph, pw;
  spatial_extents(pred, who, &ph, &pw);
  spatial_extents(gt, who, &v.h, &v.w);
  if (ph != v.h || pw != v.w) {
    throw ShapeError(std::string(who) + ": prediction " + shape_str(pred.shape()) +
                     " vs ground truth " + shape_str(gt.shape()));
  }
  for (int y = 0; y < v.h; ++y) {
    for (int x = 0; x < v.w; ++x) {
      const int64_t i = static_cast<int64_t>(y) * v.w + x;
      const float g = gt[i];
      if (!mask.usable(y, x, v.h, v.w) || g <= 0.0f || g > mask.depth_cap) continue;
      if (pred[i] <= 0.0f) {
        throw DomainError(std::string(who) + ": non-positive prediction at pixel (" +
                          std::to_string(y) + ", " + std::to_string(x) + ")");
      }
      v.idx.push_back(i);
    }
  }
  if (v.idx.empty()) throw DataError(std::string(who) + ": no valid pixels");
  return v;
}

void append_kv(std::string* out, const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  *out += key;
  *out += " = ";
  *out += buf;
  *out += "\n";
}

void append_kv(std::string* out, const char* key, int64_t value) {
  *out += key;
  *out += " = ";
  *out += std::to_string(value);
  *out += "\n";
}

}  // namespace

bool EvalMask::usable(int y, int x, int h, int w) const {
  const int x1 = crop_x1 < 0 ? w : crop_x1;
  const int y1 = crop_y1 < 0 ? h : crop_y1;
  if (x < crop_x0 || x >= x1 || y < crop_y0 || y >= y1) return false;
  if (flags.empty()) return true;
  if (flags.rank() != 2 || flags.dim(0) != h || flags.dim(1) != w) {
    throw ShapeError("EvalMask: flags " + shape_str(flags.shape()) + " do not cover " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  return flags.at2(y, x) != 0.0f;
}

float si_log_loss(const Tensor& pred, const Tensor& gt, const EvalMask& mask, float alpha,
                  float lambda) {
  ValidSet v = depth_valid_set(pred, gt, mask, "si_log_loss");
  const double n = static_cast<double>(v.idx.size());
  double mean = 0.0;
  std::vector<double> eps(v.idx.size());
  for (size_t k = 0; k < v.idx.size(); ++k) {
    eps[k] = std::log(static_cast<double>(pred[v.idx[k]])) -
             std::log(static_cast<double>(gt[v.idx[k]]));
    mean += eps[k];
  }
  mean /= n;
  double var = 0.0;
  for (double e : eps) var += (e - mean) * (e - mean);
  var /= n;
  return static_cast<float>(alpha * std::sqrt(var + lambda * mean * mean));
}

Var build_si_log_loss(Graph& g, Var pred, const Tensor& gt, const EvalMask& mask, float alpha,
                      float lambda) {
  const Tensor& pv = g.value(pred);
  for (int64_t i = 0; i < pv.numel(); ++i) {
    if (pv[i] <= 0.0f) {
      throw DomainError("build_si_log_loss: prediction must be positive everywhere, index " +
                        std::to_string(i));
    }
  }
  ValidSet v = depth_valid_set(pv, gt, mask, "build_si_log_loss");

  // Masked statistics over a fixed-size graph: zero weights silence invalid
  // pixels in both sums, and the log of ground truth is precomputed with the
  // kernel's own rounding so a perfect prediction yields an exact zero.
  Tensor weights(pv.shape());
  Tensor log_gt(pv.shape());
  for (int64_t i : v.idx) {
    weights[i] = 1.0f;
    log_gt[i] = static_cast<float>(std::log(static_cast<double>(gt[i])));
  }
  const float inv_n = 1.0f / static_cast<float>(v.idx.size());

  Var w = g.input(std::move(weights));
  Var eps_all = sub(log(pred), g.input(std::move(log_gt)));
  Var mean = mul_scalar(sum_all(mul(eps_all, w)), inv_n);
  Var dev = mul(sub_bcast(eps_all, mean), w);
  Var var = mul_scalar(sum_all(mul(dev, dev)), inv_n);
  return mul_scalar(sqrt(add(var, mul_scalar(mul(mean, mean), lambda))), alpha);
}

Var build_cosine_normal_loss(Graph& g, Var pred, const Tensor& gt, const EvalMask& mask) {
  const Tensor& pv = g.value(pred);
  if (pv.rank() != 3 || pv.dim(0) != 3 || !pv.same_shape(gt)) {
    throw ShapeError("build_cosine_normal_loss: expected matching [3 x h x w] fields, got " +
                     shape_str(pv.shape()) + " and " + shape_str(gt.shape()));
  }
  const int h = pv.dim(1), w = pv.dim(2);
  const int m = h * w;
  Tensor weights({m});
  Tensor gt_rows({m, 3});
  int64_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.usable(y, x, h, w)) continue;
      const int i = y * w + x;
      double ng = 0.0;
      for (int c = 0; c < 3; ++c) {
        const float q = gt.at3(c, y, x);
        gt_rows.at2(i, c) = q;
        ng += static_cast<double>(q) * q;
      }
      if (std::abs(std::sqrt(ng) - 1.0) > 1e-3) {
        throw DomainError("build_cosine_normal_loss: non-unit target at pixel (" +
                          std::to_string(y) + ", " + std::to_string(x) + ")");
      }
      weights[i] = 1.0f;
      ++n;
    }
  }
  if (n == 0) throw DataError("build_cosine_normal_loss: no valid pixels");
  const float inv_n = 1.0f / static_cast<float>(n);

  Var rows = transpose(reshape(pred, {3, m}));
  Var dot = sum_axis1(mul(rows, g.input(std::move(gt_rows))));
  Var err = add_scalar(mul_scalar(dot, -1.0f), 1.0f);
  return mul_scalar(sum_all(mul(err, g.input(std::move(weights)))), inv_n);
}

DepthEvalReport depth_metrics(const Tensor& pred, const Tensor& gt, const EvalMask& mask) {
  ValidSet v = depth_valid_set(pred, gt, mask, "depth_metrics");
  const double n = static_cast<double>(v.idx.size());
  const double t05 = std::sqrt(1.25), t1 = 1.25, t2 = 1.25 * 1.25, t3 = t2 * 1.25;

  DepthEvalReport r;
  r.n_valid = static_cast<int64_t>(v.idx.size());
  double eps_mean = 0.0;
  std::vector<double> eps(v.idx.size());
  for (size_t k = 0; k < v.idx.size(); ++k) {
    const double p = pred[v.idx[k]], g = gt[v.idx[k]];
    const double diff = p - g;
    r.rms += diff * diff;
    const double dl = std::log(p) - std::log(g);
    r.rms_log += dl * dl;
    r.log10 += std::abs(std::log10(p) - std::log10(g));
    r.a_rel += std::abs(diff) / g;
    r.s_rel += diff * diff / g;
    const double ratio = std::max(p / g, g / p);
    r.d05 += ratio < t05 ? 1.0 : 0.0;
    r.d1 += ratio < t1 ? 1.0 : 0.0;
    r.d2 += ratio < t2 ? 1.0 : 0.0;
    r.d3 += ratio < t3 ? 1.0 : 0.0;
    eps[k] = dl;
    eps_mean += dl;
  }
  r.rms = std::sqrt(r.rms / n);
  r.rms_log = std::sqrt(r.rms_log / n);
  r.log10 /= n;
  r.a_rel /= n;
  r.s_rel /= n;
  r.d05 /= n;
  r.d1 /= n;
  r.d2 /= n;
  r.d3 /= n;
  eps_mean /= n;
  double var = 0.0;
  for (double e : eps) var += (e - eps_mean) * (e - eps_mean);
  r.si_log = 100.0 * std::sqrt(var / n);
  return r;
}

NormalEvalReport normal_metrics(const Tensor& pred, const Tensor& gt, const EvalMask& mask) {
  if (pred.rank() != 3 || pred.dim(0) != 3 || !pred.same_shape(gt)) {
    throw ShapeError("normal_metrics: expected matching [3 x h x w] fields, got " +
                     shape_str(pred.shape()) + " and " + shape_str(gt.shape()));
  }
  const int h = pred.dim(1), w = pred.dim(2);
  std::vector<double> angles;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.usable(y, x, h, w)) continue;
      double np = 0.0, ng = 0.0, dot = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double p = pred.at3(c, y, x), q = gt.at3(c, y, x);
        np += p * p;
        ng += q * q;
        dot += p * q;
      }
      if (std::abs(std::sqrt(np) - 1.0) > 1e-3 || std::abs(std::sqrt(ng) - 1.0) > 1e-3) {
        throw DomainError("normal_metrics: non-unit normal at pixel (" + std::to_string(y) +
                          ", " + std::to_string(x) + ")");
      }
      angles.push_back(std::acos(std::clamp(dot, -1.0, 1.0)) * kRadToDeg);
    }
  }
  if (angles.empty()) throw DataError("normal_metrics: no valid pixels");

  NormalEvalReport r;
  r.n_valid = static_cast<int64_t>(angles.size());
  const double n = static_cast<double>(angles.size());
  for (double a : angles) {
    r.mean_deg += a;
    r.rms_deg += a * a;
    r.in_11_5 += a < 11.5 ? 1.0 : 0.0;
    r.in_22_5 += a < 22.5 ? 1.0 : 0.0;
    r.in_30 += a < 30.0 ? 1.0 : 0.0;
  }
  r.mean_deg /= n;
  r.rms_deg = std::sqrt(r.rms_deg / n);
  r.in_11_5 /= n;
  r.in_22_5 /= n;
  r.in_30 /= n;
  std::vector<double> sorted = angles;
  std::sort(sorted.begin(), sorted.end());
  r.median_deg = sorted[(sorted.size() - 1) / 2];  // lower median on even counts
  return r;
}

DepthEvalReport aggregate(const std::vector<DepthEvalReport>& reports) {
  if (reports.empty()) throw ContractError("aggregate: no reports");
  DepthEvalReport a;
  for (const DepthEvalReport& r : reports) {
    a.rms += r.rms;
    a.rms_log += r.rms_log;
    a.log10 += r.log10;
    a.a_rel += r.a_rel;
    a.s_rel += r.s_rel;
    a.d05 += r.d05;
    a.d1 += r.d1;
    a.d2 += r.d2;
    a.d3 += r.d3;
    a.si_log += r.si_log;
    a.n_valid += r.n_valid;
  }
  const double n = static_cast<double>(reports.size());
  a.rms /= n;
  a.rms_log /= n;
  a.log10 /= n;
  a.a_rel /= n;
  a.s_rel /= n;
  a.d05 /= n;
  a.d1 /= n;
  a.d2 /= n;
  a.d3 /= n;
  a.si_log /= n;
  return a;
}

NormalEvalReport aggregate(const std::vector<NormalEvalReport>& reports) {
  if (reports.empty()) throw ContractError("aggregate: no reports");
  NormalEvalReport a;
  for (const NormalEvalReport& r : reports) {
    a.mean_deg += r.mean_deg;
    a.median_deg += r.median_deg;
    a.rms_deg += r.rms_deg;
    a.in_11_5 += r.in_11_5;
    a.in_22_5 += r.in_22_5;
    a.in_30 += r.in_30;
    a.n_valid += r.n_valid;
  }
  const double n = static_cast<double>(reports.size());
  a.mean_deg /= n;
  a.median_deg /= n;
  a.rms_deg /= n;
  a.in_11_5 /= n;
  a.in_22_5 /= n;
  a.in_30 /= n;
  return a;
}

std::string kv_record(const DepthEvalReport& r) {
  std::string out;
  append_kv(&out, "rms", r.rms);
  append_kv(&out, "rms_log", r.rms_log);
  append_kv(&out, "log10", r.log10);
  append_kv(&out, "a_rel", r.a_rel);
  append_kv(&out, "s_rel", r.s_rel);
  append_kv(&out, "d05", r.d05);
  append_kv(&out, "d1", r.d1);
  append_kv(&out, "d2", r.d2);
  append_kv(&out, "d3", r.d3);
  append_kv(&out, "si_log", r.si_log);
  append_kv(&out, "n_valid", r.n_valid);
  return out;
}

std::string kv_record(const NormalEvalReport& r) {
  std::string out;
  append_kv(&out, "mean", r.mean_deg);
  append_kv(&out, "median", r.median_deg);
  append_kv(&out, "rms", r.rms_deg);
  append_kv(&out, "in_11_5", r.in_11_5);
  append_kv(&out, "in_22_5", r.in_22_5);
  append_kv(&out, "in_30", r.in_30);
  append_kv(&out, "n_valid", r.n_valid);
  return out;
}

}  // namespace idsc
