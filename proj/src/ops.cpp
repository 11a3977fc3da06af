#include "idsc/ops.hpp"

#include <algorithm>
#include <cmath>

namespace idsc::ops {

static void require_rank(const Tensor& t, int rank, const char* who) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(who) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner extents differ: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  // i,k,j loop order: each out[i][j] still accumulates in increasing k, and
  // the j loop vectorizes without reassociating the sum.
  for (int i = 0; i < m; ++i) {
    const float* arow = pa + static_cast<size_t>(i) * k;
    float* orow = po + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const float av = arow[kk];
      const float* brow = pb + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor transpose2d(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const int m = a.dim(0), n = a.dim(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at2(j, i) = a.at2(i, j);
  }
  return out;
}

// Iterates the tensor as [outer, n, inner] around the softmax axis.
struct AxisSlices {
  int64_t outer, n, inner;
};

static AxisSlices axis_slices(const Tensor& x, int axis, const char* who) {
  if (axis < 0 || axis >= x.rank()) {
    throw ShapeError(std::string(who) + ": axis " + std::to_string(axis) +
                     " out of range for " + shape_str(x.shape()));
  }
  AxisSlices s{1, x.dim(axis), 1};
  for (int i = 0; i < axis; ++i) s.outer *= x.dim(i);
  for (int i = axis + 1; i < x.rank(); ++i) s.inner *= x.dim(i);
  return s;
}

Tensor softmax_along(const Tensor& x, int axis) {
  AxisSlices s = axis_slices(x, axis, "softmax_along");
  Tensor out(x.shape());
  const float* px = x.data();
  float* po = out.data();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t in = 0; in < s.inner; ++in) {
      const int64_t base = o * s.n * s.inner + in;
      float mx = px[base];
      for (int64_t i = 1; i < s.n; ++i) mx = std::max(mx, px[base + i * s.inner]);
      double denom = 0.0;
      for (int64_t i = 0; i < s.n; ++i) {
        float e = std::exp(px[base + i * s.inner] - mx);
        po[base + i * s.inner] = e;
        denom += e;
      }
      const float inv = static_cast<float>(1.0 / denom);
      for (int64_t i = 0; i < s.n; ++i) po[base + i * s.inner] *= inv;
    }
  }
  return out;
}

void softmax_backward(const Tensor& y, const Tensor& dy, int axis, Tensor* dx) {
  AxisSlices s = axis_slices(y, axis, "softmax_backward");
  *dx = Tensor(y.shape());
  const float* py = y.data();
  const float* pdy = dy.data();
  float* pdx = dx->data();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t in = 0; in < s.inner; ++in) {
      const int64_t base = o * s.n * s.inner + in;
      double dot = 0.0;
      for (int64_t i = 0; i < s.n; ++i) {
        dot += static_cast<double>(py[base + i * s.inner]) * pdy[base + i * s.inner];
      }
      for (int64_t i = 0; i < s.n; ++i) {
        const int64_t k = base + i * s.inner;
        pdx[k] = py[k] * (pdy[k] - static_cast<float>(dot));
      }
    }
  }
}

struct LerpTap {
  int lo, hi;
  float t;
};

static LerpTap lerp_tap(int out_idx, int in_size, int out_size) {
  // Half-pixel center mapping. For in_size == out_size this yields t == 0 and
  // lo == out_idx, so the resize degenerates to an exact copy.
  double src = (out_idx + 0.5) * (static_cast<double>(in_size) / out_size) - 0.5;
  int lo = static_cast<int>(std::floor(src));
  float t = static_cast<float>(src - lo);
  LerpTap tap;
  tap.lo = std::clamp(lo, 0, in_size - 1);
  tap.hi = std::clamp(lo + 1, 0, in_size - 1);
  tap.t = t;
  return tap;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
  require_rank(x, 3, "bilinear_resize");
  if (out_h <= 0 || out_w <= 0) {
    throw ShapeError("bilinear_resize: target extents must be positive, got " +
                     std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, out_h, out_w});
  std::vector<LerpTap> xs(static_cast<size_t>(out_w));
  for (int ox = 0; ox < out_w; ++ox) xs[ox] = lerp_tap(ox, w, out_w);
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < out_h; ++oy) {
      LerpTap ty = lerp_tap(oy, h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const LerpTap& tx = xs[ox];
        float a = x.at3(ch, ty.lo, tx.lo);
        float b = x.at3(ch, ty.lo, tx.hi);
        float cc = x.at3(ch, ty.hi, tx.lo);
        float d = x.at3(ch, ty.hi, tx.hi);
        float top = a + tx.t * (b - a);
        float bot = cc + tx.t * (d - cc);
        out.at3(ch, oy, ox) = top + ty.t * (bot - top);
      }
    }
  }
  return out;
}

void bilinear_resize_backward(const std::vector<int>& in_shape, const Tensor& dy, Tensor* dx) {
  const int c = in_shape[0], h = in_shape[1], w = in_shape[2];
  const int out_h = dy.dim(1), out_w = dy.dim(2);
  *dx = Tensor(in_shape);
  std::vector<LerpTap> xs(static_cast<size_t>(out_w));
  for (int ox = 0; ox < out_w; ++ox) xs[ox] = lerp_tap(ox, w, out_w);
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < out_h; ++oy) {
      LerpTap ty = lerp_tap(oy, h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const LerpTap& tx = xs[ox];
        float g = dy.at3(ch, oy, ox);
        dx->at3(ch, ty.lo, tx.lo) += (1.0f - ty.t) * (1.0f - tx.t) * g;
        dx->at3(ch, ty.lo, tx.hi) += (1.0f - ty.t) * tx.t * g;
        dx->at3(ch, ty.hi, tx.lo) += ty.t * (1.0f - tx.t) * g;
        dx->at3(ch, ty.hi, tx.hi) += ty.t * tx.t * g;
      }
    }
  }
}

static void conv_check(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 3, "conv2d");
  require_rank(w, 4, "conv2d");
  require_rank(b, 1, "conv2d");
  if (w.dim(1) != x.dim(0)) {
    throw ShapeError("conv2d: input channels " + shape_str(x.shape()) +
                     " do not match weights " + shape_str(w.shape()));
  }
  if (b.dim(0) != w.dim(0)) {
    throw ShapeError("conv2d: bias " + shape_str(b.shape()) + " does not match weights " +
                     shape_str(w.shape()));
  }
}

namespace {

// Output index range [lo, hi] whose taps k*stride + off fall inside [0, extent).
struct TapRange {
  int lo, hi;
  TapRange(int off, int stride, int extent, int out_extent) {
    lo = off < 0 ? (-off + stride - 1) / stride : 0;
    const int num = extent - 1 - off;
    hi = num < 0 ? -1 : std::min(out_extent - 1, num / stride);
  }
  bool empty() const { return hi < lo; }
};

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  conv_check(x, w, b);
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (ww + 2 * pad - kw) / stride + 1;
  if (oh <= 0 || ow <= 0) {
    throw ShapeError("conv2d: output would be empty for input " + shape_str(x.shape()));
  }
  Tensor out({co, oh, ow});
  const float* xd = x.data();
  const float* wd = w.data();
  float* od = out.data();
  for (int oc = 0; oc < co; ++oc) {
    float* oc_base = od + static_cast<int64_t>(oc) * oh * ow;
    const float bias = b[oc];
    for (int64_t i = 0; i < static_cast<int64_t>(oh) * ow; ++i) oc_base[i] = bias;
    for (int ic = 0; ic < ci; ++ic) {
      const float* ic_base = xd + static_cast<int64_t>(ic) * h * ww;
      for (int ky = 0; ky < kh; ++ky) {
        const TapRange ys(ky - pad, stride, h, oh);
        if (ys.empty()) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const TapRange xs(kx - pad, stride, ww, ow);
          if (xs.empty()) continue;
          const float wv = wd[((static_cast<int64_t>(oc) * ci + ic) * kh + ky) * kw + kx];
          const int n = xs.hi - xs.lo + 1;
          for (int oy = ys.lo; oy <= ys.hi; ++oy) {
            const int iy = oy * stride + ky - pad;
            const float* xr = ic_base + static_cast<int64_t>(iy) * ww + xs.lo * stride + kx - pad;
            float* orow = oc_base + static_cast<int64_t>(oy) * ow + xs.lo;
            if (stride == 1) {
              for (int i = 0; i < n; ++i) orow[i] += wv * xr[i];
            } else {
              for (int i = 0; i < n; ++i) orow[i] += wv * xr[static_cast<int64_t>(i) * stride];
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& dy,
                     Tensor* dx, Tensor* dw, Tensor* db) {
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = dy.dim(1), ow = dy.dim(2);
  *dx = Tensor(x.shape());
  *dw = Tensor(w.shape());
  *db = Tensor({co});
  const float* xd = x.data();
  const float* wd = w.data();
  const float* dyd = dy.data();
  float* dxd = dx->data();
  for (int oc = 0; oc < co; ++oc) {
    const float* dy_base = dyd + static_cast<int64_t>(oc) * oh * ow;
    double acc = 0.0;
    for (int64_t i = 0; i < static_cast<int64_t>(oh) * ow; ++i) acc += dy_base[i];
    (*db)[oc] = static_cast<float>(acc);
    for (int ic = 0; ic < ci; ++ic) {
      const float* ic_base = xd + static_cast<int64_t>(ic) * h * ww;
      float* dx_base = dxd + static_cast<int64_t>(ic) * h * ww;
      for (int ky = 0; ky < kh; ++ky) {
        const TapRange ys(ky - pad, stride, h, oh);
        if (ys.empty()) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const TapRange xs(kx - pad, stride, ww, ow);
          if (xs.empty()) continue;
          const float wv = wd[((static_cast<int64_t>(oc) * ci + ic) * kh + ky) * kw + kx];
          const int n = xs.hi - xs.lo + 1;
          double wacc = 0.0;
          for (int oy = ys.lo; oy <= ys.hi; ++oy) {
            const int iy = oy * stride + ky - pad;
            const float* xr = ic_base + static_cast<int64_t>(iy) * ww + xs.lo * stride + kx - pad;
            float* dxr = dx_base + static_cast<int64_t>(iy) * ww + xs.lo * stride + kx - pad;
            const float* dyr = dy_base + static_cast<int64_t>(oy) * ow + xs.lo;
            if (stride == 1) {
              for (int i = 0; i < n; ++i) {
                const float g = dyr[i];
                wacc += static_cast<double>(g) * xr[i];
                dxr[i] += wv * g;
              }
            } else {
              for (int i = 0; i < n; ++i) {
                const float g = dyr[i];
                const int64_t ix = static_cast<int64_t>(i) * stride;
                wacc += static_cast<double>(g) * xr[ix];
                dxr[ix] += wv * g;
              }
            }
          }
          (*dw)[((static_cast<int64_t>(oc) * ci + ic) * kh + ky) * kw + kx] =
              static_cast<float>(wacc);
        }
      }
    }
  }
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
  require_rank(x, 2, "layer_norm_rows");
  const int m = x.dim(0), c = x.dim(1);
  if (gain.rank() != 1 || gain.dim(0) != c || bias.rank() != 1 || bias.dim(0) != c) {
    throw ShapeError("layer_norm_rows: gain/bias must be [" + std::to_string(c) + "]");
  }
  Tensor out({m, c});
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += x.at2(i, j);
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      double d = x.at2(i, j) - mean;
      var += d * d;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < c; ++j) {
      out.at2(i, j) = static_cast<float>((x.at2(i, j) - mean) * inv) * gain[j] + bias[j];
    }
  }
  return out;
}

void layer_norm_rows_backward(const Tensor& x, const Tensor& gain, float eps, const Tensor& dy,
                              Tensor* dx, Tensor* dgain, Tensor* dbias) {
  const int m = x.dim(0), c = x.dim(1);
  *dx = Tensor(x.shape());
  *dgain = Tensor({c});
  *dbias = Tensor({c});
  std::vector<double> dg(c, 0.0), db(c, 0.0);
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += x.at2(i, j);
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      double d = x.at2(i, j) - mean;
      var += d * d;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    double sum_dyg = 0.0, sum_dyg_xhat = 0.0;
    for (int j = 0; j < c; ++j) {
      double xhat = (x.at2(i, j) - mean) * inv;
      double dyg = static_cast<double>(dy.at2(i, j)) * gain[j];
      sum_dyg += dyg;
      sum_dyg_xhat += dyg * xhat;
      dg[j] += static_cast<double>(dy.at2(i, j)) * xhat;
      db[j] += dy.at2(i, j);
    }
    for (int j = 0; j < c; ++j) {
      double xhat = (x.at2(i, j) - mean) * inv;
      double dyg = static_cast<double>(dy.at2(i, j)) * gain[j];
      dx->at2(i, j) =
          static_cast<float>(inv * (dyg - sum_dyg / c - xhat * sum_dyg_xhat / c));
    }
  }
  for (int j = 0; j < c; ++j) {
    (*dgain)[j] = static_cast<float>(dg[j]);
    (*dbias)[j] = static_cast<float>(db[j]);
  }
}

Tensor l2_normalize_rows(const Tensor& x, float eps) {
  require_rank(x, 2, "l2_normalize_rows");
  const int m = x.dim(0), c = x.dim(1);
  Tensor out({m, c});
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += static_cast<double>(x.at2(i, j)) * x.at2(i, j);
    const double inv = 1.0 / std::sqrt(s + eps);
    for (int j = 0; j < c; ++j) out.at2(i, j) = static_cast<float>(x.at2(i, j) * inv);
  }
  return out;
}

void l2_normalize_rows_backward(const Tensor& x, float eps, const Tensor& dy, Tensor* dx) {
  const int m = x.dim(0), c = x.dim(1);
  *dx = Tensor(x.shape());
  for (int i = 0; i < m; ++i) {
    double s = 0.0, dot = 0.0;
    for (int j = 0; j < c; ++j) s += static_cast<double>(x.at2(i, j)) * x.at2(i, j);
    const double n2 = s + eps;
    const double inv = 1.0 / std::sqrt(n2);
    for (int j = 0; j < c; ++j) dot += static_cast<double>(x.at2(i, j)) * dy.at2(i, j);
    for (int j = 0; j < c; ++j) {
      dx->at2(i, j) = static_cast<float>(inv * (dy.at2(i, j) - x.at2(i, j) * dot / n2));
    }
  }
}

}  // namespace idsc::ops
