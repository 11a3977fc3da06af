#include "idsc/refeval.hpp"

#include <algorithm>
#include <cmath>

#include "idsc/ops.hpp"

namespace idsc {

void RefEval::set_leaf(int node_id, const Tensor& value) {
  const Node& n = g_.node(node_id);
  if (n.op != Op::kInput && n.op != Op::kParam) {
    throw ContractError("RefEval: only leaf values can be overridden");
  }
  if (!value.same_shape(n.out)) {
    throw ShapeError("RefEval: override shape " + shape_str(value.shape()) +
                     " does not match leaf " + shape_str(n.out.shape()));
  }
  std::vector<double> v(value.vec().begin(), value.vec().end());
  overrides_[node_id] = std::move(v);
}

double RefEval::scalar(int node_id) { return values(node_id)[0]; }

const std::vector<double>& RefEval::values(int node_id) {
  vals_.assign(static_cast<size_t>(node_id) + 1, {});
  for (int id = 0; id <= node_id; ++id) eval_node(id);
  return vals_[static_cast<size_t>(node_id)];
}

void RefEval::eval_node(int id) {
  const Node& n = g_.node(id);
  auto& out = vals_[static_cast<size_t>(id)];
  out.assign(static_cast<size_t>(n.out.numel()), 0.0);
  auto pv = [&](int slot) -> const std::vector<double>& {
    return vals_[static_cast<size_t>(n.parents[slot])];
  };
  auto pshape = [&](int slot) -> const std::vector<int>& {
    return g_.node(n.parents[slot]).out.shape();
  };
  switch (n.op) {
    case Op::kInput:
    case Op::kParam: {
      auto it = overrides_.find(id);
      if (it != overrides_.end()) {
        out = it->second;
      } else {
        out.assign(n.out.vec().begin(), n.out.vec().end());
      }
      break;
    }
    case Op::kAdd: {
      const auto &a = pv(0), &b = pv(1);
      for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
      break;
    }
    case Op::kSub: {
      const auto &a = pv(0), &b = pv(1);
      for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
      break;
    }
    case Op::kMul: {
      const auto &a = pv(0), &b = pv(1);
      for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
      break;
    }
    case Op::kAddScalar: {
      const auto& a = pv(0);
      for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] + n.f0;
      break;
    }
    case Op::kMulScalar: {
      const auto& a = pv(0);
      for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * n.f0;
      break;
    }
    case Op::kMulBcastScalar: {
      const auto& a = pv(0);
      const double s = pv(1)[0];
      for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * s;
      break;
    }
    case Op::kSubBcastScalar: {
      const auto& a = pv(0);
      const double s = pv(1)[0];
      for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] - s;
      break;
    }
    case Op::kAddRowvec: {
      const auto &a = pv(0), &r = pv(1);
      const int m = pshape(0)[0], nn = pshape(0)[1];
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) out[static_cast<size_t>(i) * nn + j] = a[static_cast<size_t>(i) * nn + j] + r[j];
      }
      break;
    }
    case Op::kDivRowvec: {
      const auto &a = pv(0), &r = pv(1);
      const int m = pshape(0)[0], nn = pshape(0)[1];
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) out[static_cast<size_t>(i) * nn + j] = a[static_cast<size_t>(i) * nn + j] / r[j];
      }
      break;
    }
    case Op::kMatmul: {
      const auto &a = pv(0), &b = pv(1);
      const int m = pshape(0)[0], k = pshape(0)[1], nn = pshape(1)[1];
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) {
          double acc = 0.0;
          for (int kk = 0; kk < k; ++kk) {
            acc += a[static_cast<size_t>(i) * k + kk] * b[static_cast<size_t>(kk) * nn + j];
          }
          out[static_cast<size_t>(i) * nn + j] = acc;
        }
      }
      break;
    }
    case Op::kTranspose: {
      const auto& a = pv(0);
      const int m = pshape(0)[0], nn = pshape(0)[1];
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) out[static_cast<size_t>(j) * m + i] = a[static_cast<size_t>(i) * nn + j];
      }
      break;
    }
    case Op::kReshape: {
      out = pv(0);
      break;
    }
    case Op::kSliceCols: {
      const auto& a = pv(0);
      const int m = pshape(0)[0], src = pshape(0)[1];
      const int nn = n.i1 - n.i0;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) {
          out[static_cast<size_t>(i) * nn + j] = a[static_cast<size_t>(i) * src + n.i0 + j];
        }
      }
      break;
    }
    case Op::kSumAll: {
      const auto& a = pv(0);
      double acc = 0.0;
      for (double v : a) acc += v;
      out[0] = acc;
      break;
    }
    case Op::kSumAxis0: {
      const auto& a = pv(0);
      const int m = pshape(0)[0], nn = pshape(0)[1];
      for (int j = 0; j < nn; ++j) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += a[static_cast<size_t>(i) * nn + j];
        out[j] = acc;
      }
      break;
    }
    case Op::kSumAxis1: {
      const auto& a = pv(0);
      const int m = pshape(0)[0], nn = pshape(0)[1];
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nn; ++j) acc += a[static_cast<size_t>(i) * nn + j];
        out[i] = acc;
      }
      break;
    }
    case Op::kExp: {
      const auto& a = pv(0);
      for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a[i]);
      break;
    }
    case Op::kLog: {
      const auto& a = pv(0);
      for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(a[i]);
      break;
    }
    case Op::kSqrt: {
      const auto& a = pv(0);
      for (size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(a[i]);
      break;
    }
    case Op::kSoftplus: {
      const auto& a = pv(0);
      for (size_t i = 0; i < out.size(); ++i) out[i] = ops::softplus(a[i]);
      break;
    }
    case Op::kGelu: {
      const auto& a = pv(0);
      for (size_t i = 0; i < out.size(); ++i) out[i] = ops::gelu(a[i]);
      break;
    }
    case Op::kSoftmax: {
      const auto& a = pv(0);
      const auto& shape = pshape(0);
      const int axis = n.i0;
      int64_t outer = 1, inner = 1;
      const int64_t len = shape[axis];
      for (int i = 0; i < axis; ++i) outer *= shape[i];
      for (size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
          const int64_t base = o * len * inner + in;
          double mx = a[base];
          for (int64_t i = 1; i < len; ++i) mx = std::max(mx, a[base + i * inner]);
          double denom = 0.0;
          for (int64_t i = 0; i < len; ++i) {
            double e = std::exp(a[base + i * inner] - mx);
            out[base + i * inner] = e;
            denom += e;
          }
          for (int64_t i = 0; i < len; ++i) out[base + i * inner] /= denom;
        }
      }
      break;
    }
    case Op::kLayerNormRows: {
      const auto &a = pv(0), &g = pv(1), &b = pv(2);
      const int m = pshape(0)[0], c = pshape(0)[1];
      for (int i = 0; i < m; ++i) {
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += a[static_cast<size_t>(i) * c + j];
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
          double d = a[static_cast<size_t>(i) * c + j] - mean;
          var += d * d;
        }
        var /= c;
        const double inv = 1.0 / std::sqrt(var + n.f0);
        for (int j = 0; j < c; ++j) {
          out[static_cast<size_t>(i) * c + j] =
              (a[static_cast<size_t>(i) * c + j] - mean) * inv * g[j] + b[j];
        }
      }
      break;
    }
    case Op::kL2NormRows: {
      const auto& a = pv(0);
      const int m = pshape(0)[0], c = pshape(0)[1];
      for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
          double v = a[static_cast<size_t>(i) * c + j];
          s += v * v;
        }
        const double inv = 1.0 / std::sqrt(s + n.f0);
        for (int j = 0; j < c; ++j) {
          out[static_cast<size_t>(i) * c + j] = a[static_cast<size_t>(i) * c + j] * inv;
        }
      }
      break;
    }
    case Op::kBilinearResize: {
      const auto& a = pv(0);
      const auto& shape = pshape(0);
      const int c = shape[0], h = shape[1], w = shape[2];
      const int oh = n.i0, ow = n.i1;
      auto tap = [](int oi, int in_size, int out_size, int* lo, int* hi, double* t) {
        double src = (oi + 0.5) * (static_cast<double>(in_size) / out_size) - 0.5;
        int l = static_cast<int>(std::floor(src));
        *t = src - l;
        *lo = std::clamp(l, 0, in_size - 1);
        *hi = std::clamp(l + 1, 0, in_size - 1);
      };
      for (int ch = 0; ch < c; ++ch) {
        const size_t cb = static_cast<size_t>(ch) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
          int ylo, yhi;
          double ty;
          tap(oy, h, oh, &ylo, &yhi, &ty);
          for (int ox = 0; ox < ow; ++ox) {
            int xlo, xhi;
            double tx;
            tap(ox, w, ow, &xlo, &xhi, &tx);
            double aa = a[cb + static_cast<size_t>(ylo) * w + xlo];
            double bb = a[cb + static_cast<size_t>(ylo) * w + xhi];
            double cc = a[cb + static_cast<size_t>(yhi) * w + xlo];
            double dd = a[cb + static_cast<size_t>(yhi) * w + xhi];
            double top = aa + tx * (bb - aa);
            double bot = cc + tx * (dd - cc);
            out[(static_cast<size_t>(ch) * oh + oy) * ow + ox] = top + ty * (bot - top);
          }
        }
      }
      break;
    }
    case Op::kConv2d: {
      const auto &x = pv(0), &w = pv(1), &b = pv(2);
      const auto& xs = pshape(0);
      const auto& ws = pshape(1);
      const int ci = xs[0], h = xs[1], ww = xs[2];
      const int co = ws[0], kh = ws[2], kw = ws[3];
      const int stride = n.i0, pad = n.i1;
      const int oh = n.out.dim(1), ow = n.out.dim(2);
      for (int oc = 0; oc < co; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            double acc = b[oc];
            for (int ic = 0; ic < ci; ++ic) {
              for (int ky = 0; ky < kh; ++ky) {
                const int iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                  const int ix = ox * stride + kx - pad;
                  if (ix < 0 || ix >= ww) continue;
                  acc += w[((static_cast<size_t>(oc) * ci + ic) * kh + ky) * kw + kx] *
                         x[(static_cast<size_t>(ic) * h + iy) * ww + ix];
                }
              }
            }
            out[(static_cast<size_t>(oc) * oh + oy) * ow + ox] = acc;
          }
        }
      }
      break;
    }
  }
}

}  // namespace idsc
