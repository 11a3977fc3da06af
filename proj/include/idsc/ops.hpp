#pragma once

#include <cmath>

#include "idsc/tensor.hpp"

namespace idsc::ops {

// a [m x k] * b [k x n] -> [m x n]. Summation runs left to right over k for
// every output element, so results are bit-identical across runs.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose2d(const Tensor& a);

// Numerically stable softmax over one axis of an arbitrary-rank tensor.
Tensor softmax_along(const Tensor& x, int axis);
void softmax_backward(const Tensor& y, const Tensor& dy, int axis, Tensor* dx);

// x [c x h x w] resized with half-pixel centers (align_corners=false).
// Interpolation uses the lerp form a + t*(b-a), which reproduces constant
// fields exactly and makes the identity resize a bit-exact copy.
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
void bilinear_resize_backward(const std::vector<int>& in_shape, const Tensor& dy, Tensor* dx);

// x [ci x h x w], w [co x ci x kh x kw], b [co]; zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
void conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& dy,
                     Tensor* dx, Tensor* dw, Tensor* db);

// Per-row normalization of x [m x c] with learned gain/bias [c].
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps);
void layer_norm_rows_backward(const Tensor& x, const Tensor& gain, float eps, const Tensor& dy,
                              Tensor* dx, Tensor* dgain, Tensor* dbias);

// Rows of x [m x c] scaled to unit Euclidean norm.
Tensor l2_normalize_rows(const Tensor& x, float eps);
void l2_normalize_rows_backward(const Tensor& x, float eps, const Tensor& dy, Tensor* dx);

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476)); }

inline double gelu_grad(double x) {
  double phi = std::exp(-0.5 * x * x) * 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x * 0.7071067811865476)) + x * phi;
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace idsc::ops
