#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "idsc/tensor.hpp"

namespace idsc {

enum class Op {
  kInput,
  kParam,
  kAdd,
  kSub,
  kMul,
  kAddScalar,
  kMulScalar,
  kMulBcastScalar,  // x * s, s a scalar node
  kSubBcastScalar,  // x - s, s a scalar node
  kAddRowvec,       // [m x n] + [n]
  kDivRowvec,       // [m x n] / [n]
  kMatmul,
  kTranspose,
  kReshape,
  kSliceCols,  // columns [i0, i1) of a 2-D tensor
  kSumAll,
  kSumAxis0,  // [m x n] -> [n]
  kSumAxis1,  // [m x n] -> [m]
  kExp,
  kLog,
  kSqrt,
  kSoftplus,
  kGelu,
  kSoftmax,  // along axis i0
  kLayerNormRows,
  kL2NormRows,
  kBilinearResize,
  kConv2d,  // stride i0, pad i1
};

const char* op_name(Op op);

struct Node {
  Op op;
  std::vector<int> parents;
  Tensor out;
  int i0 = 0, i1 = 0;
  float f0 = 0.0f;
  std::string name;  // parameters only
};

class Graph;

struct Var {
  Graph* g = nullptr;
  int id = -1;
  bool valid() const { return g != nullptr && id >= 0; }
};

using GradMap = std::map<std::string, Tensor>;

// Eagerly evaluated computation tape. Every node's forward value is computed
// at creation and checked for finiteness; backward() walks the tape in
// reverse. Trainable leaves carry unique names used to key gradients.
class Graph {
 public:
  Var input(Tensor value);
  Var param(const std::string& name, Tensor value);

  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }
  const Tensor& value(Var v) const { return nodes_.at(static_cast<size_t>(v.id)).out; }

  // Gradients for every trainable leaf; leaves the loss never touched get
  // zero gradients. The loss node must be scalar-shaped.
  GradMap backward(Var loss);

  // Per-node gradient from the most recent backward().
  const Tensor& grad(Var v) const;
  bool has_grads() const { return has_grads_; }

  Var make(Op op, std::vector<int> parents, Tensor out, int i0 = 0, int i1 = 0, float f0 = 0.0f);

 private:
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool has_grads_ = false;
  std::map<std::string, int> param_ids_;

  void backprop_node(int id);
};

// Builders. All validate shapes and throw ShapeError on mismatch.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_scalar(Var a, float c);
Var mul_scalar(Var a, float c);
Var mul_bcast(Var a, Var scalar);
Var sub_bcast(Var a, Var scalar);
Var add_rowvec(Var a, Var row);
Var div_rowvec(Var a, Var row);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, std::vector<int> shape);
Var slice_cols(Var a, int begin, int end);
Var sum_all(Var a);
Var sum_axis0(Var a);
Var sum_axis1(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var softplus(Var a);
Var gelu(Var a);
Var softmax_along(Var a, int axis);
Var layer_norm_rows(Var x, Var gain, Var bias, float eps = 1e-5f);
Var l2_normalize_rows(Var x, float eps = 1e-12f);
Var bilinear_resize(Var x, int out_h, int out_w);
Var conv2d(Var x, Var w, Var b, int stride, int pad);

// x @ w + b with w [in x out], b [out].
Var affine(Var x, Var w, Var b);

// Central differences (f(x+h) - f(x-h)) / 2h per element, accumulated in
// 64-bit. f must return a finite scalar for every probe.
Tensor numeric_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h);

// Single-element variant used when probing a sampled subset of a large tensor.
double numeric_grad_at(const std::function<double(const Tensor&)>& f, const Tensor& x,
                       int64_t index, double h);

}  // namespace idsc
