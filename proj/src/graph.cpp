#include "idsc/graph.hpp"

#include <cmath>

#include "idsc/ops.hpp"

namespace idsc {

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParam: return "param";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMulScalar: return "mul_scalar";
    case Op::kMulBcastScalar: return "mul_bcast";
    case Op::kSubBcastScalar: return "sub_bcast";
    case Op::kAddRowvec: return "add_rowvec";
    case Op::kDivRowvec: return "div_rowvec";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kReshape: return "reshape";
    case Op::kSliceCols: return "slice_cols";
    case Op::kSumAll: return "sum_all";
    case Op::kSumAxis0: return "sum_axis0";
    case Op::kSumAxis1: return "sum_axis1";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kSoftplus: return "softplus";
    case Op::kGelu: return "gelu";
    case Op::kSoftmax: return "softmax";
    case Op::kLayerNormRows: return "layer_norm_rows";
    case Op::kL2NormRows: return "l2_normalize_rows";
    case Op::kBilinearResize: return "bilinear_resize";
    case Op::kConv2d: return "conv2d";
  }
  return "?";
}

Var Graph::make(Op op, std::vector<int> parents, Tensor out, int i0, int i1, float f0) {
  if (!out.all_finite()) {
    throw NumericError(std::string("non-finite values produced by ") + op_name(op));
  }
  Node n;
  n.op = op;
  n.parents = std::move(parents);
  n.out = std::move(out);
  n.i0 = i0;
  n.i1 = i1;
  n.f0 = f0;
  nodes_.push_back(std::move(n));
  has_grads_ = false;
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::input(Tensor value) { return make(Op::kInput, {}, std::move(value)); }

Var Graph::param(const std::string& name, Tensor value) {
  if (name.empty()) throw ContractError("param: empty name");
  if (param_ids_.count(name)) throw ContractError("param: duplicate name " + name);
  Var v = make(Op::kParam, {}, std::move(value));
  nodes_.back().name = name;
  param_ids_[name] = v.id;
  return v;
}

const Tensor& Graph::grad(Var v) const {
  if (!has_grads_) throw ContractError("grad: backward has not run on this graph");
  return grads_.at(static_cast<size_t>(v.id));
}

static void check_same_graph(Var a, Var b, const char* who) {
  if (a.g != b.g) throw ContractError(std::string(who) + ": operands from different graphs");
}

static void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(who) + ": shapes differ: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

static void check_scalar(const Tensor& t, const char* who) {
  if (t.numel() != 1) {
    throw ShapeError(std::string(who) + ": expected a scalar, got " + shape_str(t.shape()));
  }
}

static void check_rank2(const Tensor& t, const char* who) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(who) + ": expected rank 2, got " + shape_str(t.shape()));
  }
}

static Tensor ew2(const Tensor& a, const Tensor& b, float (*f)(float, float)) {
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

Var add(Var a, Var b) {
  check_same_graph(a, b, "add");
  const Tensor &ta = a.g->value(a), &tb = b.g->value(b);
  check_same_shape(ta, tb, "add");
  return a.g->make(Op::kAdd, {a.id, b.id}, ew2(ta, tb, [](float x, float y) { return x + y; }));
}

Var sub(Var a, Var b) {
  check_same_graph(a, b, "sub");
  const Tensor &ta = a.g->value(a), &tb = b.g->value(b);
  check_same_shape(ta, tb, "sub");
  return a.g->make(Op::kSub, {a.id, b.id}, ew2(ta, tb, [](float x, float y) { return x - y; }));
}

Var mul(Var a, Var b) {
  check_same_graph(a, b, "mul");
  const Tensor &ta = a.g->value(a), &tb = b.g->value(b);
  check_same_shape(ta, tb, "mul");
  return a.g->make(Op::kMul, {a.id, b.id}, ew2(ta, tb, [](float x, float y) { return x * y; }));
}

Var add_scalar(Var a, float c) {
  Tensor out = a.g->value(a);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += c;
  return a.g->make(Op::kAddScalar, {a.id}, std::move(out), 0, 0, c);
}

Var mul_scalar(Var a, float c) {
  Tensor out = a.g->value(a);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= c;
  return a.g->make(Op::kMulScalar, {a.id}, std::move(out), 0, 0, c);
}

Var mul_bcast(Var a, Var scalar) {
  check_same_graph(a, scalar, "mul_bcast");
  const Tensor& ts = scalar.g->value(scalar);
  check_scalar(ts, "mul_bcast");
  Tensor out = a.g->value(a);
  const float s = ts[0];
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
  return a.g->make(Op::kMulBcastScalar, {a.id, scalar.id}, std::move(out));
}

Var sub_bcast(Var a, Var scalar) {
  check_same_graph(a, scalar, "sub_bcast");
  const Tensor& ts = scalar.g->value(scalar);
  check_scalar(ts, "sub_bcast");
  Tensor out = a.g->value(a);
  const float s = ts[0];
  for (int64_t i = 0; i < out.numel(); ++i) out[i] -= s;
  return a.g->make(Op::kSubBcastScalar, {a.id, scalar.id}, std::move(out));
}

static void check_rowvec(const Tensor& a, const Tensor& r, const char* who) {
  check_rank2(a, who);
  if (r.rank() != 1 || r.dim(0) != a.dim(1)) {
    throw ShapeError(std::string(who) + ": row vector " + shape_str(r.shape()) +
                     " does not match " + shape_str(a.shape()));
  }
}

Var add_rowvec(Var a, Var row) {
  check_same_graph(a, row, "add_rowvec");
  const Tensor &ta = a.g->value(a), &tr = row.g->value(row);
  check_rowvec(ta, tr, "add_rowvec");
  Tensor out = ta;
  const int m = ta.dim(0), n = ta.dim(1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at2(i, j) += tr[j];
  }
  return a.g->make(Op::kAddRowvec, {a.id, row.id}, std::move(out));
}

Var div_rowvec(Var a, Var row) {
  check_same_graph(a, row, "div_rowvec");
  const Tensor &ta = a.g->value(a), &tr = row.g->value(row);
  check_rowvec(ta, tr, "div_rowvec");
  Tensor out = ta;
  const int m = ta.dim(0), n = ta.dim(1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at2(i, j) /= tr[j];
  }
  return a.g->make(Op::kDivRowvec, {a.id, row.id}, std::move(out));
}

Var matmul(Var a, Var b) {
  check_same_graph(a, b, "matmul");
  return a.g->make(Op::kMatmul, {a.id, b.id}, ops::matmul(a.g->value(a), b.g->value(b)));
}

Var transpose(Var a) {
  return a.g->make(Op::kTranspose, {a.id}, ops::transpose2d(a.g->value(a)));
}

Var reshape(Var a, std::vector<int> shape) {
  const Tensor& ta = a.g->value(a);
  if (shape_numel(shape) != ta.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(ta.shape()) + " as " + shape_str(shape));
  }
  Tensor out(shape, ta.vec());
  return a.g->make(Op::kReshape, {a.id}, std::move(out));
}

Var slice_cols(Var a, int begin, int end) {
  const Tensor& ta = a.g->value(a);
  check_rank2(ta, "slice_cols");
  if (begin < 0 || end > ta.dim(1) || begin >= end) {
    throw ShapeError("slice_cols: bad column range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") for " + shape_str(ta.shape()));
  }
  const int m = ta.dim(0), n = end - begin;
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at2(i, j) = ta.at2(i, begin + j);
  }
  return a.g->make(Op::kSliceCols, {a.id}, std::move(out), begin, end);
}

Var sum_all(Var a) {
  const Tensor& ta = a.g->value(a);
  double acc = 0.0;
  for (int64_t i = 0; i < ta.numel(); ++i) acc += ta[i];
  return a.g->make(Op::kSumAll, {a.id}, Tensor::scalar(static_cast<float>(acc)));
}

Var sum_axis0(Var a) {
  const Tensor& ta = a.g->value(a);
  check_rank2(ta, "sum_axis0");
  const int m = ta.dim(0), n = ta.dim(1);
  Tensor out({n});
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += ta.at2(i, j);
    out[j] = static_cast<float>(acc);
  }
  return a.g->make(Op::kSumAxis0, {a.id}, std::move(out));
}

Var sum_axis1(Var a) {
  const Tensor& ta = a.g->value(a);
  check_rank2(ta, "sum_axis1");
  const int m = ta.dim(0), n = ta.dim(1);
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += ta.at2(i, j);
    out[i] = static_cast<float>(acc);
  }
  return a.g->make(Op::kSumAxis1, {a.id}, std::move(out));
}

static Tensor ew1(const Tensor& a, double (*f)(double)) {
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = static_cast<float>(f(a[i]));
  return out;
}

Var exp(Var a) { return a.g->make(Op::kExp, {a.id}, ew1(a.g->value(a), [](double x) { return std::exp(x); })); }

Var log(Var a) { return a.g->make(Op::kLog, {a.id}, ew1(a.g->value(a), [](double x) { return std::log(x); })); }

Var sqrt(Var a) { return a.g->make(Op::kSqrt, {a.id}, ew1(a.g->value(a), [](double x) { return std::sqrt(x); })); }

Var softplus(Var a) { return a.g->make(Op::kSoftplus, {a.id}, ew1(a.g->value(a), ops::softplus)); }

Var gelu(Var a) { return a.g->make(Op::kGelu, {a.id}, ew1(a.g->value(a), ops::gelu)); }

Var softmax_along(Var a, int axis) {
  return a.g->make(Op::kSoftmax, {a.id}, ops::softmax_along(a.g->value(a), axis), axis);
}

Var layer_norm_rows(Var x, Var gain, Var bias, float eps) {
  check_same_graph(x, gain, "layer_norm_rows");
  check_same_graph(x, bias, "layer_norm_rows");
  return x.g->make(Op::kLayerNormRows, {x.id, gain.id, bias.id},
                   ops::layer_norm_rows(x.g->value(x), x.g->value(gain), x.g->value(bias), eps),
                   0, 0, eps);
}

Var l2_normalize_rows(Var x, float eps) {
  return x.g->make(Op::kL2NormRows, {x.id}, ops::l2_normalize_rows(x.g->value(x), eps), 0, 0, eps);
}

Var bilinear_resize(Var x, int out_h, int out_w) {
  return x.g->make(Op::kBilinearResize, {x.id}, ops::bilinear_resize(x.g->value(x), out_h, out_w),
                   out_h, out_w);
}

Var conv2d(Var x, Var w, Var b, int stride, int pad) {
  check_same_graph(x, w, "conv2d");
  check_same_graph(x, b, "conv2d");
  return x.g->make(Op::kConv2d, {x.id, w.id, b.id},
                   ops::conv2d(x.g->value(x), x.g->value(w), x.g->value(b), stride, pad), stride,
                   pad);
}

Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

void Graph::backprop_node(int id) {
  const Node& n = nodes_[static_cast<size_t>(id)];
  const Tensor& dy = grads_[static_cast<size_t>(id)];
  auto pg = [&](int slot) -> Tensor& { return grads_[static_cast<size_t>(n.parents[slot])]; };
  auto pv = [&](int slot) -> const Tensor& {
    return nodes_[static_cast<size_t>(n.parents[slot])].out;
  };
  switch (n.op) {
    case Op::kInput:
    case Op::kParam:
      break;
    case Op::kAdd: {
      Tensor &da = pg(0), &db = pg(1);
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i];
        db[i] += dy[i];
      }
      break;
    }
    case Op::kSub: {
      Tensor &da = pg(0), &db = pg(1);
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i];
        db[i] -= dy[i];
      }
      break;
    }
    case Op::kMul: {
      Tensor &da = pg(0), &db = pg(1);
      const Tensor &a = pv(0), &b = pv(1);
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i] * b[i];
        db[i] += dy[i] * a[i];
      }
      break;
    }
    case Op::kAddScalar: {
      Tensor& da = pg(0);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
      break;
    }
    case Op::kMulScalar: {
      Tensor& da = pg(0);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * n.f0;
      break;
    }
    case Op::kMulBcastScalar: {
      Tensor& da = pg(0);
      Tensor& ds = pg(1);
      const Tensor& a = pv(0);
      const float s = pv(1)[0];
      double acc = 0.0;
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i] * s;
        acc += static_cast<double>(dy[i]) * a[i];
      }
      ds[0] += static_cast<float>(acc);
      break;
    }
    case Op::kSubBcastScalar: {
      Tensor& da = pg(0);
      Tensor& ds = pg(1);
      double acc = 0.0;
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i];
        acc += dy[i];
      }
      ds[0] -= static_cast<float>(acc);
      break;
    }
    case Op::kAddRowvec: {
      Tensor& da = pg(0);
      Tensor& dr = pg(1);
      const int m = dy.dim(0), nn = dy.dim(1);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) {
          da.at2(i, j) += dy.at2(i, j);
          dr[j] += dy.at2(i, j);
        }
      }
      break;
    }
    case Op::kDivRowvec: {
      Tensor& da = pg(0);
      Tensor& dr = pg(1);
      const Tensor &a = pv(0), &r = pv(1);
      const int m = dy.dim(0), nn = dy.dim(1);
      for (int j = 0; j < nn; ++j) {
        const double rj = r[j];
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
          da.at2(i, j) += static_cast<float>(dy.at2(i, j) / rj);
          acc += static_cast<double>(dy.at2(i, j)) * a.at2(i, j);
        }
        dr[j] -= static_cast<float>(acc / (rj * rj));
      }
      break;
    }
    case Op::kMatmul: {
      const Tensor &a = pv(0), &b = pv(1);
      Tensor da = ops::matmul(dy, ops::transpose2d(b));
      Tensor db = ops::matmul(ops::transpose2d(a), dy);
      Tensor& ga = pg(0);
      Tensor& gb = pg(1);
      for (int64_t i = 0; i < da.numel(); ++i) ga[i] += da[i];
      for (int64_t i = 0; i < db.numel(); ++i) gb[i] += db[i];
      break;
    }
    case Op::kTranspose: {
      Tensor& da = pg(0);
      const int m = dy.dim(0), nn = dy.dim(1);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) da.at2(j, i) += dy.at2(i, j);
      }
      break;
    }
    case Op::kReshape: {
      Tensor& da = pg(0);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
      break;
    }
    case Op::kSliceCols: {
      Tensor& da = pg(0);
      const int m = dy.dim(0), nn = dy.dim(1);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) da.at2(i, n.i0 + j) += dy.at2(i, j);
      }
      break;
    }
    case Op::kSumAll: {
      Tensor& da = pg(0);
      const float g = dy[0];
      for (int64_t i = 0; i < da.numel(); ++i) da[i] += g;
      break;
    }
    case Op::kSumAxis0: {
      Tensor& da = pg(0);
      const int m = da.dim(0), nn = da.dim(1);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) da.at2(i, j) += dy[j];
      }
      break;
    }
    case Op::kSumAxis1: {
      Tensor& da = pg(0);
      const int m = da.dim(0), nn = da.dim(1);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) da.at2(i, j) += dy[i];
      }
      break;
    }
    case Op::kExp: {
      Tensor& da = pg(0);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * n.out[i];
      break;
    }
    case Op::kLog: {
      Tensor& da = pg(0);
      const Tensor& a = pv(0);
      for (int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] / a[i];
      break;
    }
    case Op::kSqrt: {
      Tensor& da = pg(0);
      // Denominator floored so a zero-valued sqrt (loss exactly at its
      // minimum) yields a finite factor; the upstream term is zero there.
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i] / (2.0f * std::max(n.out[i], 1e-12f));
      }
      break;
    }
    case Op::kSoftplus: {
      Tensor& da = pg(0);
      const Tensor& a = pv(0);
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i] * static_cast<float>(ops::sigmoid(a[i]));
      }
      break;
    }
    case Op::kGelu: {
      Tensor& da = pg(0);
      const Tensor& a = pv(0);
      for (int64_t i = 0; i < dy.numel(); ++i) {
        da[i] += dy[i] * static_cast<float>(ops::gelu_grad(a[i]));
      }
      break;
    }
    case Op::kSoftmax: {
      Tensor dx;
      ops::softmax_backward(n.out, dy, n.i0, &dx);
      Tensor& da = pg(0);
      for (int64_t i = 0; i < dx.numel(); ++i) da[i] += dx[i];
      break;
    }
    case Op::kLayerNormRows: {
      Tensor dx, dg, db;
      ops::layer_norm_rows_backward(pv(0), pv(1), n.f0, dy, &dx, &dg, &db);
      Tensor& g0 = pg(0);
      Tensor& g1 = pg(1);
      Tensor& g2 = pg(2);
      for (int64_t i = 0; i < dx.numel(); ++i) g0[i] += dx[i];
      for (int64_t i = 0; i < dg.numel(); ++i) g1[i] += dg[i];
      for (int64_t i = 0; i < db.numel(); ++i) g2[i] += db[i];
      break;
    }
    case Op::kL2NormRows: {
      Tensor dx;
      ops::l2_normalize_rows_backward(pv(0), n.f0, dy, &dx);
      Tensor& da = pg(0);
      for (int64_t i = 0; i < dx.numel(); ++i) da[i] += dx[i];
      break;
    }
    case Op::kBilinearResize: {
      Tensor dx;
      ops::bilinear_resize_backward(pv(0).shape(), dy, &dx);
      Tensor& da = pg(0);
      for (int64_t i = 0; i < dx.numel(); ++i) da[i] += dx[i];
      break;
    }
    case Op::kConv2d: {
      Tensor dx, dw, db;
      ops::conv2d_backward(pv(0), pv(1), n.i0, n.i1, dy, &dx, &dw, &db);
      Tensor& g0 = pg(0);
      Tensor& g1 = pg(1);
      Tensor& g2 = pg(2);
      for (int64_t i = 0; i < dx.numel(); ++i) g0[i] += dx[i];
      for (int64_t i = 0; i < dw.numel(); ++i) g1[i] += dw[i];
      for (int64_t i = 0; i < db.numel(); ++i) g2[i] += db[i];
      break;
    }
  }
}

GradMap Graph::backward(Var loss) {
  if (loss.g != this) throw ContractError("backward: loss node from a different graph");
  const Tensor& lt = value(loss);
  if (lt.numel() != 1) {
    throw ContractError("backward: loss must be scalar-shaped, got " + shape_str(lt.shape()));
  }
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.emplace_back(n.out.shape());
  grads_[static_cast<size_t>(loss.id)][0] = 1.0f;
  for (int id = loss.id; id >= 0; --id) backprop_node(id);
  has_grads_ = true;
  GradMap out;
  for (const auto& [name, id] : param_ids_) {
    const Tensor& g = grads_[static_cast<size_t>(id)];
    if (!g.all_finite()) throw NumericError("non-finite gradient for parameter " + name);
    out.emplace(name, g);
  }
  return out;
}

Tensor numeric_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor out(x.shape());
  Tensor probe = x;
  for (int64_t i = 0; i < x.numel(); ++i) {
    out[i] = static_cast<float>(numeric_grad_at(f, probe, i, h));
  }
  return out;
}

double numeric_grad_at(const std::function<double(const Tensor&)>& f, const Tensor& x,
                       int64_t index, double h) {
  Tensor probe = x;
  const float orig = probe[index];
  // Divide by the step actually stored, not the nominal one: float storage
  // rounds orig +/- h, and for |orig| >> h the rounding error is material.
  probe[index] = static_cast<float>(orig + h);
  const double xp = probe[index];
  const double fp = f(probe);
  probe[index] = static_cast<float>(orig - h);
  const double xm = probe[index];
  const double fm = f(probe);
  probe[index] = orig;
  if (!std::isfinite(fp) || !std::isfinite(fm)) {
    throw NumericError("numeric_grad: non-finite function value while probing element " +
                       std::to_string(index));
  }
  return (fp - fm) / (xp - xm);
}

}  // namespace idsc
