/* Copyright 2026 The ettk authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ETTK_OPS_HPP_
#define ETTK_OPS_HPP_

#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "ettk/tape.hpp"

namespace ettk {

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// C[m x n] = A[m x k] * B[k x n]. Gradients: dA += dC*B^T, dB += A^T*dC.
template <typename S>
Var matmul(Tape<S>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.extent(1) != bv.extent(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(av.shape()) + " and " +
                         shape_str(bv.shape()));
  }
  const Index m = av.extent(0), n = bv.extent(1);
  Tensor<S> out(Shape{m, n});
  out.mat2().noalias() = av.mat2() * bv.mat2();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([a, b, o](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).mat2();
      if (tp.requires_grad(a)) tp.grad(a).mat2().noalias() += go * tp.value(b).mat2().transpose();
      if (tp.requires_grad(b)) tp.grad(b).mat2().noalias() += tp.value(a).mat2().transpose() * go;
    });
  }
  return o;
}

/// y[m] = A[m x n] * x[n].
template <typename S>
Var matvec(Tape<S>& t, Var a, Var x) {
  const auto& av = t.value(a);
  const auto& xv = t.value(x);
  if (av.rank() != 2 || xv.rank() != 1 || av.extent(1) != xv.extent(0)) {
    throw DimensionError("matvec: incompatible shapes " + shape_str(av.shape()) + " and " +
                         shape_str(xv.shape()));
  }
  Tensor<S> out(Shape{av.extent(0)});
  out.vec().noalias() = av.mat2() * xv.vec();
  const bool rg = t.requires_grad(a) || t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([a, x, o](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).vec();
      if (tp.requires_grad(a)) tp.grad(a).mat2().noalias() += go * tp.value(x).vec().transpose();
      if (tp.requires_grad(x)) tp.grad(x).vec().noalias() += tp.value(a).mat2().transpose() * go;
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

/// Sum of same-shape tensors.
template <typename S>
Var addn(Tape<S>& t, const std::vector<Var>& ins) {
  if (ins.empty()) throw ContractError("addn: no inputs");
  const auto& first = t.value(ins[0]);
  Tensor<S> out = first.clone();
  bool rg = t.requires_grad(ins[0]);
  for (std::size_t i = 1; i < ins.size(); ++i) {
    const auto& v = t.value(ins[i]);
    if (!v.same_shape(first)) {
      throw DimensionError("addn: shape mismatch " + shape_str(first.shape()) + " vs " +
                           shape_str(v.shape()));
    }
    out.flat() += v.flat();
    rg = rg || t.requires_grad(ins[i]);
  }
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([ins, o](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto& go = tp.grad(o).flat();
      for (Var in : ins) {
        if (tp.requires_grad(in)) tp.grad(in).flat() += go;
      }
    });
  }
  return o;
}

template <typename S>
Var add(Tape<S>& t, Var a, Var b) {
  return addn(t, {a, b});
}

template <typename S>
Var add(Tape<S>& t, Var a, Var b, Var c) {
  return addn(t, {a, b, c});
}

/// Hadamard product.
template <typename S>
Var mul(Tape<S>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (!av.same_shape(bv)) {
    throw DimensionError("mul: shape mismatch " + shape_str(av.shape()) + " vs " +
                         shape_str(bv.shape()));
  }
  Tensor<S> out(av.shape());
  out.flat() = av.flat() * bv.flat();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([a, b, o](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto& go = tp.grad(o).flat();
      if (tp.requires_grad(a)) tp.grad(a).flat() += go * tp.value(b).flat();
      if (tp.requires_grad(b)) tp.grad(b).flat() += go * tp.value(a).flat();
    });
  }
  return o;
}

/// alpha * x + beta, elementwise with scalar constants.
template <typename S>
Var affine(Tape<S>& t, Var x, S alpha, S beta) {
  const auto& xv = t.value(x);
  Tensor<S> out(xv.shape());
  out.flat() = alpha * xv.flat() + beta;
  const bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([x, o, alpha](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      tp.grad(x).flat() += alpha * tp.grad(o).flat();
    });
  }
  return o;
}

template <typename S>
Var scale(Tape<S>& t, Var x, S alpha) {
  return affine(t, x, alpha, S(0));
}

template <typename S>
Var one_minus(Tape<S>& t, Var x) {
  return affine(t, x, S(-1), S(1));
}

enum class Pointwise { kSigmoid, kTanh, kRelu, kExp, kLog };

/// Elementwise nonlinearity with its matching gradient rule.
template <typename S>
Var pointwise(Tape<S>& t, Var x, Pointwise fn) {
  const auto& xv = t.value(x);
  Tensor<S> out(xv.shape());
  switch (fn) {
    case Pointwise::kSigmoid:
      out.flat() = xv.flat().unaryExpr([](S z) {
        return z >= S(0) ? S(1) / (S(1) + std::exp(-z))
                         : S(std::exp(z) / (S(1) + std::exp(z)));
      });
      break;
    case Pointwise::kTanh:
      out.flat() = xv.flat().tanh();
      break;
    case Pointwise::kRelu:
      out.flat() = xv.flat().max(S(0));
      break;
    case Pointwise::kExp:
      out.flat() = xv.flat().exp();
      break;
    case Pointwise::kLog:
      if (checked_mode() && (xv.flat() <= S(0)).any()) {
        throw DomainError("pointwise log: non-positive entry");
      }
      out.flat() = xv.flat().log();
      break;
  }
  const bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([x, o, fn](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto& go = tp.grad(o).flat();
      auto& gx = tp.grad(x).flat();
      const auto& y = tp.value(o).flat();
      const auto& xin = tp.value(x).flat();
      switch (fn) {
        case Pointwise::kSigmoid:
          gx += go * y * (S(1) - y);
          break;
        case Pointwise::kTanh:
          gx += go * (S(1) - y * y);
          break;
        case Pointwise::kRelu:
          gx += go * (xin > S(0)).template cast<S>();
          break;
        case Pointwise::kExp:
          gx += go * y;
          break;
        case Pointwise::kLog:
          gx += go / xin;
          break;
      }
    });
  }
  return o;
}

template <typename S>
Var sigmoid(Tape<S>& t, Var x) {
  return pointwise(t, x, Pointwise::kSigmoid);
}
template <typename S>
Var tanh(Tape<S>& t, Var x) {
  return pointwise(t, x, Pointwise::kTanh);
}
template <typename S>
Var relu(Tape<S>& t, Var x) {
  return pointwise(t, x, Pointwise::kRelu);
}

// ---------------------------------------------------------------------------
// Softmax family (last axis; max-subtraction for stability)
// ---------------------------------------------------------------------------

namespace detail {

template <typename S>
inline std::pair<Index, Index> softmax_rows(const Tensor<S>& v, Index axis) {
  const Index r = v.rank();
  if (!(axis == -1 || axis == r - 1)) {
    throw ContractError("softmax: only the last axis is supported");
  }
  if (r == 1) return {Index(1), v.extent(0)};
  if (r == 2) return {v.extent(0), v.extent(1)};
  throw ContractError("softmax: rank must be 1 or 2, got " + shape_str(v.shape()));
}

}  // namespace detail

template <typename S>
Var softmax(Tape<S>& t, Var x, Index axis = -1) {
  const auto& xv = t.value(x);
  auto [rows, cols] = detail::softmax_rows(xv, axis);
  Tensor<S> out(xv.shape());
  auto xm = xv.mat(rows, cols);
  auto om = out.mat(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const S m = xm.row(r).maxCoeff();
    om.row(r) = (xm.row(r).array() - m).exp();
    om.row(r) /= om.row(r).sum();
  }
  const bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([x, o, rows = rows, cols = cols](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).mat(rows, cols);
      const auto y = tp.value(o).mat(rows, cols);
      auto gx = tp.grad(x).mat(rows, cols);
      for (Index r = 0; r < rows; ++r) {
        const S dot = go.row(r).dot(y.row(r));
        gx.row(r).array() += y.row(r).array() * (go.row(r).array() - dot);
      }
    });
  }
  return o;
}

template <typename S>
Var log_softmax(Tape<S>& t, Var x, Index axis = -1) {
  const auto& xv = t.value(x);
  auto [rows, cols] = detail::softmax_rows(xv, axis);
  Tensor<S> out(xv.shape());
  auto xm = xv.mat(rows, cols);
  auto om = out.mat(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const S m = xm.row(r).maxCoeff();
    const S lse = std::log((xm.row(r).array() - m).exp().sum()) + m;
    om.row(r) = xm.row(r).array() - lse;
  }
  const bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([x, o, rows = rows, cols = cols](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).mat(rows, cols);
      const auto y = tp.value(o).mat(rows, cols);
      auto gx = tp.grad(x).mat(rows, cols);
      for (Index r = 0; r < rows; ++r) {
        const S gsum = go.row(r).sum();
        gx.row(r).array() += go.row(r).array() - y.row(r).array().exp() * gsum;
      }
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// Structure: rows, stacking, concatenation, pooling
// ---------------------------------------------------------------------------

/// Copy of row i of a rank-2 tensor.
template <typename S>
Var row(Tape<S>& t, Var m, Index i) {
  const auto& mv = t.value(m);
  if (mv.rank() != 2 || i < 0 || i >= mv.extent(0)) {
    throw ContractError("row: index " + std::to_string(i) + " outside " + shape_str(mv.shape()));
  }
  const Index cols = mv.extent(1);
  Tensor<S> out(Shape{cols});
  out.vec() = mv.mat2().row(i);
  const bool rg = t.requires_grad(m);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([m, o, i](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      tp.grad(m).mat2().row(i) += tp.grad(o).vec().transpose();
    });
  }
  return o;
}

/// Stack equal-length rank-1 vars into a rank-2 [T x D] tensor.
template <typename S>
Var stack_rows(Tape<S>& t, const std::vector<Var>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  const Index cols = t.value(rows[0]).extent(0);
  const Index n = static_cast<Index>(rows.size());
  Tensor<S> out(Shape{n, cols});
  bool rg = false;
  for (Index r = 0; r < n; ++r) {
    const auto& v = t.value(rows[static_cast<std::size_t>(r)]);
    if (v.rank() != 1 || v.extent(0) != cols) {
      throw DimensionError("stack_rows: row " + std::to_string(r) + " has shape " +
                           shape_str(v.shape()));
    }
    out.mat2().row(r) = v.vec().transpose();
    rg = rg || t.requires_grad(rows[static_cast<std::size_t>(r)]);
  }
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([rows, o](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).mat2();
      for (Index r = 0; r < static_cast<Index>(rows.size()); ++r) {
        Var in = rows[static_cast<std::size_t>(r)];
        if (tp.requires_grad(in)) tp.grad(in).vec() += go.row(r).transpose();
      }
    });
  }
  return o;
}

/// [T x Da], [T x Db] -> [T x (Da+Db)].
template <typename S>
Var concat_cols(Tape<S>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.extent(0) != bv.extent(0)) {
    throw DimensionError("concat_cols: shapes " + shape_str(av.shape()) + " and " +
                         shape_str(bv.shape()));
  }
  const Index rows = av.extent(0), ca = av.extent(1), cb = bv.extent(1);
  Tensor<S> out(Shape{rows, ca + cb});
  out.mat2().leftCols(ca) = av.mat2();
  out.mat2().rightCols(cb) = bv.mat2();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([a, b, o, ca, cb](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).mat2();
      if (tp.requires_grad(a)) tp.grad(a).mat2() += go.leftCols(ca);
      if (tp.requires_grad(b)) tp.grad(b).mat2() += go.rightCols(cb);
    });
  }
  return o;
}

/// Concatenate rank-1 vars into one vector.
template <typename S>
Var concat_vecs(Tape<S>& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_vecs: no inputs");
  Index total = 0;
  bool rg = false;
  for (Var p : parts) {
    const auto& v = t.value(p);
    if (v.rank() != 1) throw DimensionError("concat_vecs: rank-1 inputs required");
    total += v.extent(0);
    rg = rg || t.requires_grad(p);
  }
  Tensor<S> out(Shape{total});
  Index off = 0;
  for (Var p : parts) {
    const auto& v = t.value(p);
    out.flat().segment(off, v.size()) = v.flat();
    off += v.size();
  }
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([parts, o](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto& go = tp.grad(o).flat();
      Index off2 = 0;
      for (Var p : parts) {
        const Index n = tp.value(p).size();
        if (tp.requires_grad(p)) tp.grad(p).flat() += go.segment(off2, n);
        off2 += n;
      }
    });
  }
  return o;
}

/// Mean over the first `len` rows of [T x D] -> [D]. The gradient distributes
/// 1/len to each contributing row; rows beyond len never participate.
template <typename S>
Var mean_rows(Tape<S>& t, Var m, Index len) {
  const auto& mv = t.value(m);
  if (mv.rank() != 2) throw DimensionError("mean_rows: rank-2 input required");
  if (len < 1 || len > mv.extent(0)) {
    throw ContractError("mean_rows: length " + std::to_string(len) + " outside [1, " +
                        std::to_string(mv.extent(0)) + "]");
  }
  const Index cols = mv.extent(1);
  Tensor<S> out(Shape{cols});
  out.vec() = mv.mat2().topRows(len).colwise().mean();
  const bool rg = t.requires_grad(m);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([m, o, len](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const S inv = S(1) / static_cast<S>(len);
      tp.grad(m).mat2().topRows(len).rowwise() += (tp.grad(o).vec() * inv).transpose();
    });
  }
  return o;
}

/// [T x D] plus a [D] bias broadcast over rows (the only broadcast the tape
/// supports).
template <typename S>
Var add_row_bias(Tape<S>& t, Var m, Var bias) {
  const auto& mv = t.value(m);
  const auto& bv = t.value(bias);
  if (mv.rank() != 2 || bv.rank() != 1 || mv.extent(1) != bv.extent(0)) {
    throw DimensionError("add_row_bias: shapes " + shape_str(mv.shape()) + " and " +
                         shape_str(bv.shape()));
  }
  Tensor<S> out(mv.shape());
  out.mat2() = mv.mat2();
  out.mat2().rowwise() += bv.vec().transpose();
  const bool rg = t.requires_grad(m) || t.requires_grad(bias);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([m, bias, o](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).mat2();
      if (tp.requires_grad(m)) tp.grad(m).mat2() += go;
      if (tp.requires_grad(bias)) tp.grad(bias).vec() += go.colwise().sum().transpose();
    });
  }
  return o;
}

/// Entry `i` of a rank-1 tensor as a scalar var.
template <typename S>
Var pick(Tape<S>& t, Var x, Index i) {
  const auto& xv = t.value(x);
  if (xv.rank() != 1 || i < 0 || i >= xv.extent(0)) {
    throw ContractError("pick: index " + std::to_string(i) + " outside " + shape_str(xv.shape()));
  }
  Tensor<S> out = Tensor<S>::scalar(xv[i]);
  const bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([x, o, i](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      tp.grad(x).flat()[i] += tp.grad(o).flat()[0];
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// Convolution (valid cross-correlation, im2col + GEMM)
// ---------------------------------------------------------------------------

struct ConvStride {
  Index h = 1;
  Index w = 1;
};

inline Index conv_out_extent(Index in, Index kernel, Index stride) {
  return (in - kernel) / stride + 1;
}

/// input [C x H x W] (*) kernels [F x C x kh x kw] -> [F x H' x W'],
/// H' = floor((H-kh)/sh)+1 and likewise for W'. Optional bias [F].
template <typename S>
Var conv2d(Tape<S>& t, Var input, Var kernels, ConvStride stride,
           std::optional<Var> bias = std::nullopt) {
  const auto& iv = t.value(input);
  const auto& kv = t.value(kernels);
  if (iv.rank() != 3 || kv.rank() != 4 || iv.extent(0) != kv.extent(1)) {
    throw DimensionError("conv2d: input " + shape_str(iv.shape()) + " vs kernels " +
                         shape_str(kv.shape()));
  }
  if (stride.h < 1 || stride.w < 1) throw ContractError("conv2d: stride components must be >= 1");
  const Index c = iv.extent(0), h = iv.extent(1), w = iv.extent(2);
  const Index f = kv.extent(0), kh = kv.extent(2), kw = kv.extent(3);
  if (kh > h || kw > w) {
    throw DimensionError("conv2d: kernel " + shape_str({kh, kw}) + " larger than input " +
                         shape_str({h, w}));
  }
  const Index oh = conv_out_extent(h, kh, stride.h);
  const Index ow = conv_out_extent(w, kw, stride.w);
  const Index q = c * kh * kw;  // patch length
  const Index p = oh * ow;      // output pixels

  auto col = std::make_shared<Tensor<S>>(Shape{q, p});
  {
    auto cm = col->mat2();
    for (Index ci = 0; ci < c; ++ci) {
      for (Index u = 0; u < kh; ++u) {
        for (Index v = 0; v < kw; ++v) {
          const Index qi = (ci * kh + u) * kw + v;
          for (Index y = 0; y < oh; ++y) {
            for (Index x = 0; x < ow; ++x) {
              cm(qi, y * ow + x) = iv.at(ci, y * stride.h + u, x * stride.w + v);
            }
          }
        }
      }
    }
  }

  Tensor<S> out(Shape{f, oh, ow});
  out.mat(f, p).noalias() = kv.mat(f, q) * col->mat2();
  if (bias) {
    const auto& bv = t.value(*bias);
    if (bv.rank() != 1 || bv.extent(0) != f) {
      throw DimensionError("conv2d: bias shape " + shape_str(bv.shape()));
    }
    out.mat(f, p).colwise() += bv.vec();
  }
  const bool rg = t.requires_grad(input) || t.requires_grad(kernels) ||
                  (bias && t.requires_grad(*bias));
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([input, kernels, bias, o, col, c, kh, kw, oh, ow, f, q, p,
                   stride](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto go = tp.grad(o).mat(f, p);
      if (tp.requires_grad(kernels)) {
        tp.grad(kernels).mat(f, q).noalias() += go * col->mat2().transpose();
      }
      if (bias && tp.requires_grad(*bias)) {
        tp.grad(*bias).vec() += go.rowwise().sum();
      }
      if (tp.requires_grad(input)) {
        Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dcol =
            tp.value(kernels).mat(f, q).transpose() * go;
        auto& gi = tp.grad(input);
        for (Index ci = 0; ci < c; ++ci) {
          for (Index u = 0; u < kh; ++u) {
            for (Index v = 0; v < kw; ++v) {
              const Index qi = (ci * kh + u) * kw + v;
              for (Index y = 0; y < oh; ++y) {
                for (Index x = 0; x < ow; ++x) {
                  gi.at(ci, y * stride.h + u, x * stride.w + v) += dcol(qi, y * ow + x);
                }
              }
            }
          }
        }
      }
    });
  }
  return o;
}

/// [F x T x W] -> [T x F*W]: per-frame feature rows from conv activations.
template <typename S>
Var channels_to_time_rows(Tape<S>& t, Var x) {
  const auto& xv = t.value(x);
  if (xv.rank() != 3) throw DimensionError("channels_to_time_rows: rank-3 input required");
  const Index f = xv.extent(0), tt = xv.extent(1), w = xv.extent(2);
  Tensor<S> out(Shape{tt, f * w});
  for (Index fi = 0; fi < f; ++fi) {
    for (Index ti = 0; ti < tt; ++ti) {
      for (Index wi = 0; wi < w; ++wi) out.at(ti, fi * w + wi) = xv.at(fi, ti, wi);
    }
  }
  const bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    t.record_node([x, o, f, tt, w](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const auto& go = tp.grad(o);
      auto& gx = tp.grad(x);
      for (Index fi = 0; fi < f; ++fi) {
        for (Index ti = 0; ti < tt; ++ti) {
          for (Index wi = 0; wi < w; ++wi) gx.at(fi, ti, wi) += go.at(ti, fi * w + wi);
        }
      }
    });
  }
  return o;
}

}  // namespace ettk

#endif  // ETTK_OPS_HPP_
