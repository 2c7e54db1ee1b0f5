// mvspoof/nn/ops.hpp

// Copyright 2026  mvspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Differentiable operations on Graph variables. Sequences are [T x D]
// matrices (one frame per row). 2-d feature maps with C channels are stored
// as [C x (H*W)] with spatial index h + H*w.

#ifndef MVSPOOF_NN_OPS_HPP_
#define MVSPOOF_NN_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "mvspoof/nn/graph.hpp"

namespace mvspoof::nn {

namespace detail {

inline void check_same_shape(Index r1, Index c1, Index r2, Index c2, const char* op) {
  if (r1 != r2 || c1 != c2)
    throw Error(std::string(op) + ": shape mismatch " + std::to_string(r1) + "x" +
                std::to_string(c1) + " vs " + std::to_string(r2) + "x" + std::to_string(c2));
}

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace detail

// ---------------------------------------------------------------- linear algebra

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.rows())
    throw Error("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                std::to_string(b.rows()) + " differ");
  Matrix<T> out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return a.graph().emit(std::move(out), {a, b}, [a, b](const Matrix<T>& go, const Matrix<T>&) {
    if (a.needs_grad()) a.grad().noalias() += go * b.value().transpose();
    if (b.needs_grad()) b.grad().noalias() += a.value().transpose() * go;
  });
}

/// alpha * a * b^T.
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b, T alpha = T(1)) {
  if (a.cols() != b.cols()) throw Error("matmul_nt: inner dimensions differ");
  Matrix<T> out(a.rows(), b.rows());
  out.noalias() = alpha * (a.value() * b.value().transpose());
  return a.graph().emit(std::move(out), {a, b}, [a, b, alpha](const Matrix<T>& go, const Matrix<T>&) {
    if (a.needs_grad()) a.grad().noalias() += alpha * (go * b.value());
    if (b.needs_grad()) b.grad().noalias() += alpha * (go.transpose() * a.value());
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  return a.graph().emit(a.value().transpose(), {a}, [a](const Matrix<T>& go, const Matrix<T>&) {
    a.grad() += go.transpose();
  });
}

/// x * W + b (b is a [1 x out] row broadcast over rows; may be invalid).
template <typename T>
Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  if (x.cols() != w.rows())
    throw Error("affine: input width " + std::to_string(x.cols()) + " != weight rows " +
                std::to_string(w.rows()));
  Matrix<T> out(x.rows(), w.cols());
  out.noalias() = x.value() * w.value();
  if (b.valid()) {
    if (b.rows() != 1 || b.cols() != w.cols()) throw Error("affine: bias shape mismatch");
    out.rowwise() += b.value().row(0);
  }
  auto& g = x.graph();
  if (b.valid())
    return g.emit(std::move(out), {x, w, b}, [x, w, b](const Matrix<T>& go, const Matrix<T>&) {
      if (x.needs_grad()) x.grad().noalias() += go * w.value().transpose();
      if (w.needs_grad()) w.grad().noalias() += x.value().transpose() * go;
      if (b.needs_grad()) b.grad() += go.colwise().sum();
    });
  return g.emit(std::move(out), {x, w}, [x, w](const Matrix<T>& go, const Matrix<T>&) {
    if (x.needs_grad()) x.grad().noalias() += go * w.value().transpose();
    if (w.needs_grad()) w.grad().noalias() += x.value().transpose() * go;
  });
}

// ---------------------------------------------------------------- elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "add");
  return a.graph().emit(a.value() + b.value(), {a, b}, [a, b](const Matrix<T>& go, const Matrix<T>&) {
    if (a.needs_grad()) a.grad() += go;
    if (b.needs_grad()) b.grad() += go;
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "sub");
  return a.graph().emit(a.value() - b.value(), {a, b}, [a, b](const Matrix<T>& go, const Matrix<T>&) {
    if (a.needs_grad()) a.grad() += go;
    if (b.needs_grad()) b.grad() -= go;
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "mul");
  return a.graph().emit(a.value().cwiseProduct(b.value()), {a, b},
                        [a, b](const Matrix<T>& go, const Matrix<T>&) {
                          if (a.needs_grad()) a.grad() += go.cwiseProduct(b.value());
                          if (b.needs_grad()) b.grad() += go.cwiseProduct(a.value());
                        });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  return a.graph().emit(a.value() * s, {a}, [a, s](const Matrix<T>& go, const Matrix<T>&) {
    a.grad() += go * s;
  });
}

/// a + row, with `row` a [1 x C] broadcast over the rows of a.
template <typename T>
Var<T> add_row(const Var<T>& a, const Var<T>& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("add_row: shape mismatch");
  Matrix<T> out = a.value();
  out.rowwise() += row.value().row(0);
  return a.graph().emit(std::move(out), {a, row}, [a, row](const Matrix<T>& go, const Matrix<T>&) {
    if (a.needs_grad()) a.grad() += go;
    if (row.needs_grad()) row.grad() += go.colwise().sum();
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Matrix<T> out = a.value().cwiseMax(T(0));
  return a.graph().emit(std::move(out), {a}, [a](const Matrix<T>& go, const Matrix<T>&) {
    a.grad().array() += (a.value().array() > T(0)).select(go.array(), T(0));
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  Matrix<T> out = a.value().unaryExpr([](T x) { return detail::sigmoid(x); });
  return a.graph().emit(std::move(out), {a}, [a](const Matrix<T>& go, const Matrix<T>& y) {
    a.grad().array() += go.array() * y.array() * (T(1) - y.array());
  });
}

template <typename T>
Var<T> tanh(const Var<T>& a) {
  Matrix<T> out = a.value().array().tanh().matrix();
  return a.graph().emit(std::move(out), {a}, [a](const Matrix<T>& go, const Matrix<T>& y) {
    a.grad().array() += go.array() * (T(1) - y.array().square());
  });
}

/// x * sigmoid(x) ("swish").
template <typename T>
Var<T> silu(const Var<T>& a) {
  Matrix<T> sig = a.value().unaryExpr([](T x) { return detail::sigmoid(x); });
  Matrix<T> out = a.value().cwiseProduct(sig);
  return a.graph().emit(std::move(out), {a}, [a, sig = std::move(sig)](const Matrix<T>& go, const Matrix<T>&) {
    a.grad().array() +=
        go.array() * sig.array() * (T(1) + a.value().array() * (T(1) - sig.array()));
  });
}

/// Gated linear unit over columns: first half * sigmoid(second half).
template <typename T>
Var<T> glu(const Var<T>& a) {
  if (a.cols() % 2 != 0) throw Error("glu: odd width");
  const Index h = a.cols() / 2;
  Matrix<T> gate = a.value().rightCols(h).unaryExpr([](T x) { return detail::sigmoid(x); });
  Matrix<T> out = a.value().leftCols(h).cwiseProduct(gate);
  return a.graph().emit(std::move(out), {a}, [a, h, gate = std::move(gate)](const Matrix<T>& go, const Matrix<T>&) {
    auto& g = a.grad();
    g.leftCols(h).array() += go.array() * gate.array();
    g.rightCols(h).array() +=
        go.array() * a.value().leftCols(h).array() * gate.array() * (T(1) - gate.array());
  });
}

// ---------------------------------------------------------------- normalization

/// Row-wise softmax. `additive_mask` (same shape, entries 0 or -inf) is added
/// to the logits first; every row must keep at least one finite entry.
template <typename T>
Var<T> softmax_rows(const Var<T>& a, const Matrix<T>* additive_mask = nullptr) {
  Matrix<T> x = a.value();
  if (additive_mask != nullptr) {
    detail::check_same_shape(x.rows(), x.cols(), additive_mask->rows(), additive_mask->cols(),
                             "softmax_rows mask");
    x += *additive_mask;
  }
  for (Index r = 0; r < x.rows(); ++r) {
    const T m = x.row(r).maxCoeff();
    x.row(r) = (x.row(r).array() - m).exp().matrix();
    x.row(r) /= x.row(r).sum();
  }
  return a.graph().emit(std::move(x), {a}, [a](const Matrix<T>& go, const Matrix<T>& y) {
    const Eigen::Matrix<T, Eigen::Dynamic, 1> dot = go.cwiseProduct(y).rowwise().sum();
    a.grad().array() += y.array() * (go.colwise() - dot).array();
  });
}

template <typename T>
Var<T> log_softmax_rows(const Var<T>& a) {
  Matrix<T> out(a.rows(), a.cols());
  for (Index r = 0; r < out.rows(); ++r) {
    const T m = a.value().row(r).maxCoeff();
    const T lse = m + std::log((a.value().row(r).array() - m).exp().sum());
    out.row(r) = a.value().row(r).array() - lse;
  }
  return a.graph().emit(std::move(out), {a}, [a](const Matrix<T>& go, const Matrix<T>& y) {
    const Eigen::Matrix<T, Eigen::Dynamic, 1> s = go.rowwise().sum();
    a.grad().array() += go.array() - (y.array().exp().colwise() * s.array());
  });
}

/// Per-row layer normalization with [1 x D] gain and bias.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
  const Index n = x.rows(), d = x.cols();
  if (gamma.cols() != d || beta.cols() != d) throw Error("layer_norm: parameter width mismatch");
  Matrix<T> xhat(n, d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
  for (Index r = 0; r < n; ++r) {
    const T mu = x.value().row(r).mean();
    const T var = (x.value().row(r).array() - mu).square().mean();
    inv_std(r) = T(1) / std::sqrt(var + eps);
    xhat.row(r) = (x.value().row(r).array() - mu) * inv_std(r);
  }
  Matrix<T> out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return x.graph().emit(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Matrix<T>& go, const Matrix<T>&) {
        if (gamma.needs_grad()) gamma.grad() += go.cwiseProduct(xhat).colwise().sum();
        if (beta.needs_grad()) beta.grad() += go.colwise().sum();
        if (x.needs_grad()) {
          const Matrix<T> dxhat = go.array().rowwise() * gamma.value().row(0).array();
          const Eigen::Matrix<T, Eigen::Dynamic, 1> m1 = dxhat.rowwise().mean();
          const Eigen::Matrix<T, Eigen::Dynamic, 1> m2 =
              dxhat.cwiseProduct(xhat).rowwise().mean();
          Matrix<T> dx = dxhat;
          dx.colwise() -= m1;
          dx.array() -= xhat.array().colwise() * m2.array();
          dx.array().colwise() *= inv_std.array();
          x.grad() += dx;
        }
      });
}

// ---------------------------------------------------------------- reshaping

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  const Index r = parts[0].rows();
  Index c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw Error("concat_cols: row count mismatch");
    c += p.cols();
  }
  Matrix<T> out(r, c);
  Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return parts[0].graph().emit(std::move(out), parts, [parts](const Matrix<T>& go, const Matrix<T>&) {
    Index off = 0;
    for (const auto& p : parts) {
      if (p.needs_grad()) p.grad() += go.middleCols(off, p.cols());
      off += p.cols();
    }
  });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw Error("concat_rows: no inputs");
  const Index c = parts[0].cols();
  Index r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) throw Error("concat_rows: column count mismatch");
    r += p.rows();
  }
  Matrix<T> out(r, c);
  Index off = 0;
  for (const auto& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return parts[0].graph().emit(std::move(out), parts, [parts](const Matrix<T>& go, const Matrix<T>&) {
    Index off = 0;
    for (const auto& p : parts) {
      if (p.needs_grad()) p.grad() += go.middleRows(off, p.rows());
      off += p.rows();
    }
  });
}

template <typename T>
Var<T> slice_cols(const Var<T>& a, Index start, Index n) {
  if (start < 0 || n < 0 || start + n > a.cols()) throw Error("slice_cols: out of range");
  return a.graph().emit(a.value().middleCols(start, n), {a}, [a, start, n](const Matrix<T>& go, const Matrix<T>&) {
    a.grad().middleCols(start, n) += go;
  });
}

template <typename T>
Var<T> slice_rows(const Var<T>& a, Index start, Index n) {
  if (start < 0 || n < 0 || start + n > a.rows()) throw Error("slice_rows: out of range");
  return a.graph().emit(a.value().middleRows(start, n), {a}, [a, start, n](const Matrix<T>& go, const Matrix<T>&) {
    a.grad().middleRows(start, n) += go;
  });
}

/// out.row(i) = a.row(index[i]). Used for table lookups, tiling and
/// repeat-upsampling.
template <typename T>
Var<T> gather_rows(const Var<T>& a, std::vector<Index> index) {
  Matrix<T> out(static_cast<Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows()) throw Error("gather_rows: index out of range");
    out.row(static_cast<Index>(i)) = a.value().row(index[i]);
  }
  return a.graph().emit(std::move(out), {a}, [a, index = std::move(index)](const Matrix<T>& go, const Matrix<T>&) {
    auto& g = a.grad();
    for (std::size_t i = 0; i < index.size(); ++i) g.row(index[i]) += go.row(static_cast<Index>(i));
  });
}

/// Reinterprets the column-major storage with a new shape.
template <typename T>
Var<T> reshape(const Var<T>& a, Index rows, Index cols) {
  if (rows * cols != a.value().size()) throw Error("reshape: size mismatch");
  Matrix<T> out = Eigen::Map<const Matrix<T>>(a.value().data(), rows, cols);
  const Index r0 = a.rows(), c0 = a.cols();
  return a.graph().emit(std::move(out), {a}, [a, r0, c0](const Matrix<T>& go, const Matrix<T>&) {
    a.grad() += Eigen::Map<const Matrix<T>>(go.data(), r0, c0);
  });
}

// ---------------------------------------------------------------- reductions

/// Mean over rows: [T x D] -> [1 x D].
template <typename T>
Var<T> mean_rows(const Var<T>& a) {
  const T n = static_cast<T>(a.rows());
  return a.graph().emit(a.value().colwise().mean(), {a}, [a, n](const Matrix<T>& go, const Matrix<T>&) {
    a.grad().rowwise() += go.row(0) / n;
  });
}

template <typename T>
Var<T> sum_all(const Var<T>& a) {
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph().emit(std::move(out), {a}, [a](const Matrix<T>& go, const Matrix<T>&) {
    a.grad().array() += go(0, 0);
  });
}

// ---------------------------------------------------------------- convolution

/// 2-d convolution of x [Cin x H*W] with weight [Cout x Cin*kh*kw] (column
/// index (c*kh + i)*kw + j) and optional bias [Cout x 1].
template <typename T>
Var<T> conv2d(const Var<T>& x, Index height, Index width, const Var<T>& weight,
              const Var<T>& bias, Index kh, Index kw, Index stride, Index pad) {
  const Index cin = x.rows();
  if (x.cols() != height * width) throw Error("conv2d: input is not H*W wide");
  if (weight.cols() != cin * kh * kw) throw Error("conv2d: weight shape mismatch");
  const Index ho = (height + 2 * pad - kh) / stride + 1;
  const Index wo = (width + 2 * pad - kw) / stride + 1;
  if (ho <= 0 || wo <= 0) throw Error("conv2d: input smaller than kernel");
  Matrix<T> col = Matrix<T>::Zero(cin * kh * kw, ho * wo);
  const Matrix<T>& xv = x.value();
  for (Index c = 0; c < cin; ++c)
    for (Index i = 0; i < kh; ++i)
      for (Index j = 0; j < kw; ++j) {
        const Index r = (c * kh + i) * kw + j;
        for (Index ow = 0; ow < wo; ++ow) {
          const Index iw = ow * stride - pad + j;
          if (iw < 0 || iw >= width) continue;
          for (Index oh = 0; oh < ho; ++oh) {
            const Index ih = oh * stride - pad + i;
            if (ih < 0 || ih >= height) continue;
            col(r, oh + ho * ow) = xv(c, ih + height * iw);
          }
        }
      }
  Matrix<T> out(weight.rows(), ho * wo);
  out.noalias() = weight.value() * col;
  if (bias.valid()) {
    if (bias.rows() != weight.rows() || bias.cols() != 1) throw Error("conv2d: bias shape");
    out.colwise() += bias.value().col(0);
  }
  auto backward = [x, weight, bias, col = std::move(col), height, width, kh, kw, stride, pad, ho,
                   wo, cin](const Matrix<T>& go, const Matrix<T>&) {
    if (weight.needs_grad()) weight.grad().noalias() += go * col.transpose();
    if (bias.valid() && bias.needs_grad()) bias.grad() += go.rowwise().sum();
    if (x.needs_grad()) {
      Matrix<T> dcol(col.rows(), col.cols());
      dcol.noalias() = weight.value().transpose() * go;
      auto& gx = x.grad();
      for (Index c = 0; c < cin; ++c)
        for (Index i = 0; i < kh; ++i)
          for (Index j = 0; j < kw; ++j) {
            const Index r = (c * kh + i) * kw + j;
            for (Index ow = 0; ow < wo; ++ow) {
              const Index iw = ow * stride - pad + j;
              if (iw < 0 || iw >= width) continue;
              for (Index oh = 0; oh < ho; ++oh) {
                const Index ih = oh * stride - pad + i;
                if (ih < 0 || ih >= height) continue;
                gx(c, ih + height * iw) += dcol(r, oh + ho * ow);
              }
            }
          }
    }
  };
  if (bias.valid()) return x.graph().emit(std::move(out), {x, weight, bias}, std::move(backward));
  return x.graph().emit(std::move(out), {x, weight}, std::move(backward));
}

/// Max-Feature-Map: element-wise max of the first and second half of the
/// channels; [C x S] -> [C/2 x S].
template <typename T>
Var<T> max_feature_map(const Var<T>& x) {
  if (x.rows() % 2 != 0) throw Error("max_feature_map: odd channel count");
  const Index h = x.rows() / 2;
  const auto& v = x.value();
  Matrix<T> out = v.topRows(h).cwiseMax(v.bottomRows(h));
  return x.graph().emit(std::move(out), {x}, [x, h](const Matrix<T>& go, const Matrix<T>&) {
    const auto& v = x.value();
    auto& g = x.grad();
    for (Index s = 0; s < v.cols(); ++s)
      for (Index c = 0; c < h; ++c) {
        if (v(c, s) >= v(c + h, s))
          g(c, s) += go(c, s);
        else
          g(c + h, s) += go(c, s);
      }
  });
}

/// 2x2 max pooling with stride 2 (floor) on [C x H*W].
template <typename T>
Var<T> max_pool2(const Var<T>& x, Index height, Index width) {
  if (x.cols() != height * width) throw Error("max_pool2: input is not H*W wide");
  const Index ho = height / 2, wo = width / 2;
  if (ho == 0 || wo == 0) throw Error("max_pool2: input smaller than the pool");
  const auto& v = x.value();
  Matrix<T> out(v.rows(), ho * wo);
  std::vector<Index> arg(static_cast<std::size_t>(v.rows() * ho * wo));
  for (Index c = 0; c < v.rows(); ++c)
    for (Index ow = 0; ow < wo; ++ow)
      for (Index oh = 0; oh < ho; ++oh) {
        Index best = (2 * oh) + height * (2 * ow);
        for (Index dw = 0; dw < 2; ++dw)
          for (Index dh = 0; dh < 2; ++dh) {
            const Index s = (2 * oh + dh) + height * (2 * ow + dw);
            if (v(c, s) > v(c, best)) best = s;
          }
        out(c, oh + ho * ow) = v(c, best);
        arg[static_cast<std::size_t>(c * ho * wo + oh + ho * ow)] = best;
      }
  return x.graph().emit(std::move(out), {x}, [x, ho, wo, arg = std::move(arg)](const Matrix<T>& go, const Matrix<T>&) {
    auto& g = x.grad();
    for (Index c = 0; c < go.rows(); ++c)
      for (Index o = 0; o < ho * wo; ++o)
        g(c, arg[static_cast<std::size_t>(c * ho * wo + o)]) += go(c, o);
  });
}

/// [C x H*W] map -> [H x C*W] sequence (one row per h, column c*W + w).
template <typename T>
Var<T> map_to_sequence(const Var<T>& x, Index height, Index width) {
  const Index c = x.rows();
  if (x.cols() != height * width) throw Error("map_to_sequence: input is not H*W wide");
  Matrix<T> out(height, c * width);
  for (Index ch = 0; ch < c; ++ch)
    for (Index w = 0; w < width; ++w)
      for (Index h = 0; h < height; ++h) out(h, ch * width + w) = x.value()(ch, h + height * w);
  return x.graph().emit(std::move(out), {x}, [x, c, height, width](const Matrix<T>& go, const Matrix<T>&) {
    auto& g = x.grad();
    for (Index ch = 0; ch < c; ++ch)
      for (Index w = 0; w < width; ++w)
        for (Index h = 0; h < height; ++h) g(ch, h + height * w) += go(h, ch * width + w);
  });
}

/// Per-channel 1-d convolution over time with "same" zero padding.
/// x [T x C], weight [K x C] (K odd), bias [1 x C] (optional). When
/// `segment` is non-empty it assigns each frame a segment id and taps that
/// cross a segment boundary read zero.
template <typename T>
Var<T> depthwise_conv1d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
                        std::vector<int> segment = {}) {
  const Index t_len = x.rows(), c = x.cols(), k = weight.rows();
  if (weight.cols() != c || k % 2 == 0) throw Error("depthwise_conv1d: weight shape mismatch");
  if (!segment.empty() && static_cast<Index>(segment.size()) != t_len)
    throw Error("depthwise_conv1d: segment map length mismatch");
  const Index p = (k - 1) / 2;
  auto seg = std::make_shared<const std::vector<int>>(std::move(segment));
  auto tap_ok = [seg, t_len](Index t, Index s) {
    if (s < 0 || s >= t_len) return false;
    return seg->empty() ||
           (*seg)[static_cast<std::size_t>(s)] == (*seg)[static_cast<std::size_t>(t)];
  };
  Matrix<T> out = Matrix<T>::Zero(t_len, c);
  for (Index t = 0; t < t_len; ++t)
    for (Index j = 0; j < k; ++j) {
      const Index s = t + j - p;
      if (tap_ok(t, s)) out.row(t) += x.value().row(s).cwiseProduct(weight.value().row(j));
    }
  if (bias.valid()) out.rowwise() += bias.value().row(0);
  auto backward = [x, weight, bias, p, k, t_len, tap_ok](const Matrix<T>& go, const Matrix<T>&) {
    for (Index t = 0; t < t_len; ++t)
      for (Index j = 0; j < k; ++j) {
        const Index s = t + j - p;
        if (!tap_ok(t, s)) continue;
        if (x.needs_grad()) x.grad().row(s) += go.row(t).cwiseProduct(weight.value().row(j));
        if (weight.needs_grad())
          weight.grad().row(j) += go.row(t).cwiseProduct(x.value().row(s));
      }
    if (bias.valid() && bias.needs_grad()) bias.grad() += go.colwise().sum();
  };
  if (bias.valid()) return x.graph().emit(std::move(out), {x, weight, bias}, std::move(backward));
  return x.graph().emit(std::move(out), {x, weight}, std::move(backward));
}

/// [T x C] -> [T x K*C] with column j*C + c holding x(t + j - pad, c) (zero
/// outside the sequence). Followed by a matmul this is a 1-d convolution.
template <typename T>
Var<T> unfold_time(const Var<T>& x, Index k, Index pad) {
  const Index t_len = x.rows(), c = x.cols();
  Matrix<T> out = Matrix<T>::Zero(t_len, k * c);
  for (Index t = 0; t < t_len; ++t)
    for (Index j = 0; j < k; ++j) {
      const Index s = t + j - pad;
      if (s >= 0 && s < t_len) out.block(t, j * c, 1, c) = x.value().row(s);
    }
  return x.graph().emit(std::move(out), {x}, [x, k, pad, t_len, c](const Matrix<T>& go, const Matrix<T>&) {
    auto& g = x.grad();
    for (Index t = 0; t < t_len; ++t)
      for (Index j = 0; j < k; ++j) {
        const Index s = t + j - pad;
        if (s >= 0 && s < t_len) g.row(s) += go.block(t, j * c, 1, c);
      }
  });
}

/// Relative-position shift: bd is [T x (2T-1)] with column r holding relative
/// distance (T-1-r); output is [T x T] with out(i, j) = bd(i, T-1-i+j).
template <typename T>
Var<T> rel_shift(const Var<T>& bd) {
  const Index t_len = bd.rows();
  if (bd.cols() != 2 * t_len - 1) throw Error("rel_shift: expected T x (2T-1)");
  Matrix<T> out(t_len, t_len);
  for (Index j = 0; j < t_len; ++j)
    for (Index i = 0; i < t_len; ++i) out(i, j) = bd.value()(i, t_len - 1 - i + j);
  return bd.graph().emit(std::move(out), {bd}, [bd, t_len](const Matrix<T>& go, const Matrix<T>&) {
    auto& g = bd.grad();
    for (Index j = 0; j < t_len; ++j)
      for (Index i = 0; i < t_len; ++i) g(i, t_len - 1 - i + j) += go(i, j);
  });
}

// ---------------------------------------------------------------- recurrent

/// One LSTM cell update. `pre` is [1 x 4H] gate pre-activations in the order
/// input, forget, cell, output; `c_prev` is [1 x H]. Returns [1 x 2H] = [h | c].
template <typename T>
Var<T> lstm_cell(const Var<T>& pre, const Var<T>& c_prev) {
  const Index h = c_prev.cols();
  if (pre.rows() != 1 || c_prev.rows() != 1 || pre.cols() != 4 * h)
    throw Error("lstm_cell: shape mismatch");
  const auto& z = pre.value();
  Matrix<T> gates(1, 4 * h);
  for (Index k = 0; k < h; ++k) {
    gates(0, k) = detail::sigmoid(z(0, k));
    gates(0, h + k) = detail::sigmoid(z(0, h + k));
    gates(0, 2 * h + k) = std::tanh(z(0, 2 * h + k));
    gates(0, 3 * h + k) = detail::sigmoid(z(0, 3 * h + k));
  }
  Matrix<T> out(1, 2 * h);
  Matrix<T> tanh_c(1, h);
  for (Index k = 0; k < h; ++k) {
    const T c = gates(0, h + k) * c_prev.value()(0, k) + gates(0, k) * gates(0, 2 * h + k);
    tanh_c(0, k) = std::tanh(c);
    out(0, k) = gates(0, 3 * h + k) * tanh_c(0, k);
    out(0, h + k) = c;
  }
  return pre.graph().emit(
      std::move(out), {pre, c_prev},
      [pre, c_prev, h, gates = std::move(gates), tanh_c = std::move(tanh_c)](const Matrix<T>& go, const Matrix<T>&) {
        Matrix<T> dz(1, 4 * h);
        Matrix<T> dcp(1, h);
        for (Index k = 0; k < h; ++k) {
          const T i = gates(0, k), f = gates(0, h + k), gg = gates(0, 2 * h + k),
                  o = gates(0, 3 * h + k);
          const T dh = go(0, k);
          const T dc = go(0, h + k) + dh * o * (T(1) - tanh_c(0, k) * tanh_c(0, k));
          dz(0, k) = dc * gg * i * (T(1) - i);
          dz(0, h + k) = dc * c_prev.value()(0, k) * f * (T(1) - f);
          dz(0, 2 * h + k) = dc * i * (T(1) - gg * gg);
          dz(0, 3 * h + k) = dh * tanh_c(0, k) * o * (T(1) - o);
          dcp(0, k) = dc * f;
        }
        if (pre.needs_grad()) pre.grad() += dz;
        if (c_prev.needs_grad()) c_prev.grad() += dcp;
      });
}

// ---------------------------------------------------------------- losses

/// Sum (or mean) over rows of -log softmax(logits)[label].
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::vector<int> labels, bool mean = true) {
  const Index n = logits.rows(), c = logits.cols();
  if (static_cast<Index>(labels.size()) != n || n == 0)
    throw Error("cross_entropy: label count mismatch");
  Matrix<T> prob(n, c);
  T total = 0;
  for (Index r = 0; r < n; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= c) throw Error("cross_entropy: label out of range");
    const T m = logits.value().row(r).maxCoeff();
    const auto e = (logits.value().row(r).array() - m).exp();
    const T s = e.sum();
    prob.row(r) = e / s;
    total += -(logits.value()(r, y) - m - std::log(s));
  }
  const T norm = mean ? T(1) / static_cast<T>(n) : T(1);
  Matrix<T> out(1, 1);
  out(0, 0) = total * norm;
  return logits.graph().emit(
      std::move(out), {logits},
      [logits, labels = std::move(labels), prob = std::move(prob), norm](const Matrix<T>& go, const Matrix<T>&) {
        Matrix<T> d = prob;
        for (Index r = 0; r < d.rows(); ++r) d(r, labels[static_cast<std::size_t>(r)]) -= T(1);
        logits.grad() += d * (norm * go(0, 0));
      });
}

namespace detail {

template <typename T>
T log_add(T a, T b) {
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace detail

/// Minimum number of frames a CTC alignment of `targets` needs.
inline std::size_t ctc_min_frames(std::span<const int> targets) {
  std::size_t n = targets.size();
  for (std::size_t i = 1; i < targets.size(); ++i)
    if (targets[i] == targets[i - 1]) ++n;
  return n;
}

/// Connectionist temporal classification loss, -log p(targets | logits),
/// via the forward-backward recursions in log space. Blank is index 0.
template <typename T>
Var<T> ctc_loss(const Var<T>& logits, std::vector<int> targets) {
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  const Index t_len = logits.rows(), vocab = logits.cols();
  for (int y : targets)
    if (y <= 0 || y >= vocab) throw Error("ctc_loss: target id out of range (blank is 0)");
  if (ctc_min_frames(targets) > static_cast<std::size_t>(t_len))
    throw Error("ctc_loss: target sequence of length " + std::to_string(targets.size()) +
                " does not fit in " + std::to_string(t_len) + " frames");

  // Log-probabilities.
  Matrix<T> lp(t_len, vocab);
  for (Index t = 0; t < t_len; ++t) {
    const T m = logits.value().row(t).maxCoeff();
    const T lse = m + std::log((logits.value().row(t).array() - m).exp().sum());
    lp.row(t) = logits.value().row(t).array() - lse;
  }
  // Extended label sequence with blanks: b y1 b y2 ... b.
  const Index s_len = 2 * static_cast<Index>(targets.size()) + 1;
  std::vector<int> ext(static_cast<std::size_t>(s_len), 0);
  for (std::size_t i = 0; i < targets.size(); ++i) ext[2 * i + 1] = targets[i];
  auto label = [&ext](Index s) { return ext[static_cast<std::size_t>(s)]; };
  auto can_skip = [&](Index s) { return s >= 2 && label(s) != 0 && label(s) != label(s - 2); };

  Matrix<T> alpha = Matrix<T>::Constant(t_len, s_len, kNegInf);
  alpha(0, 0) = lp(0, 0);
  if (s_len > 1) alpha(0, 1) = lp(0, label(1));
  for (Index t = 1; t < t_len; ++t)
    for (Index s = 0; s < s_len; ++s) {
      T a = alpha(t - 1, s);
      if (s >= 1) a = detail::log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = detail::log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, label(s));
    }
  // beta(t, s): log-prob of emitting frames t+1.. given state s at frame t.
  Matrix<T> beta = Matrix<T>::Constant(t_len, s_len, kNegInf);
  beta(t_len - 1, s_len - 1) = 0;
  if (s_len > 1) beta(t_len - 1, s_len - 2) = 0;
  for (Index t = t_len - 2; t >= 0; --t)
    for (Index s = 0; s < s_len; ++s) {
      T b = beta(t + 1, s) + lp(t + 1, label(s));
      if (s + 1 < s_len) b = detail::log_add(b, beta(t + 1, s + 1) + lp(t + 1, label(s + 1)));
      if (s + 2 < s_len && can_skip(s + 2))
        b = detail::log_add(b, beta(t + 1, s + 2) + lp(t + 1, label(s + 2)));
      beta(t, s) = b;
    }
  T log_p = alpha(t_len - 1, s_len - 1);
  if (s_len > 1) log_p = detail::log_add(log_p, alpha(t_len - 1, s_len - 2));
  if (!std::isfinite(log_p)) throw Error("ctc_loss: no valid alignment");

  Matrix<T> out(1, 1);
  out(0, 0) = -log_p;
  return logits.graph().emit(
      std::move(out), {logits},
      [logits, lp = std::move(lp), alpha = std::move(alpha), beta = std::move(beta),
       ext = std::move(ext), log_p, t_len, s_len, vocab](const Matrix<T>& go, const Matrix<T>&) {
        // d(-log p)/d logit(t, k) = softmax(t, k) - occupancy(t, k).
        Matrix<T> d = lp.array().exp().matrix();
        for (Index t = 0; t < t_len; ++t) {
          Eigen::Matrix<T, 1, Eigen::Dynamic> occ =
              Eigen::Matrix<T, 1, Eigen::Dynamic>::Constant(vocab, -std::numeric_limits<T>::infinity());
          for (Index s = 0; s < s_len; ++s) {
            const int k = ext[static_cast<std::size_t>(s)];
            occ(k) = detail::log_add(occ(k), alpha(t, s) + beta(t, s));
          }
          for (Index k = 0; k < vocab; ++k) d(t, k) -= std::exp(occ(k) - log_p);
        }
        logits.grad() += d * go(0, 0);
      });
}

}  // namespace mvspoof::nn

#endif  // MVSPOOF_NN_OPS_HPP_
