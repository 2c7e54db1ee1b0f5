// mvspoof/nn/layers.hpp

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

#ifndef MVSPOOF_NN_LAYERS_HPP_
#define MVSPOOF_NN_LAYERS_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mvspoof/nn/ops.hpp"

namespace mvspoof::nn {

template <typename T>
Matrix<T> uniform_init(Index rows, Index cols, double limit, Rng& rng) {
  Matrix<T> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<T>(rng.uniform(-limit, limit));
  return m;
}

template <typename T>
Matrix<T> normal_init(Index rows, Index cols, double stddev, Rng& rng) {
  Matrix<T> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<T>(stddev * rng.normal());
  return m;
}

template <typename T>
Matrix<T> xavier_init(Index fan_in, Index fan_out, Rng& rng) {
  return uniform_init<T>(fan_in, fan_out, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)),
                         rng);
}

/// y = x W + b with W [in x out].
template <typename T>
struct Linear {
  Parameter<T> weight;
  Parameter<T> bias;
  bool has_bias = true;

  Linear() = default;
  Linear(const std::string& name, Index in, Index out, Rng& rng, bool with_bias = true)
      : weight(name + ".weight", xavier_init<T>(in, out, rng)),
        bias(name + ".bias", Matrix<T>::Zero(1, out)),
        has_bias(with_bias) {}

  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }

  Var<T> operator()(Graph<T>& g, const Var<T>& x) {
    return affine(x, g.param(weight), has_bias ? g.param(bias) : Var<T>());
  }

  void collect(ParamList<T>& out) {
    out.push_back(&weight);
    if (has_bias) out.push_back(&bias);
  }
};

template <typename T>
struct LayerNorm {
  Parameter<T> gamma;
  Parameter<T> beta;

  LayerNorm() = default;
  LayerNorm(const std::string& name, Index dim)
      : gamma(name + ".gamma", Matrix<T>::Ones(1, dim)),
        beta(name + ".beta", Matrix<T>::Zero(1, dim)) {}

  Var<T> operator()(Graph<T>& g, const Var<T>& x) {
    return layer_norm(x, g.param(gamma), g.param(beta));
  }

  void collect(ParamList<T>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
};

/// Lookup table [rows x dim].
template <typename T>
struct Embedding {
  Parameter<T> table;

  Embedding() = default;
  Embedding(const std::string& name, Index rows, Index dim, Rng& rng)
      : table(name + ".table", normal_init<T>(rows, dim, 1.0, rng)) {}

  Var<T> operator()(Graph<T>& g, const std::vector<Index>& ids) {
    for (Index id : ids)
      if (id < 0 || id >= table.value.rows())
        throw Error("embedding id " + std::to_string(id) + " out of range [0, " +
                    std::to_string(table.value.rows()) + ")");
    return gather_rows(g.param(table), ids);
  }

  void collect(ParamList<T>& out) { out.push_back(&table); }
};

/// Single-direction LSTM layer; gate order input, forget, cell, output.
template <typename T>
struct Lstm {
  Parameter<T> w_ih;  // [in x 4H]
  Parameter<T> w_hh;  // [H x 4H]
  Parameter<T> bias;  // [1 x 4H]

  Lstm() = default;
  Lstm(const std::string& name, Index in, Index hidden, Rng& rng)
      : w_ih(name + ".w_ih", uniform_init<T>(in, 4 * hidden, 1.0 / std::sqrt(double(hidden)), rng)),
        w_hh(name + ".w_hh",
             uniform_init<T>(hidden, 4 * hidden, 1.0 / std::sqrt(double(hidden)), rng)),
        bias(name + ".bias", Matrix<T>::Zero(1, 4 * hidden)) {
    bias.value.middleCols(hidden, hidden).setOnes();  // forget-gate bias
  }

  Index hidden() const { return w_hh.value.rows(); }

  struct State {
    Var<T> h;
    Var<T> c;
  };

  State initial_state(Graph<T>& g) const {
    return {g.constant(Matrix<T>::Zero(1, hidden())), g.constant(Matrix<T>::Zero(1, hidden()))};
  }

  /// One step given precomputed input projection `xw` [1 x 4H] (bias included).
  State step_projected(Graph<T>& g, const Var<T>& xw, const State& s) {
    const Var<T> pre = add(xw, matmul(s.h, g.param(w_hh)));
    const Var<T> hc = lstm_cell(pre, s.c);
    const Index h = hidden();
    return {slice_cols(hc, 0, h), slice_cols(hc, h, h)};
  }

  State step(Graph<T>& g, const Var<T>& x, const State& s) {
    return step_projected(g, affine(x, g.param(w_ih), g.param(bias)), s);
  }

  /// Runs over a [T x in] sequence; returns [T x H] outputs in input order.
  Var<T> run(Graph<T>& g, const Var<T>& x, bool reverse = false) {
    const Var<T> xw = affine(x, g.param(w_ih), g.param(bias));
    const Index t_len = x.rows();
    State s = initial_state(g);
    std::vector<Var<T>> outs(static_cast<std::size_t>(t_len));
    for (Index k = 0; k < t_len; ++k) {
      const Index t = reverse ? t_len - 1 - k : k;
      s = step_projected(g, slice_rows(xw, t, 1), s);
      outs[static_cast<std::size_t>(t)] = s.h;
    }
    return concat_rows(outs);
  }

  void collect(ParamList<T>& out) {
    out.push_back(&w_ih);
    out.push_back(&w_hh);
    out.push_back(&bias);
  }
};

/// Standard multi-head attention: softmax(Q_i K_i^T / sqrt(d_k)) V_i per head,
/// heads concatenated and projected by W^O.
template <typename T>
struct MultiHeadAttention {
  Linear<T> wq, wk, wv, wo;
  Index heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, Index d_model, Index n_heads, Rng& rng)
      : wq(name + ".wq", d_model, d_model, rng),
        wk(name + ".wk", d_model, d_model, rng),
        wv(name + ".wv", d_model, d_model, rng),
        wo(name + ".wo", d_model, d_model, rng),
        heads(n_heads) {
    if (n_heads <= 0 || d_model % n_heads != 0)
      throw Error("d_model " + std::to_string(d_model) + " not divisible by " +
                  std::to_string(n_heads) + " heads");
  }

  Index d_model() const { return wq.in_dim(); }

  Var<T> operator()(Graph<T>& g, const Var<T>& q, const Var<T>& k, const Var<T>& v,
                    const Matrix<T>* mask = nullptr) {
    if (q.cols() != d_model() || k.cols() != d_model() || v.cols() != d_model())
      throw Error("multi-head attention: input width != d_model");
    if (k.rows() != v.rows()) throw Error("multi-head attention: key/value length mismatch");
    const Var<T> qp = wq(g, q), kp = wk(g, k), vp = wv(g, v);
    const Index dk = d_model() / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    std::vector<Var<T>> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
      const Var<T> qh = heads == 1 ? qp : slice_cols(qp, h * dk, dk);
      const Var<T> kh = heads == 1 ? kp : slice_cols(kp, h * dk, dk);
      const Var<T> vh = heads == 1 ? vp : slice_cols(vp, h * dk, dk);
      const Var<T> p = softmax_rows(matmul_nt(qh, kh, scale), mask);
      outs.push_back(matmul(p, vh));
    }
    const Var<T> cat = heads == 1 ? outs[0] : concat_cols(outs);
    return wo(g, cat);
  }

  void collect(ParamList<T>& out) {
    wq.collect(out);
    wk.collect(out);
    wv.collect(out);
    wo.collect(out);
  }
};

/// Sinusoidal encoding of the given positions, [n x dim].
template <typename T>
Matrix<T> sinusoid_table(const std::vector<double>& positions, Index dim) {
  Matrix<T> pe(static_cast<Index>(positions.size()), dim);
  for (std::size_t r = 0; r < positions.size(); ++r)
    for (Index k = 0; k < dim; k += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(k) / static_cast<double>(dim));
      pe(static_cast<Index>(r), k) = static_cast<T>(std::sin(positions[r] * freq));
      if (k + 1 < dim) pe(static_cast<Index>(r), k + 1) = static_cast<T>(std::cos(positions[r] * freq));
    }
  return pe;
}

template <typename T>
Matrix<T> sinusoid_positions(Index n, Index dim) {
  std::vector<double> pos(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = static_cast<double>(i);
  return sinusoid_table<T>(pos, dim);
}

}  // namespace mvspoof::nn

#endif  // MVSPOOF_NN_LAYERS_HPP_
