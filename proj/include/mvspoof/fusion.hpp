// include/mvspoof/fusion.hpp

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

// Multi-view fusion. Views are length-fixed frame sequences on the common
// 10 ms grid: wav2vec-style features (projected to 128), duration ids, and
// pronunciation features, with LFCC as an alternative key/value view.
//
// In attention mode the wav2vec (or LFCC) embedding supplies keys and values
// and each of the duration and pronunciation embeddings drives its own stack
// of cross-attention encoder blocks as queries; the attended streams are
// concatenated. Concat mode joins the raw views column-wise.

#ifndef MVSPOOF_FUSION_HPP_
#define MVSPOOF_FUSION_HPP_

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mvspoof/duration.hpp"
#include "mvspoof/frame_encoders.hpp"
#include "mvspoof/nn/layers.hpp"
#include "mvspoof/nn/ops.hpp"

namespace mvspoof {

enum class View { kW2v, kLfcc, kDuration, kPron };
enum class FusionMode { kConcat, kAttention, kSingleView };

const char* view_name(View v);
View parse_view(const std::string& s);
const char* fusion_mode_name(FusionMode m);
FusionMode parse_fusion_mode(const std::string& s);

struct FusionConfig {
  int d_model = 128;
  int n_heads = 8;
  int n_blocks = 6;
  int ff_expansion = 4;
  FusionMode mode = FusionMode::kAttention;
  std::vector<View> views{View::kW2v, View::kDuration, View::kPron};
  /// Duration vocabulary K; the embedding table has K + 1 rows.
  int duration_vocab = kDefaultVocabulary;
  int w2v_dim = 1024;
  int pron_dim = 144;
  int lfcc_dim = 60;

  void validate() const;
  bool has(View v) const;
  /// The key/value view in attention mode (w2v or LFCC).
  View key_view() const;
  /// Query views in attention mode, in configured order.
  std::vector<View> query_views() const;
  /// Width of the fused representation.
  int fused_dim() const;
};

/// Per-utterance inputs for the fusion front-end, all with the same number of
/// rows. Views not used by the configuration may be left empty.
template <typename T>
struct ViewInputs {
  nn::Matrix<T> w2v;          // [n x w2v_dim]
  nn::Matrix<T> lfcc;         // [n x 60]
  std::vector<int> duration;  // n ids in 1..K
  nn::Matrix<T> pron;         // [n x 144]
};

/// softmax(Q K^T / sqrt(d_k)) V with the row maximum subtracted before
/// exponentiation.
MatrixXd scaled_dot_attention(const MatrixXd& q, const MatrixXd& k, const MatrixXd& v);

/// Scaled dot-product attention on a graph.
template <typename T>
nn::Var<T> scaled_dot_attention(const nn::Var<T>& q, const nn::Var<T>& k, const nn::Var<T>& v) {
  if (q.cols() != k.cols()) throw Error("attention: query and key widths differ");
  if (k.rows() != v.rows()) throw Error("attention: key and value lengths differ");
  const T scale = T(1) / std::sqrt(static_cast<T>(k.cols()));
  return nn::matmul(nn::softmax_rows(nn::matmul_nt(q, k, scale)), v);
}

/// One post-norm encoder block whose queries come from the running state and
/// keys/values from another view.
template <typename T>
struct CrossAttentionBlock {
  nn::MultiHeadAttention<T> attention;
  nn::LayerNorm<T> norm1;
  nn::Linear<T> ff1, ff2;
  nn::LayerNorm<T> norm2;

  CrossAttentionBlock() = default;
  CrossAttentionBlock(const std::string& name, const FusionConfig& c, Rng& rng)
      : attention(name + ".attention", c.d_model, c.n_heads, rng),
        norm1(name + ".norm1", c.d_model),
        ff1(name + ".ff1", c.d_model, c.d_model * c.ff_expansion, rng),
        ff2(name + ".ff2", c.d_model * c.ff_expansion, c.d_model, rng),
        norm2(name + ".norm2", c.d_model) {}

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& x, const nn::Var<T>& keys,
                        const nn::Var<T>& values) {
    const nn::Var<T> h = norm1(g, nn::add(x, attention(g, x, keys, values)));
    return norm2(g, nn::add(h, ff2(g, nn::relu(ff1(g, h)))));
  }

  void collect(nn::ParamList<T>& out) {
    attention.collect(out);
    norm1.collect(out);
    ff1.collect(out);
    ff2.collect(out);
    norm2.collect(out);
  }
};

/// n_blocks cross-attention blocks. Sinusoidal positions are added to the
/// queries and the keys before the first block; values carry none.
template <typename T>
struct CrossAttentionStack {
  std::vector<CrossAttentionBlock<T>> blocks;

  CrossAttentionStack() = default;
  CrossAttentionStack(const std::string& name, const FusionConfig& c, Rng& rng) {
    for (int b = 0; b < c.n_blocks; ++b) blocks.emplace_back(name + "." + std::to_string(b), c, rng);
  }

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& query, const nn::Var<T>& kv) {
    if (query.cols() != kv.cols()) throw Error("cross attention: query and key widths differ");
    const nn::Var<T> pe_q = g.constant(nn::sinusoid_positions<T>(query.rows(), query.cols()));
    const nn::Var<T> pe_k =
        kv.rows() == query.rows() ? pe_q : g.constant(nn::sinusoid_positions<T>(kv.rows(), kv.cols()));
    nn::Var<T> x = nn::add(query, pe_q);
    const nn::Var<T> keys = nn::add(kv, pe_k);
    for (auto& b : blocks) x = b(g, x, keys, kv);
    return x;
  }

  void collect(nn::ParamList<T>& out) {
    for (auto& b : blocks) b.collect(out);
  }
};

namespace fusion_detail {

/// Rows 0..n-1 of the sequence tiled end to end.
inline std::vector<nn::Index> tile_index(nn::Index t_len, nn::Index n) {
  std::vector<nn::Index> idx(static_cast<std::size_t>(n));
  for (nn::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i % t_len;
  return idx;
}

}  // namespace fusion_detail

/// Trainable view embeddings plus the fusion operator.
template <typename T>
struct FusionFrontEnd {
  FusionConfig config;
  Projection128<T> w2v_proj;
  nn::Embedding<T> duration_embed;  // (K + 1) x d_model, row 0 unused
  nn::Linear<T> pron_proj;
  nn::Linear<T> lfcc_proj;
  std::vector<CrossAttentionStack<T>> stacks;  // one per query view

  FusionFrontEnd() = default;
  FusionFrontEnd(const FusionConfig& c, Rng& rng) : config(c) {
    c.validate();
    if (c.has(View::kW2v)) w2v_proj = Projection128<T>("fusion.w2v_proj", rng, c.w2v_dim, c.d_model);
    if (c.mode == FusionMode::kAttention) {
      if (c.has(View::kDuration))
        duration_embed = nn::Embedding<T>("fusion.duration_embed", c.duration_vocab + 1, c.d_model, rng);
      if (c.has(View::kPron)) pron_proj = nn::Linear<T>("fusion.pron_proj", c.pron_dim, c.d_model, rng);
      if (c.has(View::kLfcc)) lfcc_proj = nn::Linear<T>("fusion.lfcc_proj", c.lfcc_dim, c.d_model, rng);
      for (View q : c.query_views())
        stacks.emplace_back(std::string("fusion.cross_") + view_name(q), c, rng);
    }
  }

  /// Embeds the views at their native length, tiles every embedded view to
  /// `n_frames` rows (row-wise maps commute with tiling), and fuses.
  nn::Var<T> operator()(nn::Graph<T>& g, const ViewInputs<T>& in, nn::Index n_frames) {
    const nn::Index t_len = input_length(in);
    const auto tile = [&](const nn::Var<T>& v) {
      if (t_len == n_frames) return v;
      if (t_len > n_frames) return nn::slice_rows(v, 0, n_frames);
      return nn::gather_rows(v, fusion_detail::tile_index(t_len, n_frames));
    };
    const auto raw = [&](View v) -> nn::Var<T> {
      switch (v) {
        case View::kW2v:
          return tile(w2v_proj(g, g.constant(in.w2v)));
        case View::kLfcc:
          return tile(g.constant(in.lfcc));
        case View::kPron:
          return tile(g.constant(in.pron));
        case View::kDuration: {
          nn::Matrix<T> ids(t_len, 1);
          for (nn::Index t = 0; t < t_len; ++t)
            ids(t, 0) = static_cast<T>(in.duration[static_cast<std::size_t>(t)]) /
                        static_cast<T>(config.duration_vocab);
          return tile(g.constant(std::move(ids)));
        }
      }
      throw Error("unknown view");
    };
    if (config.mode != FusionMode::kAttention) {
      std::vector<nn::Var<T>> parts;
      for (View v : config.views) parts.push_back(raw(v));
      return parts.size() == 1 ? parts[0] : nn::concat_cols(parts);
    }
    const View key = config.key_view();
    const nn::Var<T> kv =
        key == View::kW2v ? raw(View::kW2v) : tile(lfcc_proj(g, g.constant(in.lfcc)));
    std::vector<nn::Var<T>> streams;
    const auto queries = config.query_views();
    for (std::size_t s = 0; s < queries.size(); ++s)
      streams.push_back(stacks[s](g, tile(embed_query(g, queries[s], in)), kv));
    return streams.size() == 1 ? streams[0] : nn::concat_cols(streams);
  }

  /// Duration ids through the table, pronunciation through the affine map.
  nn::Var<T> embed_query(nn::Graph<T>& g, View v, const ViewInputs<T>& in) {
    if (v == View::kDuration) {
      std::vector<nn::Index> ids(in.duration.begin(), in.duration.end());
      for (nn::Index id : ids)
        if (id < 1 || id > config.duration_vocab)
          throw Error("duration id " + std::to_string(id) + " outside 1.." +
                      std::to_string(config.duration_vocab));
      return duration_embed(g, ids);
    }
    if (v == View::kPron) return pron_proj(g, g.constant(in.pron));
    throw Error(std::string("view ") + view_name(v) + " cannot be a query");
  }

  nn::Index input_length(const ViewInputs<T>& in) const {
    nn::Index n = -1;
    const auto check = [&](nn::Index rows, nn::Index cols, nn::Index want, View v) {
      if (cols != want)
        throw Error(std::string("view ") + view_name(v) + " has width " + std::to_string(cols) +
                    ", expected " + std::to_string(want));
      if (n >= 0 && rows != n) throw Error("views have different frame counts");
      n = rows;
    };
    for (View v : config.views) switch (v) {
        case View::kW2v: check(in.w2v.rows(), in.w2v.cols(), config.w2v_dim, v); break;
        case View::kLfcc: check(in.lfcc.rows(), in.lfcc.cols(), config.lfcc_dim, v); break;
        case View::kPron: check(in.pron.rows(), in.pron.cols(), config.pron_dim, v); break;
        case View::kDuration:
          check(static_cast<nn::Index>(in.duration.size()), 1, 1, v);
          break;
      }
    if (n <= 0) throw Error("empty view inputs");
    return n;
  }

  void collect(nn::ParamList<T>& out) {
    if (config.has(View::kW2v)) w2v_proj.collect(out);
    if (config.mode == FusionMode::kAttention) {
      if (config.has(View::kDuration)) duration_embed.collect(out);
      if (config.has(View::kPron)) pron_proj.collect(out);
      if (config.has(View::kLfcc)) lfcc_proj.collect(out);
      for (auto& s : stacks) s.collect(out);
    }
  }
};

}  // namespace mvspoof

#endif  // MVSPOOF_FUSION_HPP_
