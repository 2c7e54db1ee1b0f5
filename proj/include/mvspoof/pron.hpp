// include/mvspoof/pron.hpp

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

// Pronunciation branch: a small Conformer phoneme recognizer trained with a
// joint CTC and attention objective. After training, its acoustic encoder is
// kept frozen and used as a 144-d frame feature extractor.

#ifndef MVSPOOF_PRON_HPP_
#define MVSPOOF_PRON_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvspoof/corpus.hpp"
#include "mvspoof/dsp.hpp"
#include "mvspoof/nn/layers.hpp"
#include "mvspoof/nn/ops.hpp"

namespace mvspoof {

struct RecognizerConfig {
  int input_dim = kNumMel;
  int d_model = 144;
  int n_conformer_blocks = 2;
  int n_heads = 4;
  int conv_kernel = 15;
  int ff_expansion = 4;
  int subsample_factor = 4;
  int subsample_channels = 32;
  /// Output classes including the blank at index 0.
  int vocab = 21;
  int att_decoder_hidden = 320;
  int att_embed_dim = 64;
  int att_dim = 128;
  int att_loc_filters = 10;
  int att_loc_kernel = 31;
  double alpha = 0.5;

  void validate() const;
};

struct RecognizerTrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double lr = 1e-3;
  double grad_clip = 5.0;
  double val_fraction = 0.1;
  std::uint64_t seed = 1;
};

/// alpha * ctc + (1 - alpha) * att.
double joint_loss(double ctc_loss, double att_loss, double alpha);

/// Encoder frame count after the two stride-2 convolutions: ceil(T / 4).
inline Eigen::Index subsampled_length(Eigen::Index t) { return (t + 3) / 4; }

namespace pron_detail {

/// Rows of sinusoidal encodings for relative distances T-1, ..., -(T-1).
template <typename T>
nn::Matrix<T> relative_positions(nn::Index t_len, nn::Index dim) {
  std::vector<double> pos(static_cast<std::size_t>(2 * t_len - 1));
  for (nn::Index r = 0; r < 2 * t_len - 1; ++r)
    pos[static_cast<std::size_t>(r)] = static_cast<double>(t_len - 1 - r);
  return nn::sinusoid_table<T>(pos, dim);
}

/// Additive mask allowing attention only within the same segment.
template <typename T>
nn::Matrix<T> segment_mask(const std::vector<int>& segment) {
  const auto n = static_cast<nn::Index>(segment.size());
  nn::Matrix<T> m = nn::Matrix<T>::Zero(n, n);
  for (nn::Index i = 0; i < n; ++i)
    for (nn::Index j = 0; j < n; ++j)
      if (segment[static_cast<std::size_t>(i)] != segment[static_cast<std::size_t>(j)])
        m(i, j) = -std::numeric_limits<T>::infinity();
  return m;
}

}  // namespace pron_detail

template <typename T>
struct FeedForward {
  nn::LayerNorm<T> norm;
  nn::Linear<T> fc1, fc2;

  FeedForward() = default;
  FeedForward(const std::string& name, nn::Index d, nn::Index hidden, Rng& rng)
      : norm(name + ".norm", d), fc1(name + ".fc1", d, hidden, rng), fc2(name + ".fc2", hidden, d, rng) {}

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& x) {
    return fc2(g, nn::silu(fc1(g, norm(g, x))));
  }

  void collect(nn::ParamList<T>& out) {
    norm.collect(out);
    fc1.collect(out);
    fc2.collect(out);
  }
};

/// Self-attention with relative sinusoidal positions and per-head content
/// and position biases.
template <typename T>
struct RelPositionAttention {
  nn::LayerNorm<T> norm;
  nn::Linear<T> wq, wk, wv, wpos, wo;
  nn::Parameter<T> pos_bias_u, pos_bias_v;  // [heads x d_head]
  nn::Index heads = 1;

  RelPositionAttention() = default;
  RelPositionAttention(const std::string& name, nn::Index d, nn::Index n_heads, Rng& rng)
      : norm(name + ".norm", d),
        wq(name + ".wq", d, d, rng),
        wk(name + ".wk", d, d, rng),
        wv(name + ".wv", d, d, rng),
        wpos(name + ".wpos", d, d, rng, false),
        wo(name + ".wo", d, d, rng),
        pos_bias_u(name + ".pos_bias_u", nn::xavier_init<T>(n_heads, d / n_heads, rng)),
        pos_bias_v(name + ".pos_bias_v", nn::xavier_init<T>(n_heads, d / n_heads, rng)),
        heads(n_heads) {}

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& x, const nn::Var<T>& rel_pos,
                        const nn::Matrix<T>* mask) {
    const nn::Var<T> h = norm(g, x);
    const nn::Var<T> q = wq(g, h), k = wk(g, h), v = wv(g, h), p = wpos(g, rel_pos);
    const nn::Index d = x.cols(), dk = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    const nn::Var<T> u = g.param(pos_bias_u), vb = g.param(pos_bias_v);
    std::vector<nn::Var<T>> outs;
    for (nn::Index i = 0; i < heads; ++i) {
      const nn::Var<T> qh = nn::slice_cols(q, i * dk, dk);
      const nn::Var<T> kh = nn::slice_cols(k, i * dk, dk);
      const nn::Var<T> vh = nn::slice_cols(v, i * dk, dk);
      const nn::Var<T> ph = nn::slice_cols(p, i * dk, dk);
      const nn::Var<T> ac = nn::matmul_nt(nn::add_row(qh, nn::slice_rows(u, i, 1)), kh, scale);
      const nn::Var<T> bd =
          nn::rel_shift(nn::matmul_nt(nn::add_row(qh, nn::slice_rows(vb, i, 1)), ph, scale));
      outs.push_back(nn::matmul(nn::softmax_rows(nn::add(ac, bd), mask), vh));
    }
    return wo(g, heads == 1 ? outs[0] : nn::concat_cols(outs));
  }

  void collect(nn::ParamList<T>& out) {
    norm.collect(out);
    wq.collect(out);
    wk.collect(out);
    wv.collect(out);
    wpos.collect(out);
    wo.collect(out);
    out.push_back(&pos_bias_u);
    out.push_back(&pos_bias_v);
  }
};

/// Pointwise conv + GLU, depthwise conv, norm, swish, pointwise conv.
template <typename T>
struct ConvModule {
  nn::LayerNorm<T> norm;
  nn::Linear<T> pw1;
  nn::Parameter<T> dw_weight;  // [K x d]
  nn::Parameter<T> dw_bias;    // [1 x d]
  nn::LayerNorm<T> mid_norm;
  nn::Linear<T> pw2;

  ConvModule() = default;
  ConvModule(const std::string& name, nn::Index d, nn::Index kernel, Rng& rng)
      : norm(name + ".norm", d),
        pw1(name + ".pw1", d, 2 * d, rng),
        dw_weight(name + ".dw_weight",
                  nn::uniform_init<T>(kernel, d, 1.0 / std::sqrt(double(kernel)), rng)),
        dw_bias(name + ".dw_bias", nn::Matrix<T>::Zero(1, d)),
        mid_norm(name + ".mid_norm", d),
        pw2(name + ".pw2", d, d, rng) {}

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& x, const std::vector<int>& segment) {
    nn::Var<T> h = nn::glu(pw1(g, norm(g, x)));
    h = nn::depthwise_conv1d(h, g.param(dw_weight), g.param(dw_bias), segment);
    return pw2(g, nn::silu(mid_norm(g, h)));
  }

  void collect(nn::ParamList<T>& out) {
    norm.collect(out);
    pw1.collect(out);
    out.push_back(&dw_weight);
    out.push_back(&dw_bias);
    mid_norm.collect(out);
    pw2.collect(out);
  }
};

template <typename T>
struct ConformerBlock {
  FeedForward<T> ff1, ff2;
  RelPositionAttention<T> mhsa;
  ConvModule<T> conv;
  nn::LayerNorm<T> final_norm;

  ConformerBlock() = default;
  ConformerBlock(const std::string& name, const RecognizerConfig& c, Rng& rng)
      : ff1(name + ".ff1", c.d_model, c.d_model * c.ff_expansion, rng),
        ff2(name + ".ff2", c.d_model, c.d_model * c.ff_expansion, rng),
        mhsa(name + ".mhsa", c.d_model, c.n_heads, rng),
        conv(name + ".conv", c.d_model, c.conv_kernel, rng),
        final_norm(name + ".final_norm", c.d_model) {}

  nn::Var<T> operator()(nn::Graph<T>& g, nn::Var<T> x, const nn::Var<T>& rel_pos,
                        const nn::Matrix<T>* mask, const std::vector<int>& segment) {
    x = nn::add(x, nn::scale(ff1(g, x), T(0.5)));
    x = nn::add(x, mhsa(g, x, rel_pos, mask));
    x = nn::add(x, conv(g, x, segment));
    x = nn::add(x, nn::scale(ff2(g, x), T(0.5)));
    return final_norm(g, x);
  }

  void collect(nn::ParamList<T>& out) {
    ff1.collect(out);
    mhsa.collect(out);
    conv.collect(out);
    ff2.collect(out);
    final_norm.collect(out);
  }
};

/// Stack of Conformer blocks over [T' x d_model]. A non-empty `segment`
/// (one id per frame) confines attention and convolution to each segment.
template <typename T>
struct ConformerStack {
  std::vector<ConformerBlock<T>> blocks;

  ConformerStack() = default;
  ConformerStack(const std::string& name, const RecognizerConfig& c, Rng& rng) {
    for (int b = 0; b < c.n_conformer_blocks; ++b)
      blocks.emplace_back(name + "." + std::to_string(b), c, rng);
  }

  nn::Var<T> operator()(nn::Graph<T>& g, nn::Var<T> x, const std::vector<int>& segment = {}) {
    const nn::Var<T> rel_pos =
        g.constant(pron_detail::relative_positions<T>(x.rows(), x.cols()));
    nn::Matrix<T> mask;
    if (!segment.empty()) mask = pron_detail::segment_mask<T>(segment);
    for (auto& b : blocks) x = b(g, x, rel_pos, segment.empty() ? nullptr : &mask, segment);
    return x;
  }

  void collect(nn::ParamList<T>& out) {
    for (auto& b : blocks) b.collect(out);
  }
};

/// Two stride-2 3x3 convolutions with ReLU over the (time, frequency) map,
/// then a linear map of channels x frequency to d_model.
template <typename T>
struct ConvSubsampling {
  nn::Parameter<T> w1, b1, w2, b2;
  nn::Linear<T> out;
  nn::Index channels = 0, freq = 0;

  ConvSubsampling() = default;
  ConvSubsampling(const std::string& name, const RecognizerConfig& c, Rng& rng)
      : w1(name + ".conv1.weight", nn::uniform_init<T>(c.subsample_channels, 9, 1.0 / 3.0, rng)),
        b1(name + ".conv1.bias", nn::Matrix<T>::Zero(c.subsample_channels, 1)),
        w2(name + ".conv2.weight",
           nn::uniform_init<T>(c.subsample_channels, c.subsample_channels * 9,
                               1.0 / std::sqrt(9.0 * c.subsample_channels), rng)),
        b2(name + ".conv2.bias", nn::Matrix<T>::Zero(c.subsample_channels, 1)),
        out(name + ".out", c.subsample_channels * ((c.input_dim + 3) / 4), c.d_model, rng),
        channels(c.subsample_channels),
        freq(c.input_dim) {}

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& x) {
    const nn::Index t_len = x.rows();
    if (x.cols() != freq) throw Error("recognizer input width mismatch");
    const nn::Var<T> map = nn::reshape(x, 1, t_len * freq);
    const nn::Index h1 = (t_len + 1) / 2, f1 = (freq + 1) / 2;
    nn::Var<T> y = nn::relu(nn::conv2d(map, t_len, freq, g.param(w1), g.param(b1), 3, 3, 2, 1));
    const nn::Index h2 = (h1 + 1) / 2, f2 = (f1 + 1) / 2;
    y = nn::relu(nn::conv2d(y, h1, f1, g.param(w2), g.param(b2), 3, 3, 2, 1));
    return out(g, nn::map_to_sequence(y, h2, f2));
  }

  void collect(nn::ParamList<T>& o) {
    o.push_back(&w1);
    o.push_back(&b1);
    o.push_back(&w2);
    o.push_back(&b2);
    out.collect(o);
  }
};

/// Single-layer LSTM decoder with location-sensitive attention over the
/// encoder states. Index 0 serves as both start and end-of-sequence symbol.
template <typename T>
struct AttentionDecoder {
  nn::Embedding<T> embed;
  nn::Lstm<T> lstm;
  nn::Linear<T> enc_proj;   // d_model -> att_dim
  nn::Linear<T> dec_proj;   // hidden -> att_dim (no bias)
  nn::Parameter<T> loc_conv;  // [kernel x filters]
  nn::Linear<T> loc_proj;   // filters -> att_dim (no bias)
  nn::Linear<T> score;      // att_dim -> 1 (no bias)
  nn::Linear<T> output;     // hidden + d_model -> vocab
  nn::Index loc_kernel = 0;

  AttentionDecoder() = default;
  AttentionDecoder(const std::string& name, const RecognizerConfig& c, Rng& rng)
      : embed(name + ".embed", c.vocab, c.att_embed_dim, rng),
        lstm(name + ".lstm", c.att_embed_dim + c.d_model, c.att_decoder_hidden, rng),
        enc_proj(name + ".enc_proj", c.d_model, c.att_dim, rng),
        dec_proj(name + ".dec_proj", c.att_decoder_hidden, c.att_dim, rng, false),
        loc_conv(name + ".loc_conv",
                 nn::uniform_init<T>(c.att_loc_kernel, c.att_loc_filters,
                                     1.0 / std::sqrt(double(c.att_loc_kernel)), rng)),
        loc_proj(name + ".loc_proj", c.att_loc_filters, c.att_dim, rng, false),
        score(name + ".score", c.att_dim, 1, rng, false),
        output(name + ".output", c.att_decoder_hidden + c.d_model, c.vocab, rng),
        loc_kernel(c.att_loc_kernel) {}

  /// Teacher-forced logits [U+1 x vocab] for inputs (0, y_1..y_U) predicting
  /// (y_1..y_U, 0).
  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& enc, const std::vector<int>& targets) {
    const nn::Index t_len = enc.rows();
    const nn::Var<T> keys = enc_proj(g, enc);
    std::vector<nn::Index> inputs{0};
    for (int y : targets) inputs.push_back(y);
    const nn::Var<T> emb = embed(g, inputs);
    auto state = lstm.initial_state(g);
    nn::Var<T> align = g.constant(nn::Matrix<T>::Constant(1, t_len, T(1) / static_cast<T>(t_len)));
    nn::Var<T> context = g.constant(nn::Matrix<T>::Zero(1, enc.cols()));
    std::vector<nn::Var<T>> logits;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      // Attention from the previous decoder state and alignment.
      const nn::Var<T> loc =
          nn::matmul(nn::unfold_time(nn::transpose(align), loc_kernel, (loc_kernel - 1) / 2),
                     g.param(loc_conv));
      nn::Var<T> e = nn::add(keys, loc_proj(g, loc));
      e = nn::add_row(e, dec_proj(g, state.h));
      const nn::Var<T> energies = nn::transpose(score(g, nn::tanh(e)));  // [1 x T']
      align = nn::softmax_rows(energies);
      context = nn::matmul(align, enc);
      const nn::Var<T> in =
          nn::concat_cols<T>({nn::slice_rows(emb, static_cast<nn::Index>(i), 1), context});
      state = lstm.step(g, in, state);
      logits.push_back(output(g, nn::concat_cols<T>({state.h, context})));
    }
    return nn::concat_rows(logits);
  }

  void collect(nn::ParamList<T>& out) {
    embed.collect(out);
    lstm.collect(out);
    enc_proj.collect(out);
    dec_proj.collect(out);
    out.push_back(&loc_conv);
    loc_proj.collect(out);
    score.collect(out);
    output.collect(out);
  }
};

template <typename T>
struct RecognizerOutput {
  nn::Var<T> encoder;     // [T' x d_model]
  nn::Var<T> ctc_logits;  // [T' x vocab]
  nn::Var<T> att_logits;  // [U+1 x vocab], only when targets were given
};

template <typename T>
struct Recognizer {
  RecognizerConfig config;
  /// Global log-mel normalization statistics, fixed before training.
  nn::Parameter<T> cmvn_mean, cmvn_inv_std;  // [1 x input_dim]
  ConvSubsampling<T> subsample;
  ConformerStack<T> conformer;
  nn::Linear<T> ctc_head;
  AttentionDecoder<T> decoder;

  explicit Recognizer(const RecognizerConfig& c, std::uint64_t seed) : config(c) {
    c.validate();
    Rng rng(seed);
    cmvn_mean = nn::Parameter<T>("cmvn.mean", nn::Matrix<T>::Zero(1, c.input_dim));
    cmvn_inv_std = nn::Parameter<T>("cmvn.inv_std", nn::Matrix<T>::Ones(1, c.input_dim));
    cmvn_mean.frozen = cmvn_inv_std.frozen = true;
    subsample = ConvSubsampling<T>("subsample", c, rng);
    conformer = ConformerStack<T>("conformer", c, rng);
    ctc_head = nn::Linear<T>("ctc_head", c.d_model, c.vocab, rng);
    decoder = AttentionDecoder<T>("decoder", c, rng);
  }

  nn::Var<T> encode(nn::Graph<T>& g, const nn::Matrix<T>& logmel) {
    if (logmel.rows() < config.subsample_factor)
      throw Error("recognizer input of " + std::to_string(logmel.rows()) +
                  " frames is shorter than the subsampling factor");
    nn::Matrix<T> x = logmel;
    x.rowwise() -= cmvn_mean.value.row(0);
    x.array().rowwise() *= cmvn_inv_std.value.row(0).array();
    return conformer(g, subsample(g, g.constant(std::move(x))));
  }

  RecognizerOutput<T> forward(nn::Graph<T>& g, const nn::Matrix<T>& logmel,
                              const std::vector<int>* targets = nullptr) {
    RecognizerOutput<T> out;
    out.encoder = encode(g, logmel);
    out.ctc_logits = ctc_head(g, out.encoder);
    if (targets != nullptr) out.att_logits = decoder(g, out.encoder, *targets);
    return out;
  }

  /// Per-utterance losses; returns the joint loss node and reports the parts.
  nn::Var<T> loss(nn::Graph<T>& g, const nn::Matrix<T>& logmel, const std::vector<int>& targets,
                  double* ctc_value = nullptr, double* att_value = nullptr) {
    const auto out = forward(g, logmel, &targets);
    const nn::Var<T> ctc = nn::ctc_loss(out.ctc_logits, targets);
    std::vector<int> next(targets);
    next.push_back(0);
    const nn::Var<T> att = nn::cross_entropy(out.att_logits, next, false);
    if (ctc_value != nullptr) *ctc_value = static_cast<double>(ctc.value()(0, 0));
    if (att_value != nullptr) *att_value = static_cast<double>(att.value()(0, 0));
    const T a = static_cast<T>(config.alpha);
    return nn::add(nn::scale(ctc, a), nn::scale(att, T(1) - a));
  }

  /// Trainable parameters (the normalization statistics are excluded).
  nn::ParamList<T> parameters() {
    nn::ParamList<T> p;
    subsample.collect(p);
    conformer.collect(p);
    ctc_head.collect(p);
    decoder.collect(p);
    return p;
  }

  nn::ParamList<T> all_parameters() {
    nn::ParamList<T> p{&cmvn_mean, &cmvn_inv_std};
    for (auto* q : parameters()) p.push_back(q);
    return p;
  }

  nn::ParamList<T> encoder_parameters() {
    nn::ParamList<T> p{&cmvn_mean, &cmvn_inv_std};
    subsample.collect(p);
    conformer.collect(p);
    return p;
  }
};

/// Collapses repeats and drops blanks from the frame-wise argmax.
std::vector<int> ctc_greedy_decode(const MatrixXd& ctc_logits);

/// Levenshtein distance between two id sequences.
std::size_t edit_distance(const std::vector<int>& a, const std::vector<int>& b);

/// Trained recognizer with single-precision parameters.
using PronModel = Recognizer<float>;

struct RecognizerReport {
  std::vector<double> train_loss;  // mean joint loss per epoch
  std::vector<double> val_loss;
  double initial_val_loss = 0.0;
  double val_per = 0.0;  // greedy CTC phoneme error rate on the held-out split
};

/// Trains on every record that has a `.phn` sidecar (all must).
PronModel train_recognizer(const TrialManifest& manifest, const RecognizerConfig& config,
                           const RecognizerTrainConfig& train, RecognizerReport* report = nullptr);

void save_recognizer(const std::filesystem::path& path, PronModel& model);
PronModel load_recognizer(const std::filesystem::path& path);

/// Encoder states repeated subsample_factor times per frame and truncated to
/// the log-mel frame count: [T x d_model].
FrameFeatureSequence extract_pron_features(const AudioClip& clip, PronModel& model);
FrameFeatureSequence extract_pron_features_from_logmel(const MatrixXd& logmel, PronModel& model);

/// Greedy CTC transcription of a clip.
std::vector<int> decode_clip(const AudioClip& clip, PronModel& model);

}  // namespace mvspoof

#endif  // MVSPOOF_PRON_HPP_
