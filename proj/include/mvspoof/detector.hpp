// include/mvspoof/detector.hpp

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

// Back-end classifier: a light CNN with Max-Feature-Map activations, two
// bidirectional LSTM layers, global average pooling over time and a final
// affine layer producing bonafide/spoof logits.

#ifndef MVSPOOF_DETECTOR_HPP_
#define MVSPOOF_DETECTOR_HPP_

#include <string>
#include <vector>

#include "mvspoof/corpus.hpp"
#include "mvspoof/fusion.hpp"
#include "mvspoof/nn/layers.hpp"
#include "mvspoof/nn/ops.hpp"

namespace mvspoof {

struct DetectorConfig {
  /// Width D_f of the fused input; 0 means "take it from the fusion config".
  int input_dim = 0;
  int n_frames = 500;
  /// Convolution output channels per stage, halved by Max-Feature-Map.
  std::vector<int> lcnn_channels{32, 48, 64};
  int blstm_hidden = 80;
  int blstm_layers = 2;
  int n_classes = 2;

  void validate() const;
  /// Time steps left after the pooling stages.
  int pooled_frames() const;
  int pooled_width() const;
};

/// Class index used by the detector: 0 = bonafide, 1 = spoof.
inline int class_index(Label l) { return l == Label::kBonafide ? 0 : 1; }

template <typename T>
struct BiLstm {
  nn::Lstm<T> fwd, bwd;

  BiLstm() = default;
  BiLstm(const std::string& name, nn::Index in, nn::Index hidden, Rng& rng)
      : fwd(name + ".fwd", in, hidden, rng), bwd(name + ".bwd", in, hidden, rng) {}

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& x) {
    return nn::concat_cols<T>({fwd.run(g, x, false), bwd.run(g, x, true)});
  }

  void collect(nn::ParamList<T>& out) {
    fwd.collect(out);
    bwd.collect(out);
  }
};

template <typename T>
struct Detector {
  DetectorConfig config;
  std::vector<nn::Parameter<T>> conv_weight, conv_bias;
  std::vector<BiLstm<T>> blstm;
  nn::Linear<T> fc;

  Detector() = default;
  Detector(const DetectorConfig& c, Rng& rng) : config(c) {
    c.validate();
    int cin = 1;
    conv_weight.reserve(c.lcnn_channels.size());
    conv_bias.reserve(c.lcnn_channels.size());
    for (std::size_t s = 0; s < c.lcnn_channels.size(); ++s) {
      const int cout = c.lcnn_channels[s];
      const std::string name = "detector.lcnn." + std::to_string(s);
      conv_weight.emplace_back(name + ".weight",
                               nn::uniform_init<T>(cout, cin * 9, std::sqrt(3.0 / (cin * 9)), rng));
      conv_bias.emplace_back(name + ".bias", nn::Matrix<T>::Zero(cout, 1));
      cin = cout / 2;
    }
    nn::Index in = static_cast<nn::Index>(cin) * c.pooled_width();
    for (int l = 0; l < c.blstm_layers; ++l) {
      blstm.emplace_back("detector.blstm." + std::to_string(l), in, c.blstm_hidden, rng);
      in = 2 * c.blstm_hidden;
    }
    fc = nn::Linear<T>("detector.fc", in, c.n_classes, rng);
  }

  /// Time-pooled BiLSTM representation [1 x 2H] of a fused [n_frames x D_f]
  /// input.
  nn::Var<T> pooled(nn::Graph<T>& g, const nn::Var<T>& fused) {
    if (fused.rows() != config.n_frames || fused.cols() != config.input_dim)
      throw Error("detector input is " + std::to_string(fused.rows()) + "x" +
                  std::to_string(fused.cols()) + ", expected " + std::to_string(config.n_frames) +
                  "x" + std::to_string(config.input_dim));
    nn::Index h = fused.rows(), w = fused.cols();
    nn::Var<T> x = nn::reshape(fused, 1, h * w);
    for (std::size_t s = 0; s < conv_weight.size(); ++s) {
      x = nn::conv2d(x, h, w, g.param(conv_weight[s]), g.param(conv_bias[s]), 3, 3, 1, 1);
      x = nn::max_pool2(nn::max_feature_map(x), h, w);
      h /= 2;
      w /= 2;
    }
    x = nn::map_to_sequence(x, h, w);
    for (auto& layer : blstm) x = layer(g, x);
    return nn::mean_rows(x);
  }

  /// Logits [1 x n_classes]; class 0 is bonafide.
  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& fused) {
    const nn::Var<T> logits = fc(g, pooled(g, fused));
    if (!logits.value().allFinite()) throw Error("detector produced non-finite logits");
    return logits;
  }

  void collect(nn::ParamList<T>& out) {
    for (auto& p : conv_weight) out.push_back(&p);
    for (auto& p : conv_bias) out.push_back(&p);
    for (auto& l : blstm) l.collect(out);
    fc.collect(out);
  }
};

/// Bonafide log-odds: logit_bonafide - logit_spoof.
template <typename T>
double detector_score(const nn::Matrix<T>& logits) {
  return static_cast<double>(logits(0, 0)) - static_cast<double>(logits(0, 1));
}

/// Mean softmax cross-entropy over a batch of [B x 2] logits; labels are
/// class indices in {0, 1}.
double detector_loss(const MatrixXd& logits, const std::vector<int>& labels);

/// Fusion front-end and detector trained jointly.
template <typename T>
struct MultiViewModel {
  FusionFrontEnd<T> fusion;
  Detector<T> detector;

  MultiViewModel() = default;
  MultiViewModel(const FusionConfig& fc, DetectorConfig dc, std::uint64_t seed) {
    Rng rng(seed);
    fusion = FusionFrontEnd<T>(fc, rng);
    if (dc.input_dim == 0) dc.input_dim = fc.fused_dim();
    if (dc.input_dim != fc.fused_dim())
      throw Error("detector input_dim " + std::to_string(dc.input_dim) +
                  " does not match the fused width " + std::to_string(fc.fused_dim()));
    detector = Detector<T>(dc, rng);
  }

  nn::Var<T> operator()(nn::Graph<T>& g, const ViewInputs<T>& in) {
    return detector(g, fusion(g, in, detector.config.n_frames));
  }

  nn::ParamList<T> parameters() {
    nn::ParamList<T> p;
    fusion.collect(p);
    detector.collect(p);
    return p;
  }
};

}  // namespace mvspoof

#endif  // MVSPOOF_DETECTOR_HPP_
