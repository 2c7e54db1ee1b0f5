// mvspoof/frame_encoders.hpp

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

// Frame encoders stand in for pretrained self-supervised models. Any encoder
// mapping a clip to [T x output_dim] on the 10 ms grid can be registered by
// name and used by the rest of the pipeline.

#ifndef MVSPOOF_FRAME_ENCODERS_HPP_
#define MVSPOOF_FRAME_ENCODERS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mvspoof/dsp.hpp"
#include "mvspoof/nn/layers.hpp"

namespace mvspoof {

class FrameEncoder {
 public:
  virtual ~FrameEncoder() = default;
  virtual std::string name() const = 0;
  virtual int output_dim() const = 0;
  virtual double frame_shift_ms() const { return kShiftMs; }
  /// Must return output_dim() columns and be deterministic.
  virtual FrameFeatureSequence encode(const AudioClip& clip) const = 0;
};

/// A fixed [80 x output_dim] random projection of log-mel features.
struct ToyEncoderParams {
  std::uint64_t seed = 0;
  int output_dim = 0;
  MatrixXd projection;

  /// Standard normal entries scaled by 1/sqrt(80), rounded to float precision
  /// so that a save/load round trip is exact.
  static ToyEncoderParams generate(std::uint64_t seed, int output_dim);

  void save(const std::filesystem::path& path) const;
  static ToyEncoderParams load(const std::filesystem::path& path);
};

/// log_mel_spectrogram(clip) * projection.
FrameFeatureSequence toy_encode(const AudioClip& clip, const ToyEncoderParams& params);

class ToyEncoder : public FrameEncoder {
 public:
  ToyEncoder(std::string name, ToyEncoderParams params)
      : name_(std::move(name)), params_(std::move(params)) {}

  std::string name() const override { return name_; }
  int output_dim() const override { return params_.output_dim; }
  FrameFeatureSequence encode(const AudioClip& clip) const override {
    return toy_encode(clip, params_);
  }
  const ToyEncoderParams& params() const { return params_; }

 private:
  std::string name_;
  ToyEncoderParams params_;
};

using EncoderFactory =
    std::function<std::unique_ptr<FrameEncoder>(std::uint64_t seed, int output_dim)>;

/// Registers a factory under `name`; replaces an existing entry.
void register_encoder(const std::string& name, EncoderFactory factory);
/// Builds a registered encoder ("toy_w2v" and "toy_hubert" are built in).
std::unique_ptr<FrameEncoder> make_encoder(const std::string& name, std::uint64_t seed,
                                           int output_dim);
std::vector<std::string> registered_encoders();

/// Trainable 1024 -> 128 affine map applied row-wise to wav2vec-style features.
template <typename T>
struct Projection128 {
  nn::Linear<T> fc;

  Projection128() = default;
  Projection128(const std::string& name, Rng& rng, nn::Index in = 1024, nn::Index out = 128)
      : fc(name, in, out, rng) {}

  nn::Var<T> operator()(nn::Graph<T>& g, const nn::Var<T>& x) {
    if (x.cols() != fc.in_dim())
      throw Error("projection input width " + std::to_string(x.cols()) + " != " +
                  std::to_string(fc.in_dim()));
    return fc(g, x);
  }

  void collect(nn::ParamList<T>& out) { fc.collect(out); }
};

/// Row-wise affine map of an ssl1024 sequence to ssl_proj128.
FrameFeatureSequence project_ssl(const FrameFeatureSequence& seq, Projection128<double>& proj);

}  // namespace mvspoof

#endif  // MVSPOOF_FRAME_ENCODERS_HPP_
