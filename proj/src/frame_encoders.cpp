// src/frame_encoders.cpp

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

#include "mvspoof/frame_encoders.hpp"

#include <map>
#include <mutex>

namespace mvspoof {

ToyEncoderParams ToyEncoderParams::generate(std::uint64_t seed, int output_dim) {
  MVSPOOF_CHECK(output_dim > 0, "encoder output_dim must be positive");
  ToyEncoderParams p;
  p.seed = seed;
  p.output_dim = output_dim;
  p.projection.resize(kNumMel, output_dim);
  Rng rng(derive_seed(seed, 101));
  const double scale = 1.0 / std::sqrt(static_cast<double>(kNumMel));
  for (int r = 0; r < kNumMel; ++r)
    for (int c = 0; c < output_dim; ++c)
      p.projection(r, c) = static_cast<float>(scale * rng.normal());
  return p;
}

void ToyEncoderParams::save(const std::filesystem::path& path) const {
  atomic_write(path, [&](std::ostream& os) {
    os.write("MVTE", 4);
    BinaryWriter w(os);
    w.put<std::uint64_t>(seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(projection.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(projection.cols()));
    for (Eigen::Index r = 0; r < projection.rows(); ++r)
      for (Eigen::Index c = 0; c < projection.cols(); ++c)
        w.put<float>(static_cast<float>(projection(r, c)));
  });
}

ToyEncoderParams ToyEncoderParams::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open encoder parameters " + path.string());
  char magic[4];
  is.read(magic, 4);
  MVSPOOF_CHECK(is && std::memcmp(magic, "MVTE", 4) == 0,
                "not an encoder parameter file: " + path.string());
  BinaryReader r(is, "encoder parameters " + path.string());
  ToyEncoderParams p;
  p.seed = r.get<std::uint64_t>();
  const auto rows = r.get<std::uint32_t>();
  const auto cols = r.get<std::uint32_t>();
  MVSPOOF_CHECK(rows == static_cast<std::uint32_t>(kNumMel), "encoder projection must have 80 rows");
  p.output_dim = static_cast<int>(cols);
  p.projection.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) p.projection(i, j) = r.get<float>();
  return p;
}

FrameFeatureSequence toy_encode(const AudioClip& clip, const ToyEncoderParams& params) {
  MVSPOOF_CHECK(params.projection.rows() == kNumMel && params.projection.cols() == params.output_dim,
                "malformed toy encoder parameters");
  const FrameFeatureSequence mel = log_mel_spectrogram(clip);
  FrameFeatureSequence out;
  out.values = mel.values * params.projection;
  out.kind = params.output_dim == 1024 ? FeatureKind::kSsl1024 : FeatureKind::kEmbedding;
  out.frame_shift_ms = mel.frame_shift_ms;
  return out;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, EncoderFactory>& registry() {
  static std::map<std::string, EncoderFactory> r = [] {
    std::map<std::string, EncoderFactory> m;
    for (const char* name : {"toy_w2v", "toy_hubert"}) {
      m[name] = [name](std::uint64_t seed, int dim) -> std::unique_ptr<FrameEncoder> {
        return std::make_unique<ToyEncoder>(name, ToyEncoderParams::generate(seed, dim));
      };
    }
    return m;
  }();
  return r;
}

}  // namespace

void register_encoder(const std::string& name, EncoderFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::unique_ptr<FrameEncoder> make_encoder(const std::string& name, std::uint64_t seed,
                                           int output_dim) {
  EncoderFactory f;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end()) throw Error("unknown frame encoder '" + name + "'");
    f = it->second;
  }
  auto enc = f(seed, output_dim);
  MVSPOOF_CHECK(enc && enc->output_dim() == output_dim,
                "encoder '" + name + "' does not produce the configured width");
  return enc;
}

std::vector<std::string> registered_encoders() {
  std::lock_guard<std::mutex> lock(registry_mutex());
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

FrameFeatureSequence project_ssl(const FrameFeatureSequence& seq, Projection128<double>& proj) {
  MVSPOOF_CHECK(seq.values.cols() == proj.fc.in_dim(),
                "project_ssl: expected " + std::to_string(proj.fc.in_dim()) + " columns, got " +
                    std::to_string(seq.values.cols()));
  nn::Graph<double> g(false);
  const auto y = proj(g, g.constant(seq.values));
  FrameFeatureSequence out;
  out.values = y.value();
  out.kind = out.values.cols() == 128 ? FeatureKind::kSslProj128 : FeatureKind::kEmbedding;
  out.frame_shift_ms = seq.frame_shift_ms;
  return out;
}

}  // namespace mvspoof
