// src/pron.cpp

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

#include "mvspoof/pron.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "mvspoof/config.hpp"
#include "mvspoof/nn/optim.hpp"

namespace mvspoof {

void RecognizerConfig::validate() const {
  MVSPOOF_CHECK(d_model > 0 && n_heads > 0 && d_model % n_heads == 0,
                "recognizer d_model must be divisible by n_heads");
  MVSPOOF_CHECK(alpha >= 0.0 && alpha <= 1.0, "recognizer alpha must lie in [0, 1]");
  MVSPOOF_CHECK(subsample_factor == 4, "only subsample_factor 4 (two stride-2 convolutions) is supported");
  MVSPOOF_CHECK(vocab >= 2, "recognizer vocab needs the blank and at least one unit");
  MVSPOOF_CHECK(conv_kernel % 2 == 1 && att_loc_kernel % 2 == 1, "kernel widths must be odd");
  MVSPOOF_CHECK(n_conformer_blocks >= 1 && ff_expansion >= 1 && subsample_channels >= 1 &&
                    att_decoder_hidden >= 1 && att_embed_dim >= 1 && att_dim >= 1 &&
                    att_loc_filters >= 1 && input_dim >= 1,
                "recognizer sizes must be positive");
}

double joint_loss(double ctc_loss, double att_loss, double alpha) {
  MVSPOOF_CHECK(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  return alpha * ctc_loss + (1.0 - alpha) * att_loss;
}

std::vector<int> ctc_greedy_decode(const MatrixXd& ctc_logits) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index t = 0; t < ctc_logits.rows(); ++t) {
    Eigen::Index k;
    ctc_logits.row(t).maxCoeff(&k);
    const int id = static_cast<int>(k);
    if (id != prev && id != 0) out.push_back(id);
    prev = id;
  }
  return out;
}

std::size_t edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace {

struct Utterance {
  nn::Matrix<float> logmel;
  std::vector<int> targets;
};

double eval_loss(PronModel& model, const std::vector<Utterance>& data,
                 const std::vector<std::size_t>& idx) {
  double total = 0;
  for (auto i : idx) {
    nn::Graph<float> g(false);
    total += model.loss(g, data[i].logmel, data[i].targets).value()(0, 0);
  }
  return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

double eval_per(PronModel& model, const std::vector<Utterance>& data,
                const std::vector<std::size_t>& idx) {
  std::size_t errors = 0, total = 0;
  for (auto i : idx) {
    nn::Graph<float> g(false);
    const auto out = model.forward(g, data[i].logmel);
    const auto hyp = ctc_greedy_decode(out.ctc_logits.value().cast<double>());
    errors += edit_distance(hyp, data[i].targets);
    total += data[i].targets.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
}

}  // namespace

PronModel train_recognizer(const TrialManifest& manifest, const RecognizerConfig& config,
                           const RecognizerTrainConfig& train, RecognizerReport* report) {
  config.validate();
  MVSPOOF_CHECK(!manifest.records.empty(), "recognizer training manifest is empty");
  MVSPOOF_CHECK(train.epochs >= 0 && train.batch_size >= 1 && train.lr > 0,
                "invalid recognizer training settings");
  MVSPOOF_CHECK(train.val_fraction >= 0.0 && train.val_fraction < 1.0,
                "val_fraction must lie in [0, 1)");

  std::vector<Utterance> data;
  for (const auto& r : manifest.records) {
    MVSPOOF_CHECK(std::filesystem::exists(transcript_path(r.path)),
                  "missing transcript sidecar for " + r.path.string());
    Utterance u;
    u.logmel = log_mel_spectrogram(read_wav(r.path)).values.cast<float>();
    u.targets = read_transcript(r.path);
    for (int y : u.targets)
      MVSPOOF_CHECK(y >= 1 && y < config.vocab,
                    "transcript id " + std::to_string(y) + " in " + r.path.string() +
                        " is outside the recognizer vocabulary");
    const auto frames = static_cast<std::size_t>(subsampled_length(u.logmel.rows()));
    MVSPOOF_CHECK(nn::ctc_min_frames(u.targets) <= frames,
                  "transcript of " + r.path.string() + " is too long for its " +
                      std::to_string(frames) + " encoder frames");
    data.push_back(std::move(u));
  }

  // Seeded held-out split.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(train.seed, 11));
  split_rng.shuffle(order.begin(), order.end());
  const auto n_val = static_cast<std::size_t>(std::floor(train.val_fraction * data.size()));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> trn(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(trn.begin(), trn.end());
  MVSPOOF_CHECK(!trn.empty(), "no training utterances left after the validation split");

  PronModel model(config, derive_seed(train.seed, 12));

  // Global normalization statistics from the training split.
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(config.input_dim);
  Eigen::ArrayXd sq = Eigen::ArrayXd::Zero(config.input_dim);
  double n_frames = 0;
  for (auto i : trn) {
    const Eigen::ArrayXXd x = data[i].logmel.cast<double>().array();
    sum += x.colwise().sum().transpose();
    sq += x.square().colwise().sum().transpose();
    n_frames += static_cast<double>(x.rows());
  }
  const Eigen::ArrayXd mean = sum / n_frames;
  const Eigen::ArrayXd var = (sq / n_frames - mean.square()).max(1e-8);
  model.cmvn_mean.value = mean.transpose().matrix().cast<float>();
  model.cmvn_inv_std.value = var.sqrt().inverse().transpose().matrix().cast<float>();

  RecognizerReport rep;
  rep.initial_val_loss = eval_loss(model, data, val.empty() ? trn : val);

  const auto params = model.parameters();
  nn::AdamConfig acfg;
  acfg.lr = train.lr;
  nn::Adam<float> adam(acfg);
  nn::zero_grad(params);
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::vector<std::size_t> perm = trn;
    Rng rng(derive_seed(derive_seed(train.seed, 13), static_cast<std::uint64_t>(epoch)));
    rng.shuffle(perm.begin(), perm.end());
    double epoch_loss = 0;
    for (std::size_t start = 0; start < perm.size(); start += static_cast<std::size_t>(train.batch_size)) {
      const std::size_t end = std::min(perm.size(), start + static_cast<std::size_t>(train.batch_size));
      const float inv_b = 1.0f / static_cast<float>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const Utterance& u = data[perm[k]];
        nn::Graph<float> g;
        const auto l = model.loss(g, u.logmel, u.targets);
        const double v = l.value()(0, 0);
        if (!std::isfinite(v))
          throw Error("recognizer loss diverged (" + std::to_string(v) + ") at epoch " +
                      std::to_string(epoch + 1) + "; try a lower learning rate");
        epoch_loss += v;
        g.backward(nn::scale(l, inv_b));
      }
      if (train.grad_clip > 0) nn::clip_grad_norm(params, train.grad_clip);
      adam.step(params);
      nn::zero_grad(params);
    }
    rep.train_loss.push_back(epoch_loss / static_cast<double>(perm.size()));
    rep.val_loss.push_back(val.empty() ? rep.train_loss.back() : eval_loss(model, data, val));
  }
  rep.val_per = eval_per(model, data, val.empty() ? trn : val);
  if (report != nullptr) *report = std::move(rep);
  return model;
}

namespace {
constexpr char kPronMagic[4] = {'M', 'V', 'P', 'R'};
constexpr std::uint32_t kPronVersion = 1;
}  // namespace

void save_recognizer(const std::filesystem::path& path, PronModel& model) {
  const std::string echo = nlohmann::json(model.config).dump();
  atomic_write(path, [&](std::ostream& os) {
    os.write(kPronMagic, 4);
    BinaryWriter w(os);
    w.put<std::uint32_t>(kPronVersion);
    w.put_string(echo);
    nn::write_params(w, model.all_parameters());
  });
}

PronModel load_recognizer(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open recognizer checkpoint " + path.string());
  char magic[4];
  is.read(magic, 4);
  MVSPOOF_CHECK(is && std::equal(magic, magic + 4, kPronMagic),
                "not a recognizer checkpoint: " + path.string());
  BinaryReader r(is, "recognizer checkpoint " + path.string());
  MVSPOOF_CHECK(r.get<std::uint32_t>() == kPronVersion, "unsupported recognizer checkpoint version");
  RecognizerConfig cfg;
  try {
    cfg = nlohmann::json::parse(r.get_string()).get<RecognizerConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt recognizer config in " + path.string() + ": " + e.what());
  }
  PronModel model(cfg, 0);
  nn::read_params(r, model.all_parameters());
  model.cmvn_mean.frozen = model.cmvn_inv_std.frozen = true;
  return model;
}

FrameFeatureSequence extract_pron_features_from_logmel(const MatrixXd& logmel, PronModel& model) {
  nn::Graph<float> g(false);
  const nn::Var<float> enc = model.encode(g, logmel.cast<float>());
  const Eigen::Index t_len = logmel.rows();
  const int f = model.config.subsample_factor;
  MVSPOOF_CHECK(enc.rows() * f >= t_len, "encoder output too short to cover the input");
  FrameFeatureSequence out;
  out.values.resize(t_len, enc.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) out.values.row(t) = enc.value().row(t / f).cast<double>();
  out.kind = enc.cols() == 144 ? FeatureKind::kPron144 : FeatureKind::kEmbedding;
  out.frame_shift_ms = kShiftMs;
  return out;
}

FrameFeatureSequence extract_pron_features(const AudioClip& clip, PronModel& model) {
  return extract_pron_features_from_logmel(log_mel_spectrogram(clip).values, model);
}

std::vector<int> decode_clip(const AudioClip& clip, PronModel& model) {
  nn::Graph<float> g(false);
  const auto out = model.forward(g, log_mel_spectrogram(clip).values.cast<float>());
  return ctc_greedy_decode(out.ctc_logits.value().cast<double>());
}

}  // namespace mvspoof
