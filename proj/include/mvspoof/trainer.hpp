// include/mvspoof/trainer.hpp

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

// Feature extraction with frozen front-ends, fixed-length batching, and the
// detector training loop with checkpointing.

#ifndef MVSPOOF_TRAINER_HPP_
#define MVSPOOF_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mvspoof/corpus.hpp"
#include "mvspoof/detector.hpp"
#include "mvspoof/duration.hpp"
#include "mvspoof/frame_encoders.hpp"
#include "mvspoof/fusion.hpp"
#include "mvspoof/pron.hpp"

namespace mvspoof {

inline constexpr int kFixedFrames = 500;

/// Truncates to the first n frames or tiles the sequence end to end and cuts
/// at n.
FrameFeatureSequence fix_length(const FrameFeatureSequence& seq, int n = kFixedFrames);
DurationVector fix_length(const DurationVector& dv, int n = kFixedFrames);

/// Per-epoch shuffled index batches; the last short batch is kept.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n_records, int batch_size,
                                                   std::uint64_t seed, int epoch);
std::vector<std::vector<std::size_t>> make_batches(const TrialManifest& manifest, int batch_size,
                                                   std::uint64_t seed, int epoch);

/// Seeded validation split stratified by label: returns (train, validation)
/// record indices, each sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, double val_fraction, std::uint64_t seed);

struct EncoderSpec {
  std::string w2v = "toy_w2v";
  int w2v_dim = 1024;
  std::uint64_t w2v_seed = 0;
  std::string hubert = "toy_hubert";
  int hubert_dim = 64;
  std::uint64_t hubert_seed = 0;
};

/// Frozen front-ends shared by training and evaluation.
class FeatureExtractor {
 public:
  FeatureExtractor() = default;

  void set_w2v(std::unique_ptr<FrameEncoder> enc);
  void set_duration(std::unique_ptr<FrameEncoder> hubert, Quantizer quantizer);
  void set_pron(std::shared_ptr<PronModel> model);

  bool has(View v) const;
  /// Identifies the frozen artifacts; part of every cache key and checkpoint.
  std::string fingerprint() const;
  /// Fingerprint restricted to the given views.
  std::string fingerprint(const std::vector<View>& views) const;

  /// Views on the native 10 ms grid (all with the log-mel frame count).
  /// Uses the feature cache under MVSPOOF_CACHE when that is set.
  ViewInputs<float> extract(const std::filesystem::path& wav, const std::vector<View>& views) const;
  ViewInputs<float> extract(const AudioClip& clip, const std::vector<View>& views) const;

  const Quantizer* quantizer() const { return quantizer_ ? &*quantizer_ : nullptr; }
  const FrameEncoder* w2v_encoder() const { return w2v_.get(); }
  const FrameEncoder* hubert_encoder() const { return hubert_.get(); }
  PronModel* pron() const { return pron_.get(); }
  std::uint64_t pron_checksum() const { return pron_checksum_; }

 private:
  std::unique_ptr<FrameEncoder> w2v_;
  std::unique_ptr<FrameEncoder> hubert_;
  std::optional<Quantizer> quantizer_;
  std::shared_ptr<PronModel> pron_;
  std::uint64_t pron_checksum_ = 0;
};

/// Directory for cached features (MVSPOOF_CACHE), if configured.
std::optional<std::filesystem::path> feature_cache_dir();

struct Dataset {
  std::vector<ViewInputs<float>> inputs;
  std::vector<int> labels;  // class_index()
  std::vector<std::filesystem::path> paths;
  std::vector<std::string> datasets;
};

/// Extracts every record of the manifest; `jobs` > 1 extracts in parallel.
Dataset build_dataset(const TrialManifest& manifest, const FeatureExtractor& extractor,
                      const std::vector<View>& views, int jobs = 1);

struct TrainConfig {
  double lr = 5e-5;
  int batch_size = 32;
  int epochs = 200;
  std::uint64_t seed = 1;
  int fixed_frames = kFixedFrames;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double val_fraction = 0.1;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;  // mean cross-entropy per epoch
  std::vector<double> val_loss;
  int best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
};

using DetectorModel = MultiViewModel<float>;

/// Everything needed to rebuild and run a trained detector.
struct DetectorCheckpoint {
  FusionConfig fusion;
  DetectorConfig detector;
  TrainConfig train;
  std::string extractor_fingerprint;
  std::string run_config;  // full resolved configuration, JSON
  std::unique_ptr<DetectorModel> model;

  void save(const std::filesystem::path& path) const;
  static DetectorCheckpoint load(const std::filesystem::path& path);
};

struct TrainResult {
  DetectorCheckpoint final_model;
  DetectorCheckpoint best_model;
  TrainReport report;
};

/// Optimizes the fusion front-end and detector with Adam. When `out_dir` is
/// non-empty, writes final.ckpt, best.ckpt and train_log.tsv there.
TrainResult train_detector(const Dataset& train, const FusionConfig& fusion,
                           const DetectorConfig& detector, const TrainConfig& config,
                           const std::string& extractor_fingerprint,
                           const std::filesystem::path& out_dir = {},
                           const std::string& run_config = "{}", std::ostream* log = nullptr);

/// Mean cross-entropy of the model over the given records.
double dataset_loss(DetectorModel& model, const Dataset& data, const std::vector<std::size_t>& idx);

/// Bonafide log-odds for one utterance.
double score_utterance(DetectorModel& model, const ViewInputs<float>& in);

}  // namespace mvspoof

#endif  // MVSPOOF_TRAINER_HPP_
