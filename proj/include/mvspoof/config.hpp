// include/mvspoof/config.hpp

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

// Run configuration: a JSON document with one section per module. Every key
// is optional; defaults are the full-size settings. Unknown keys are
// rejected.
//
//   {
//     "seed": 1,
//     "corpus":   { "n_real": 50, ... },
//     "encoders": { "w2v": "toy_w2v", "w2v_dim": 1024, "hubert": "toy_hubert", ... },
//     "duration": { "vocabulary": 100, "max_iterations": 300, "tolerance": 1e-6 },
//     "pron":     { "d_model": 144, ..., "train": { "epochs": 30, ... } },
//     "fusion":   { "mode": "attention", "views": ["w2v", "duration", "pron"], ... },
//     "detector": { "lcnn_channels": [32, 48, 64], ... },
//     "trainer":  { "lr": 5e-5, "batch_size": 32, "epochs": 200, ... },
//     "artifacts": { "quantizer": "...", "pron_checkpoint": "..." },
//     "jobs": 1
//   }
//
// Component seeds not given explicitly are derived from the global seed by
// fixed offsets (see kSeedOffset*).

#ifndef MVSPOOF_CONFIG_HPP_
#define MVSPOOF_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "mvspoof/corpus.hpp"
#include "mvspoof/detector.hpp"
#include "mvspoof/duration.hpp"
#include "mvspoof/fusion.hpp"
#include "mvspoof/pron.hpp"
#include "mvspoof/trainer.hpp"

namespace mvspoof {

inline constexpr std::uint64_t kSeedOffsetCorpus = 0;
inline constexpr std::uint64_t kSeedOffsetW2v = 100;
inline constexpr std::uint64_t kSeedOffsetHubert = 200;
inline constexpr std::uint64_t kSeedOffsetQuantizer = 300;
inline constexpr std::uint64_t kSeedOffsetPron = 400;
inline constexpr std::uint64_t kSeedOffsetDetector = 500;

struct DurationSettings {
  int vocabulary = kDefaultVocabulary;
  KMeansOptions kmeans;
  std::uint64_t seed = 0;
};

struct ArtifactPaths {
  std::string quantizer;        // written by fit-quantizer
  std::string pron_checkpoint;  // written by train-pron
};

struct RunConfig {
  std::uint64_t seed = 1;
  SynthCorpusConfig corpus;
  EncoderSpec encoders;
  DurationSettings duration;
  RecognizerConfig pron;
  RecognizerTrainConfig pron_train;
  FusionConfig fusion;
  DetectorConfig detector;
  TrainConfig trainer;
  ArtifactPaths artifacts;
  int jobs = 1;

  void validate() const;
};

/// Parses a configuration document. `seed_override` replaces the global seed
/// before component seeds are derived.
RunConfig parse_run_config(const nlohmann::json& doc,
                           std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);
/// Fully resolved configuration, every key present.
nlohmann::json run_config_json(const RunConfig& cfg);

void to_json(nlohmann::json& j, const SynthCorpusConfig& c);
void from_json(const nlohmann::json& j, SynthCorpusConfig& c);
void to_json(nlohmann::json& j, const EncoderSpec& c);
void from_json(const nlohmann::json& j, EncoderSpec& c);
void to_json(nlohmann::json& j, const RecognizerConfig& c);
void from_json(const nlohmann::json& j, RecognizerConfig& c);
void to_json(nlohmann::json& j, const RecognizerTrainConfig& c);
void from_json(const nlohmann::json& j, RecognizerTrainConfig& c);
void to_json(nlohmann::json& j, const FusionConfig& c);
void from_json(const nlohmann::json& j, FusionConfig& c);
void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace mvspoof

#endif  // MVSPOOF_CONFIG_HPP_
