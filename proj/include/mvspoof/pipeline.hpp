// include/mvspoof/pipeline.hpp

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

// Stage drivers shared by the command-line tool and the acceptance runs. Each
// stage reads and writes ordinary files so it can be rerun on its own.

#ifndef MVSPOOF_PIPELINE_HPP_
#define MVSPOOF_PIPELINE_HPP_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mvspoof/config.hpp"
#include "mvspoof/evaluation.hpp"

namespace mvspoof {

/// Fits the unit quantizer on the toy-HuBERT frames of the bonafide records.
Quantizer fit_duration_quantizer(const RunConfig& cfg, const TrialManifest& manifest,
                                 KMeansTrace* trace = nullptr);

/// Front-ends for the configured fusion views, loading the quantizer and the
/// recognizer from cfg.artifacts when those views are enabled.
FeatureExtractor make_extractor(const RunConfig& cfg);

/// Extracts features for `manifest` and trains the detector. Writes
/// checkpoints and train_log.tsv into `out_dir` when non-empty.
TrainResult train_from_manifest(const RunConfig& cfg, const TrialManifest& manifest,
                                const std::filesystem::path& out_dir = {},
                                std::ostream* log = nullptr);

/// The fusion/detector/trainer sections of `cfg` as stored in a checkpoint.
RunConfig checkpoint_run_config(const DetectorCheckpoint& ckpt);

}  // namespace mvspoof

#endif  // MVSPOOF_PIPELINE_HPP_
