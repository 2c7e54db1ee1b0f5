// src/pipeline.cpp

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

#include "mvspoof/pipeline.hpp"

namespace mvspoof {

Quantizer fit_duration_quantizer(const RunConfig& cfg, const TrialManifest& manifest,
                                 KMeansTrace* trace) {
  const auto enc = make_encoder(cfg.encoders.hubert, cfg.encoders.hubert_seed, cfg.encoders.hubert_dim);
  std::vector<MatrixXd> feats;
  Eigen::Index rows = 0;
  for (const auto& r : manifest.records) {
    if (r.label != Label::kBonafide) continue;
    feats.push_back(enc->encode(read_wav(r.path)).values);
    rows += feats.back().rows();
  }
  MVSPOOF_CHECK(!feats.empty(), "the quantizer is fitted on bonafide records, found none");
  MatrixXd pool(rows, cfg.encoders.hubert_dim);
  Eigen::Index at = 0;
  for (const auto& f : feats) {
    pool.middleRows(at, f.rows()) = f;
    at += f.rows();
  }
  return fit_quantizer(pool, cfg.duration.vocabulary, cfg.duration.seed, cfg.duration.kmeans, trace);
}

FeatureExtractor make_extractor(const RunConfig& cfg) {
  FeatureExtractor fx;
  const auto& v = cfg.fusion.views;
  auto uses = [&](View x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  if (uses(View::kW2v))
    fx.set_w2v(make_encoder(cfg.encoders.w2v, cfg.encoders.w2v_seed, cfg.encoders.w2v_dim));
  if (uses(View::kDuration)) {
    MVSPOOF_CHECK(!cfg.artifacts.quantizer.empty(),
                  "the duration view needs artifacts.quantizer (see fit-quantizer)");
    Quantizer q = Quantizer::load(cfg.artifacts.quantizer);
    MVSPOOF_CHECK(q.vocabulary() == cfg.fusion.duration_vocab,
                  "quantizer has " + std::to_string(q.vocabulary()) +
                      " units but fusion.duration_vocab is " + std::to_string(cfg.fusion.duration_vocab));
    fx.set_duration(make_encoder(cfg.encoders.hubert, cfg.encoders.hubert_seed, cfg.encoders.hubert_dim),
                    std::move(q));
  }
  if (uses(View::kPron)) {
    MVSPOOF_CHECK(!cfg.artifacts.pron_checkpoint.empty(),
                  "the pron view needs artifacts.pron_checkpoint (see train-pron)");
    auto model = std::make_shared<PronModel>(load_recognizer(cfg.artifacts.pron_checkpoint));
    MVSPOOF_CHECK(model->config.d_model == cfg.fusion.pron_dim,
                  "recognizer width " + std::to_string(model->config.d_model) +
                      " does not match fusion.pron_dim " + std::to_string(cfg.fusion.pron_dim));
    fx.set_pron(std::move(model));
  }
  return fx;
}

TrainResult train_from_manifest(const RunConfig& cfg, const TrialManifest& manifest,
                                const std::filesystem::path& out_dir, std::ostream* log) {
  cfg.validate();
  manifest.require_two_class();
  const FeatureExtractor fx = make_extractor(cfg);
  if (log != nullptr) *log << "extracting features for " << manifest.records.size() << " files\n";
  const Dataset data = build_dataset(manifest, fx, cfg.fusion.views, cfg.jobs);
  return train_detector(data, cfg.fusion, cfg.detector, cfg.trainer, fx.fingerprint(cfg.fusion.views),
                        out_dir, run_config_json(cfg).dump(), log);
}

RunConfig checkpoint_run_config(const DetectorCheckpoint& ckpt) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ckpt.run_config);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint carries a malformed configuration: ") + e.what());
  }
  return parse_run_config(doc);
}

}  // namespace mvspoof
