// src/config.cpp

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

#include "mvspoof/config.hpp"

#include <fstream>
#include <set>

namespace mvspoof {

using nlohmann::json;

namespace {

// Reads known keys from an object and rejects anything else.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error("config section '" + where_ + "' must be an object");
  }

  template <class T>
  Section& operator()(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return *this;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error("config key '" + where_ + "." + key + "': " + e.what());
    }
    return *this;
  }

  bool present(const char* key) const { return j_.contains(key); }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw Error("unknown config key '" + (where_.empty() ? "" : where_ + ".") + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

void to_json(json& j, const SynthCorpusConfig& c) {
  j = json{{"n_real", c.n_real},
           {"n_fake", c.n_fake},
           {"n_pseudo_phonemes", c.n_pseudo_phonemes},
           {"real_duration_jitter", c.real_duration_jitter},
           {"fake_duration_jitter", c.fake_duration_jitter},
           {"seed", c.seed},
           {"base_segment_ms", c.base_segment_ms},
           {"min_segments", c.min_segments},
           {"max_segments", c.max_segments},
           {"fade_ms", c.fade_ms},
           {"noise_level", c.noise_level},
           {"dataset", c.dataset}};
  j["template_seed"] = c.template_seed ? json(*c.template_seed) : json(nullptr);
}

void from_json(const json& j, SynthCorpusConfig& c) {
  Section s(j, "corpus");
  s("n_real", c.n_real)("n_fake", c.n_fake)("n_pseudo_phonemes", c.n_pseudo_phonemes);
  s("real_duration_jitter", c.real_duration_jitter)("fake_duration_jitter", c.fake_duration_jitter);
  s("seed", c.seed)("base_segment_ms", c.base_segment_ms)("min_segments", c.min_segments);
  s("max_segments", c.max_segments)("fade_ms", c.fade_ms)("noise_level", c.noise_level);
  s("dataset", c.dataset);
  if (const json* t = s.child("template_seed"); t != nullptr && !t->is_null()) {
    try {
      c.template_seed = t->get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw Error(std::string("config key 'corpus.template_seed': ") + e.what());
    }
  }
  s.finish();
}

void to_json(json& j, const EncoderSpec& c) {
  j = json{{"w2v", c.w2v},       {"w2v_dim", c.w2v_dim},       {"w2v_seed", c.w2v_seed},
           {"hubert", c.hubert}, {"hubert_dim", c.hubert_dim}, {"hubert_seed", c.hubert_seed}};
}

void from_json(const json& j, EncoderSpec& c) {
  Section s(j, "encoders");
  s("w2v", c.w2v)("w2v_dim", c.w2v_dim)("w2v_seed", c.w2v_seed);
  s("hubert", c.hubert)("hubert_dim", c.hubert_dim)("hubert_seed", c.hubert_seed);
  s.finish();
}

void to_json(json& j, const RecognizerConfig& c) {
  j = json{{"input_dim", c.input_dim},
           {"d_model", c.d_model},
           {"n_conformer_blocks", c.n_conformer_blocks},
           {"n_heads", c.n_heads},
           {"conv_kernel", c.conv_kernel},
           {"ff_expansion", c.ff_expansion},
           {"subsample_factor", c.subsample_factor},
           {"subsample_channels", c.subsample_channels},
           {"vocab", c.vocab},
           {"att_decoder_hidden", c.att_decoder_hidden},
           {"att_embed_dim", c.att_embed_dim},
           {"att_dim", c.att_dim},
           {"att_loc_filters", c.att_loc_filters},
           {"att_loc_kernel", c.att_loc_kernel},
           {"alpha", c.alpha}};
}

void from_json(const json& j, RecognizerConfig& c) {
  Section s(j, "pron");
  s("input_dim", c.input_dim)("d_model", c.d_model)("n_conformer_blocks", c.n_conformer_blocks);
  s("n_heads", c.n_heads)("conv_kernel", c.conv_kernel)("ff_expansion", c.ff_expansion);
  s("subsample_factor", c.subsample_factor)("subsample_channels", c.subsample_channels);
  s("vocab", c.vocab)("att_decoder_hidden", c.att_decoder_hidden)("att_embed_dim", c.att_embed_dim);
  s("att_dim", c.att_dim)("att_loc_filters", c.att_loc_filters)("att_loc_kernel", c.att_loc_kernel);
  s("alpha", c.alpha);
  s.child("train");  // handled by the run-config parser
  s.finish();
}

void to_json(json& j, const RecognizerTrainConfig& c) {
  j = json{{"epochs", c.epochs},         {"batch_size", c.batch_size},
           {"lr", c.lr},                 {"grad_clip", c.grad_clip},
           {"val_fraction", c.val_fraction}, {"seed", c.seed}};
}

void from_json(const json& j, RecognizerTrainConfig& c) {
  Section s(j, "pron.train");
  s("epochs", c.epochs)("batch_size", c.batch_size)("lr", c.lr)("grad_clip", c.grad_clip);
  s("val_fraction", c.val_fraction)("seed", c.seed);
  s.finish();
}

void to_json(json& j, const FusionConfig& c) {
  std::vector<std::string> views;
  for (View v : c.views) views.emplace_back(view_name(v));
  j = json{{"d_model", c.d_model},
           {"n_heads", c.n_heads},
           {"n_blocks", c.n_blocks},
           {"ff_expansion", c.ff_expansion},
           {"mode", fusion_mode_name(c.mode)},
           {"views", views},
           {"duration_vocab", c.duration_vocab},
           {"w2v_dim", c.w2v_dim},
           {"pron_dim", c.pron_dim},
           {"lfcc_dim", c.lfcc_dim}};
}

void from_json(const json& j, FusionConfig& c) {
  Section s(j, "fusion");
  std::string mode = fusion_mode_name(c.mode);
  std::vector<std::string> views;
  for (View v : c.views) views.emplace_back(view_name(v));
  s("d_model", c.d_model)("n_heads", c.n_heads)("n_blocks", c.n_blocks);
  s("ff_expansion", c.ff_expansion)("mode", mode)("views", views);
  s("duration_vocab", c.duration_vocab)("w2v_dim", c.w2v_dim)("pron_dim", c.pron_dim);
  s("lfcc_dim", c.lfcc_dim);
  s.finish();
  c.mode = parse_fusion_mode(mode);
  c.views.clear();
  for (const auto& v : views) c.views.push_back(parse_view(v));
}

void to_json(json& j, const DetectorConfig& c) {
  j = json{{"input_dim", c.input_dim},       {"n_frames", c.n_frames},
           {"lcnn_channels", c.lcnn_channels}, {"blstm_hidden", c.blstm_hidden},
           {"blstm_layers", c.blstm_layers}, {"n_classes", c.n_classes}};
}

void from_json(const json& j, DetectorConfig& c) {
  Section s(j, "detector");
  s("input_dim", c.input_dim)("n_frames", c.n_frames)("lcnn_channels", c.lcnn_channels);
  s("blstm_hidden", c.blstm_hidden)("blstm_layers", c.blstm_layers)("n_classes", c.n_classes);
  s.finish();
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.lr},       {"batch_size", c.batch_size},     {"epochs", c.epochs},
           {"seed", c.seed},   {"fixed_frames", c.fixed_frames}, {"beta1", c.beta1},
           {"beta2", c.beta2}, {"eps", c.eps},                   {"val_fraction", c.val_fraction}};
}

void from_json(const json& j, TrainConfig& c) {
  Section s(j, "trainer");
  s("lr", c.lr)("batch_size", c.batch_size)("epochs", c.epochs)("seed", c.seed);
  s("fixed_frames", c.fixed_frames)("beta1", c.beta1)("beta2", c.beta2)("eps", c.eps);
  s("val_fraction", c.val_fraction);
  s.finish();
}

void RunConfig::validate() const {
  corpus.validate();
  pron.validate();
  fusion.validate();
  trainer.validate();
  MVSPOOF_CHECK(duration.vocabulary >= 1, "duration.vocabulary must be positive");
  MVSPOOF_CHECK(fusion.duration_vocab == duration.vocabulary,
                "fusion.duration_vocab must equal duration.vocabulary");
  MVSPOOF_CHECK(fusion.w2v_dim == encoders.w2v_dim, "fusion.w2v_dim must equal encoders.w2v_dim");
  MVSPOOF_CHECK(fusion.pron_dim == pron.d_model, "fusion.pron_dim must equal pron.d_model");
  MVSPOOF_CHECK(detector.n_frames == trainer.fixed_frames,
                "detector.n_frames must equal trainer.fixed_frames");
  MVSPOOF_CHECK(jobs >= 1, "jobs must be at least 1");
}

RunConfig parse_run_config(const json& doc, std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  Section top(doc, "");
  top("seed", c.seed)("jobs", c.jobs);
  if (seed_override) c.seed = *seed_override;

  // Derived seeds first; explicit keys below override them.
  c.corpus.seed = c.seed + kSeedOffsetCorpus;
  c.encoders.w2v_seed = c.seed + kSeedOffsetW2v;
  c.encoders.hubert_seed = c.seed + kSeedOffsetHubert;
  c.duration.seed = c.seed + kSeedOffsetQuantizer;
  c.pron_train.seed = c.seed + kSeedOffsetPron;
  c.trainer.seed = c.seed + kSeedOffsetDetector;

  try {
    if (const json* s = top.child("corpus")) from_json(*s, c.corpus);
    if (const json* s = top.child("encoders")) from_json(*s, c.encoders);
    if (const json* s = top.child("duration")) {
      Section d(*s, "duration");
      d("vocabulary", c.duration.vocabulary)("max_iterations", c.duration.kmeans.max_iterations);
      d("tolerance", c.duration.kmeans.tolerance)("seed", c.duration.seed);
      d.finish();
    }
    if (const json* s = top.child("pron")) {
      from_json(*s, c.pron);
      if (s->contains("train")) from_json(s->at("train"), c.pron_train);
    }
    if (const json* s = top.child("fusion")) from_json(*s, c.fusion);
    if (const json* s = top.child("detector")) from_json(*s, c.detector);
    if (const json* s = top.child("trainer")) from_json(*s, c.trainer);
    if (const json* s = top.child("artifacts")) {
      Section a(*s, "artifacts");
      a("quantizer", c.artifacts.quantizer)("pron_checkpoint", c.artifacts.pron_checkpoint);
      a.finish();
    }
  } catch (const json::exception& e) {
    throw Error(std::string("invalid configuration: ") + e.what());
  }
  top.finish();

  // Sizes tied to other sections follow them unless set explicitly.
  const auto fusion_json = doc.contains("fusion") ? doc.at("fusion") : json::object();
  const auto pron_json = doc.contains("pron") ? doc.at("pron") : json::object();
  if (!pron_json.contains("vocab")) c.pron.vocab = c.corpus.n_pseudo_phonemes + 1;
  if (!fusion_json.contains("duration_vocab")) c.fusion.duration_vocab = c.duration.vocabulary;
  if (!fusion_json.contains("w2v_dim")) c.fusion.w2v_dim = c.encoders.w2v_dim;
  if (!fusion_json.contains("pron_dim")) c.fusion.pron_dim = c.pron.d_model;
  const auto det_json = doc.contains("detector") ? doc.at("detector") : json::object();
  if (!det_json.contains("n_frames")) c.detector.n_frames = c.trainer.fixed_frames;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, seed_override);
}

json run_config_json(const RunConfig& c) {
  json pron = c.pron;
  pron["train"] = c.pron_train;
  return json{{"seed", c.seed},
              {"jobs", c.jobs},
              {"corpus", c.corpus},
              {"encoders", c.encoders},
              {"duration",
               {{"vocabulary", c.duration.vocabulary},
                {"max_iterations", c.duration.kmeans.max_iterations},
                {"tolerance", c.duration.kmeans.tolerance},
                {"seed", c.duration.seed}}},
              {"pron", pron},
              {"fusion", c.fusion},
              {"detector", c.detector},
              {"trainer", c.trainer},
              {"artifacts",
               {{"quantizer", c.artifacts.quantizer},
                {"pron_checkpoint", c.artifacts.pron_checkpoint}}}};
}

}  // namespace mvspoof
