// src/trainer.cpp

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

#include "mvspoof/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mvspoof/config.hpp"
#include "mvspoof/nn/optim.hpp"

namespace mvspoof {

FrameFeatureSequence fix_length(const FrameFeatureSequence& seq, int n) {
  MVSPOOF_CHECK(seq.values.rows() >= 1, "fix_length of an empty sequence");
  MVSPOOF_CHECK(n >= 1, "fix_length target must be positive");
  FrameFeatureSequence out;
  out.kind = seq.kind;
  out.frame_shift_ms = seq.frame_shift_ms;
  out.values.resize(n, seq.values.cols());
  const Eigen::Index t_len = seq.values.rows();
  for (Eigen::Index t = 0; t < n; ++t) out.values.row(t) = seq.values.row(t % t_len);
  return out;
}

DurationVector fix_length(const DurationVector& dv, int n) {
  MVSPOOF_CHECK(!dv.ids.empty(), "fix_length of an empty duration vector");
  MVSPOOF_CHECK(n >= 1, "fix_length target must be positive");
  DurationVector out;
  out.ids.resize(static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < out.ids.size(); ++t) out.ids[t] = dv.ids[t % dv.ids.size()];
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n_records, int batch_size,
                                                   std::uint64_t seed, int epoch) {
  MVSPOOF_CHECK(batch_size >= 1, "batch_size must be at least 1");
  std::vector<std::size_t> order(n_records);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(derive_seed(seed, 21), static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t s = 0; s < n_records; s += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(n_records, s + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                         order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return batches;
}

std::vector<std::vector<std::size_t>> make_batches(const TrialManifest& manifest, int batch_size,
                                                   std::uint64_t seed, int epoch) {
  return make_batches(manifest.records.size(), batch_size, seed, epoch);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, double val_fraction, std::uint64_t seed) {
  MVSPOOF_CHECK(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction must lie in [0, 1)");
  std::vector<std::size_t> train, val;
  Rng rng(derive_seed(seed, 22));
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    rng.shuffle(idx.begin(), idx.end());
    const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * idx.size() + 0.5));
    val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

// ---------------------------------------------------------------- extraction

void FeatureExtractor::set_w2v(std::unique_ptr<FrameEncoder> enc) { w2v_ = std::move(enc); }

void FeatureExtractor::set_duration(std::unique_ptr<FrameEncoder> hubert, Quantizer quantizer) {
  MVSPOOF_CHECK(hubert && hubert->output_dim() == quantizer.dim(),
                "quantizer width does not match the duration encoder");
  hubert_ = std::move(hubert);
  quantizer_ = std::move(quantizer);
}

void FeatureExtractor::set_pron(std::shared_ptr<PronModel> model) {
  MVSPOOF_CHECK(model != nullptr, "null pronunciation model");
  pron_ = std::move(model);
  pron_checksum_ = nn::param_checksum(pron_->all_parameters());
}

bool FeatureExtractor::has(View v) const {
  switch (v) {
    case View::kW2v: return w2v_ != nullptr;
    case View::kLfcc: return true;
    case View::kDuration: return hubert_ != nullptr && quantizer_.has_value();
    case View::kPron: return pron_ != nullptr;
  }
  return false;
}

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string encoder_fingerprint(const FrameEncoder& enc) {
  std::string s = enc.name() + "/" + std::to_string(enc.output_dim());
  if (const auto* toy = dynamic_cast<const ToyEncoder*>(&enc)) {
    const MatrixXd& p = toy->params().projection;
    s += "/" + hex(fnv1a(p.data(), sizeof(double) * static_cast<std::size_t>(p.size())));
  }
  return s;
}

std::string view_fingerprint(const FeatureExtractor& fx, View v) {
  switch (v) {
    case View::kW2v: return encoder_fingerprint(*fx.w2v_encoder());
    case View::kLfcc: return "lfcc60";
    case View::kDuration: {
      const MatrixXd& c = fx.quantizer()->centroids;
      return encoder_fingerprint(*fx.hubert_encoder()) + "/k" + std::to_string(c.rows()) + "/" +
             hex(fnv1a(c.data(), sizeof(double) * static_cast<std::size_t>(c.size())));
    }
    case View::kPron: {
      return "pron/" + hex(fx.pron_checksum());
    }
  }
  return "";
}

MatrixXd round_to_float(const MatrixXd& m) { return m.cast<float>().cast<double>(); }

}  // namespace

std::string FeatureExtractor::fingerprint() const {
  std::vector<View> views;
  for (View v : {View::kW2v, View::kLfcc, View::kDuration, View::kPron})
    if (has(v)) views.push_back(v);
  return fingerprint(views);
}

std::string FeatureExtractor::fingerprint(const std::vector<View>& views) const {
  std::string s;
  for (View v : {View::kW2v, View::kLfcc, View::kDuration, View::kPron}) {
    if (std::find(views.begin(), views.end(), v) == views.end()) continue;
    MVSPOOF_CHECK(has(v), std::string("no extractor configured for view ") + view_name(v));
    s += std::string(view_name(v)) + "=" + view_fingerprint(*this, v) + ";";
  }
  return s;
}

std::optional<std::filesystem::path> feature_cache_dir() {
  const char* env = std::getenv("MVSPOOF_CACHE");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return std::filesystem::path(env);
}

ViewInputs<float> FeatureExtractor::extract(const AudioClip& clip, const std::vector<View>& views) const {
  ViewInputs<float> out;
  std::optional<MatrixXd> logmel;
  for (View v : views) {
    MVSPOOF_CHECK(has(v), std::string("no extractor configured for view ") + view_name(v));
    switch (v) {
      case View::kW2v:
        out.w2v = w2v_->encode(clip).values.cast<float>();
        break;
      case View::kLfcc:
        out.lfcc = lfcc(clip).values.cast<float>();
        break;
      case View::kDuration: {
        FrameFeatureSequence h = hubert_->encode(clip);
        h.values = round_to_float(h.values);
        out.duration = quantize(h, *quantizer_).ids;
        break;
      }
      case View::kPron: {
        if (!logmel) logmel = log_mel_spectrogram(clip).values;
        out.pron = extract_pron_features_from_logmel(*logmel, *pron_).values.cast<float>();
        break;
      }
    }
  }
  return out;
}

ViewInputs<float> FeatureExtractor::extract(const std::filesystem::path& wav,
                                            const std::vector<View>& views) const {
  const auto cache = feature_cache_dir();
  if (!cache) return extract(read_wav(wav), views);

  const std::uint64_t audio = file_checksum(wav);
  ViewInputs<float> out;
  std::vector<View> missing;
  std::vector<std::filesystem::path> files;
  for (View v : views) {
    MVSPOOF_CHECK(has(v), std::string("no extractor configured for view ") + view_name(v));
    const std::uint64_t key = fnv1a(view_fingerprint(*this, v), audio);
    const auto file = *cache / (hex(key) + "." + view_name(v) + ".feat");
    files.push_back(file);
    if (!std::filesystem::exists(file)) {
      missing.push_back(v);
      continue;
    }
    const FrameFeatureSequence s = read_feature_file(file);
    switch (v) {
      case View::kW2v: out.w2v = s.values.cast<float>(); break;
      case View::kLfcc: out.lfcc = s.values.cast<float>(); break;
      case View::kPron: out.pron = s.values.cast<float>(); break;
      case View::kDuration:
        out.duration.resize(static_cast<std::size_t>(s.values.rows()));
        for (Eigen::Index t = 0; t < s.values.rows(); ++t)
          out.duration[static_cast<std::size_t>(t)] = static_cast<int>(s.values(t, 0));
        break;
    }
  }
  if (missing.empty()) return out;
  const ViewInputs<float> fresh = extract(read_wav(wav), missing);
  for (View v : missing) {
    FrameFeatureSequence s;
    switch (v) {
      case View::kW2v:
        out.w2v = fresh.w2v;
        s.values = fresh.w2v.cast<double>();
        s.kind = FeatureKind::kSsl1024;
        break;
      case View::kLfcc:
        out.lfcc = fresh.lfcc;
        s.values = fresh.lfcc.cast<double>();
        s.kind = FeatureKind::kLfcc60;
        break;
      case View::kPron:
        out.pron = fresh.pron;
        s.values = fresh.pron.cast<double>();
        s.kind = FeatureKind::kPron144;
        break;
      case View::kDuration:
        out.duration = fresh.duration;
        s = duration_feature(DurationVector{fresh.duration});
        break;
    }
    if (s.values.cols() != feature_kind_dim(s.kind)) s.kind = FeatureKind::kEmbedding;
    const auto pos = static_cast<std::size_t>(std::find(views.begin(), views.end(), v) - views.begin());
    std::filesystem::create_directories(files[pos].parent_path());
    write_feature_file(files[pos], s);
  }
  return out;
}

Dataset build_dataset(const TrialManifest& manifest, const FeatureExtractor& extractor,
                      const std::vector<View>& views, int jobs) {
  Dataset d;
  const std::size_t n = manifest.records.size();
  d.inputs.resize(n);
  for (const auto& r : manifest.records) {
    d.labels.push_back(class_index(r.label));
    d.paths.push_back(r.path);
    d.datasets.push_back(r.dataset);
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        d.inputs[i] = extractor.extract(manifest.records[i].path, views);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return d;
}

// ---------------------------------------------------------------- training

void TrainConfig::validate() const {
  MVSPOOF_CHECK(lr >= 0, "trainer lr must be non-negative");
  MVSPOOF_CHECK(batch_size >= 1, "trainer batch_size must be at least 1");
  MVSPOOF_CHECK(epochs >= 0, "trainer epochs must be non-negative");
  MVSPOOF_CHECK(fixed_frames >= 1, "trainer fixed_frames must be positive");
  MVSPOOF_CHECK(val_fraction >= 0.0 && val_fraction < 1.0, "trainer val_fraction must lie in [0, 1)");
}

double score_utterance(DetectorModel& model, const ViewInputs<float>& in) {
  nn::Graph<float> g(false);
  return detector_score(model(g, in).value());
}

double dataset_loss(DetectorModel& model, const Dataset& data, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  double total = 0;
  for (auto i : idx) {
    nn::Graph<float> g(false);
    total += nn::cross_entropy(model(g, data.inputs[i]), {data.labels[i]}).value()(0, 0);
  }
  return total / static_cast<double>(idx.size());
}

namespace {

constexpr char kDetMagic[4] = {'M', 'V', 'D', 'T'};
constexpr std::uint32_t kDetVersion = 1;

DetectorCheckpoint make_checkpoint(const FusionConfig& fusion, const DetectorConfig& detector,
                                   const TrainConfig& train, const std::string& fingerprint,
                                   const std::string& run_config) {
  DetectorCheckpoint c;
  c.fusion = fusion;
  c.detector = detector;
  if (c.detector.input_dim == 0) c.detector.input_dim = fusion.fused_dim();
  c.train = train;
  c.extractor_fingerprint = fingerprint;
  c.run_config = run_config;
  c.model = std::make_unique<DetectorModel>(c.fusion, c.detector, derive_seed(train.seed, 32));
  return c;
}

}  // namespace

void DetectorCheckpoint::save(const std::filesystem::path& path) const {
  MVSPOOF_CHECK(model != nullptr, "cannot save an empty checkpoint");
  atomic_write(path, [&](std::ostream& os) {
    os.write(kDetMagic, 4);
    BinaryWriter w(os);
    w.put<std::uint32_t>(kDetVersion);
    w.put_string(nlohmann::json(fusion).dump());
    w.put_string(nlohmann::json(detector).dump());
    w.put_string(nlohmann::json(train).dump());
    w.put_string(extractor_fingerprint);
    w.put_string(run_config);
    nn::write_params(w, model->parameters());
  });
}

DetectorCheckpoint DetectorCheckpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open detector checkpoint " + path.string());
  char magic[4];
  is.read(magic, 4);
  MVSPOOF_CHECK(is && std::equal(magic, magic + 4, kDetMagic),
                "not a detector checkpoint: " + path.string());
  BinaryReader r(is, "detector checkpoint " + path.string());
  MVSPOOF_CHECK(r.get<std::uint32_t>() == kDetVersion, "unsupported detector checkpoint version");
  DetectorCheckpoint c;
  try {
    c.fusion = nlohmann::json::parse(r.get_string()).get<FusionConfig>();
    c.detector = nlohmann::json::parse(r.get_string()).get<DetectorConfig>();
    c.train = nlohmann::json::parse(r.get_string()).get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt configuration in " + path.string() + ": " + e.what());
  }
  c.extractor_fingerprint = r.get_string();
  c.run_config = r.get_string();
  c.model = std::make_unique<DetectorModel>(c.fusion, c.detector, 0);
  nn::read_params(r, c.model->parameters());
  return c;
}

TrainResult train_detector(const Dataset& data, const FusionConfig& fusion,
                           const DetectorConfig& detector, const TrainConfig& config,
                           const std::string& extractor_fingerprint,
                           const std::filesystem::path& out_dir, const std::string& run_config,
                           std::ostream* log) {
  config.validate();
  fusion.validate();
  MVSPOOF_CHECK(!data.inputs.empty(), "training set is empty");
  MVSPOOF_CHECK(std::count(data.labels.begin(), data.labels.end(), 0) > 0 &&
                    std::count(data.labels.begin(), data.labels.end(), 1) > 0,
                "training set needs both bonafide and spoof records");
  MVSPOOF_CHECK(detector.n_frames == config.fixed_frames,
                "detector n_frames must equal trainer fixed_frames");

  auto [train_idx, val_idx] = stratified_split(data.labels, config.val_fraction, config.seed);
  MVSPOOF_CHECK(!train_idx.empty(), "no training records left after the validation split");

  TrainResult result;
  result.final_model = make_checkpoint(fusion, detector, config, extractor_fingerprint, run_config);
  DetectorModel& model = *result.final_model.model;
  const auto params = model.parameters();
  std::vector<nn::Matrix<float>> best_values;

  nn::AdamConfig acfg;
  acfg.lr = config.lr;
  acfg.beta1 = config.beta1;
  acfg.beta2 = config.beta2;
  acfg.eps = config.eps;
  nn::Adam<float> adam(acfg);
  nn::zero_grad(params);

  std::ofstream tsv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    tsv.open(out_dir / "train_log.tsv");
    tsv << "epoch\ttrain_loss\tval_loss\n";
  }

  TrainReport& rep = result.report;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0;
    for (const auto& batch : make_batches(train_idx.size(), config.batch_size, config.seed, epoch)) {
      const float inv_b = 1.0f / static_cast<float>(batch.size());
      for (std::size_t k : batch) {
        const std::size_t i = train_idx[k];
        nn::Graph<float> g;
        const auto loss = nn::cross_entropy(model(g, data.inputs[i]), {data.labels[i]});
        const double v = loss.value()(0, 0);
        if (!std::isfinite(v))
          throw Error("detector loss is not finite at epoch " + std::to_string(epoch + 1) + " on " +
                      data.paths[i].string());
        total += v;
        g.backward(nn::scale(loss, inv_b));
      }
      adam.step(params);
      nn::zero_grad(params);
    }
    rep.train_loss.push_back(total / static_cast<double>(train_idx.size()));
    rep.val_loss.push_back(val_idx.empty() ? rep.train_loss.back() : dataset_loss(model, data, val_idx));
    if (rep.best_epoch == 0 || rep.val_loss.back() < rep.best_val_loss) {
      rep.best_epoch = epoch + 1;
      rep.best_val_loss = rep.val_loss.back();
      best_values.clear();
      for (const auto* p : params) best_values.push_back(p->value);
    }
    if (tsv.is_open()) {
      tsv << epoch + 1 << '\t' << std::setprecision(17) << rep.train_loss.back() << '\t'
          << rep.val_loss.back() << '\n';
      tsv.flush();
    }
    if (log != nullptr)
      *log << "epoch " << epoch + 1 << "/" << config.epochs << " train_loss "
           << std::setprecision(6) << rep.train_loss.back() << " val_loss " << rep.val_loss.back()
           << std::endl;
  }

  result.best_model = make_checkpoint(fusion, detector, config, extractor_fingerprint, run_config);
  const auto best_params = result.best_model.model->parameters();
  for (std::size_t k = 0; k < best_params.size(); ++k)
    best_params[k]->value = best_values.empty() ? params[k]->value : best_values[k];

  if (!out_dir.empty()) {
    result.final_model.save(out_dir / "final.ckpt");
    result.best_model.save(out_dir / "best.ckpt");
  }
  return result;
}

}  // namespace mvspoof
