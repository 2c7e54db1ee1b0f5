// tools/mvspoof.cpp

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

// mvspoof: command-line driver for corpus synthesis, front-end fitting,
// detector training and evaluation.
//
// Exit status: 0 on success, 1 when a stage fails, 2 on a usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvspoof/pipeline.hpp"

namespace {

using namespace mvspoof;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 0;
};

void add_common(CLI::App* sub, Common& c, bool need_config, bool need_out) {
  auto* opt = sub->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  if (need_config) opt->required();
  sub->add_option("--seed", c.seed, "Global seed (overrides the configuration)");
  auto* out = sub->add_option("--out", c.out, "Output path");
  if (need_out) out->required();
  sub->add_option("--jobs", c.jobs, "Parallel utterance workers")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? parse_run_config(nlohmann::json::object(), c.seed)
                                   : load_run_config(c.config, c.seed);
  if (c.jobs > 0) cfg.jobs = c.jobs;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  atomic_write(path, [&](std::ostream& os) { os << text; });
}

struct SynthFlags {
  std::optional<std::string> dataset;
  std::optional<std::uint64_t> template_seed;
  std::optional<int> n_real, n_fake;
};

int run_synth(const Common& c, const SynthFlags& f) {
  RunConfig cfg = resolve(c);
  if (f.n_real) cfg.corpus.n_real = *f.n_real;
  if (f.n_fake) cfg.corpus.n_fake = *f.n_fake;
  if (f.dataset) cfg.corpus.dataset = *f.dataset;
  if (f.template_seed) cfg.corpus.template_seed = *f.template_seed;
  const TrialManifest m = generate_synth_corpus(cfg.corpus, c.out);
  std::cout << (fs::path(c.out) / "manifest.tsv").string() << '\n';
  std::cerr << "wrote " << m.records.size() << " utterances\n";
  return 0;
}

int run_fit_quantizer(const Common& c, const std::string& manifest) {
  const RunConfig cfg = resolve(c);
  KMeansTrace trace;
  const Quantizer q = fit_duration_quantizer(cfg, load_manifest(manifest), &trace);
  q.save(c.out);
  std::cerr << "k-means: K=" << q.vocabulary() << " iterations=" << trace.iterations
            << " converged=" << (trace.converged ? "yes" : "no")
            << " wcss=" << (trace.wcss.empty() ? 0.0 : trace.wcss.back()) << '\n';
  std::cout << c.out << '\n';
  return 0;
}

int run_train_pron(const Common& c, const std::string& manifest) {
  const RunConfig cfg = resolve(c);
  RecognizerReport rep;
  PronModel model = train_recognizer(load_manifest(manifest), cfg.pron, cfg.pron_train, &rep);
  save_recognizer(c.out, model);
  for (std::size_t e = 0; e < rep.train_loss.size(); ++e)
    std::cerr << "epoch " << e + 1 << " train_loss " << rep.train_loss[e] << " val_loss "
              << rep.val_loss[e] << '\n';
  std::cerr << "validation PER " << 100.0 * rep.val_per << "%\n";
  std::cout << c.out << '\n';
  return 0;
}

int run_decode(const std::string& model_path, const std::vector<std::string>& wavs) {
  PronModel model = load_recognizer(model_path);
  for (const auto& w : wavs) {
    std::cout << w;
    for (int id : decode_clip(read_wav(w), model)) std::cout << ' ' << id;
    std::cout << '\n';
  }
  return 0;
}

int run_train(const Common& c, const std::string& manifest, const std::string& quantizer,
              const std::string& pron) {
  RunConfig cfg = resolve(c);
  if (!quantizer.empty()) cfg.artifacts.quantizer = quantizer;
  if (!pron.empty()) cfg.artifacts.pron_checkpoint = pron;
  cfg.validate();
  const std::string resolved = run_config_json(cfg).dump(2);
  std::cerr << "resolved configuration:\n" << resolved << '\n';
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "config.json", resolved + "\n");
  const TrainResult r = train_from_manifest(cfg, load_manifest(manifest), c.out, &std::cerr);
  std::cerr << "best epoch " << r.report.best_epoch << " val_loss " << r.report.best_val_loss << '\n';
  std::cout << (fs::path(c.out) / "best.ckpt").string() << '\n';
  return 0;
}

int run_evaluate(const Common& c, const std::string& checkpoint,
                 const std::vector<std::string>& manifests) {
  const DetectorCheckpoint ckpt = DetectorCheckpoint::load(checkpoint);
  RunConfig cfg = checkpoint_run_config(ckpt);
  if (c.jobs > 0) cfg.jobs = c.jobs;
  const FeatureExtractor fx = make_extractor(cfg);
  std::vector<TrialManifest> ms;
  for (const auto& m : manifests) ms.push_back(load_manifest(m));
  EvalReport rep = cross_dataset_eval(ckpt, fx, ms, c.out, cfg.jobs);
  rep.checkpoint = fs::path(checkpoint).filename().string();
  const std::string text = render_report(rep);
  if (!c.out.empty()) write_text(fs::path(c.out) / "report.txt", text);
  std::cout << text;
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<EvalReport> reports;
  for (const auto& p : inputs) {
    std::ifstream is(p);
    if (!is) throw Error("cannot open report " + p);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    reports.push_back(parse_report(text));
  }
  const std::string text = render_report(average_reports(reports));
  if (!out.empty()) write_text(out, text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view spoofed speech detection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common c;
  std::string manifest, model, checkpoint, quantizer, pron;
  std::vector<std::string> wavs, manifests, inputs;
  SynthFlags sf;

  auto* synth = app.add_subcommand("synth-corpus", "Generate a synthetic bonafide/spoof corpus");
  add_common(synth, c, false, true);
  synth->add_option("--dataset", sf.dataset, "Dataset tag written to the manifest");
  synth->add_option("--template-seed", sf.template_seed, "Seed of the pseudo-phoneme templates");
  synth->add_option("--n-real", sf.n_real, "Number of bonafide utterances")->check(CLI::PositiveNumber);
  synth->add_option("--n-fake", sf.n_fake, "Number of spoof utterances")->check(CLI::PositiveNumber);

  auto* fitq = app.add_subcommand("fit-quantizer", "Fit the k-means unit quantizer");
  add_common(fitq, c, false, true);
  fitq->add_option("--manifest", manifest, "Training manifest")->required()->check(CLI::ExistingFile);

  auto* tpron = app.add_subcommand("train-pron", "Train the phoneme recognizer");
  add_common(tpron, c, false, true);
  tpron->add_option("--manifest", manifest, "Manifest with .phn sidecars")->required()->check(CLI::ExistingFile);

  auto* dec = app.add_subcommand("decode", "Greedy CTC decoding with a trained recognizer");
  dec->add_option("--model", model, "Recognizer checkpoint")->required()->check(CLI::ExistingFile);
  dec->add_option("wavs", wavs, "Audio files")->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train the multi-view detector");
  add_common(train, c, true, true);
  train->add_option("--manifest", manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  train->add_option("--quantizer", quantizer, "Overrides artifacts.quantizer");
  train->add_option("--pron", pron, "Overrides artifacts.pron_checkpoint");

  auto* eval = app.add_subcommand("evaluate", "Score manifests with a trained detector");
  add_common(eval, c, false, false);
  eval->add_option("--checkpoint", checkpoint, "Detector checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifests", manifests, "Test manifests")->required()->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("report", "Average evaluation reports over seeds");
  std::string rep_out;
  rep->add_option("inputs", inputs, "Report files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "Write the merged report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return run_synth(c, sf);
    if (*fitq) return run_fit_quantizer(c, manifest);
    if (*tpron) return run_train_pron(c, manifest);
    if (*dec) return run_decode(model, wavs);
    if (*train) return run_train(c, manifest, quantizer, pron);
    if (*eval) return run_evaluate(c, checkpoint, manifests);
    if (*rep) return run_report(inputs, rep_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
