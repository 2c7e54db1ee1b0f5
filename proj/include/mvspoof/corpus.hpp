// mvspoof/corpus.hpp

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

#ifndef MVSPOOF_CORPUS_HPP_
#define MVSPOOF_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvspoof {

inline constexpr int kSampleRate = 16000;

/// Mono waveform with amplitudes in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_sec() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Throws unless the clip is a valid pipeline input (16 kHz, non-empty,
/// amplitudes within [-1, 1]).
void validate_clip(const AudioClip& clip);

/// Reads a RIFF PCM16 mono 16 kHz file. Samples are divided by 32768.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes PCM16 mono. Values are rounded to the nearest code and clamped.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

enum class Label { kBonafide, kSpoof };

const char* label_name(Label l);
Label parse_label(const std::string& token);

struct TrialRecord {
  std::filesystem::path path;
  Label label = Label::kBonafide;
  std::string dataset;
};

struct TrialManifest {
  std::string name;
  std::vector<TrialRecord> records;

  std::size_t count(Label l) const;
  /// Throws unless both classes are present.
  void require_two_class() const;
};

/// Parses `path<TAB>label<TAB>dataset` lines. Blank and `#` lines are
/// skipped. Relative paths are resolved against the manifest's directory.
TrialManifest load_manifest(const std::filesystem::path& path);

/// Writes records with paths relative to the manifest directory when they
/// live beneath it.
void save_manifest(const std::filesystem::path& path, const TrialManifest& m);

/// Sidecar transcript: same stem, `.phn` extension.
std::filesystem::path transcript_path(const std::filesystem::path& wav);
std::vector<int> read_transcript(const std::filesystem::path& wav);
void write_transcript(const std::filesystem::path& wav,
                      const std::vector<int>& ids);

struct SynthCorpusConfig {
  int n_real = 50;
  int n_fake = 50;
  int n_pseudo_phonemes = 20;
  double real_duration_jitter = 0.5;
  double fake_duration_jitter = 0.05;
  std::uint64_t seed = 1;
  /// Seed for the formant templates. Defaults to `seed`; sharing it across
  /// corpora gives in-domain splits, changing it gives a shifted domain.
  std::optional<std::uint64_t> template_seed;
  double base_segment_ms = 120.0;
  int min_segments = 5;
  int max_segments = 12;
  double fade_ms = 5.0;
  /// Standard deviation of the additive white-noise floor.
  double noise_level = 1e-3;
  std::string dataset = "IN";

  void validate() const;
};

/// The two formant frequencies of one pseudo-phoneme.
struct FormantTemplate {
  double f1 = 0.0;
  double f2 = 0.0;
};

std::vector<FormantTemplate> make_templates(int count, std::uint64_t seed);

/// One synthesized utterance before quantization to PCM16.
struct SynthUtterance {
  AudioClip clip;
  std::vector<int> template_ids;          // 1-based
  std::vector<std::size_t> segment_samples;  // nominal segment lengths
};

SynthUtterance synthesize_utterance(const std::vector<FormantTemplate>& templates,
                                    double jitter, const SynthCorpusConfig& cfg,
                                    std::uint64_t utterance_seed);

/// Writes real_XXXX.wav / fake_XXXX.wav with `.phn` sidecars and a
/// `manifest.tsv` into `out_dir`; returns the manifest.
TrialManifest generate_synth_corpus(const SynthCorpusConfig& config,
                                    const std::filesystem::path& out_dir);

}  // namespace mvspoof

#endif  // MVSPOOF_CORPUS_HPP_
