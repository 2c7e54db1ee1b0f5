// src/corpus.cpp

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

#include "mvspoof/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mvspoof/util.hpp"

namespace mvspoof {

namespace fs = std::filesystem;

void validate_clip(const AudioClip& clip) {
  MVSPOOF_CHECK(clip.sample_rate == kSampleRate,
                "sample rate " + std::to_string(clip.sample_rate) +
                    " != 16000 (resampling is not supported)");
  MVSPOOF_CHECK(!clip.samples.empty(), "empty audio clip");
  for (double s : clip.samples)
    MVSPOOF_CHECK(std::isfinite(s) && std::abs(s) <= 1.0,
                  "sample outside [-1, 1]");
}

namespace {

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

AudioClip read_wav(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open wav file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  MVSPOOF_CHECK(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                    std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
                "not a RIFF/WAVE file" + where);
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    MVSPOOF_CHECK(body + size <= bytes.size() || std::memcmp(chunk, "data", 4) == 0,
                  "truncated chunk" + where);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      MVSPOOF_CHECK(size >= 16, "short fmt chunk" + where);
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      MVSPOOF_CHECK(have_fmt, "data chunk before fmt chunk" + where);
      MVSPOOF_CHECK(format == 1 && bits == 16,
                    "unsupported format (PCM16 required)" + where);
      MVSPOOF_CHECK(channels == 1, "expected mono audio, got " +
                                       std::to_string(channels) + " channels" + where);
      MVSPOOF_CHECK(rate == kSampleRate, "sample rate " + std::to_string(rate) +
                                             " != 16000" + where);
      const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.samples.resize(avail / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
        clip.samples[i] = v / 32768.0;
      }
      MVSPOOF_CHECK(!clip.samples.empty(), "empty data chunk" + where);
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw Error("no data chunk" + where);
}

void write_wav(const fs::path& path, const AudioClip& clip) {
  MVSPOOF_CHECK(clip.sample_rate > 0, "invalid sample rate");
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  atomic_write(path, [&](std::ostream& os) {
    BinaryWriter w(os);
    os.write("RIFF", 4);
    w.put<std::uint32_t>(36 + 2 * n);
    os.write("WAVEfmt ", 8);
    w.put<std::uint32_t>(16);
    w.put<std::uint16_t>(1);
    w.put<std::uint16_t>(1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(clip.sample_rate));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(clip.sample_rate) * 2);
    w.put<std::uint16_t>(2);
    w.put<std::uint16_t>(16);
    os.write("data", 4);
    w.put<std::uint32_t>(2 * n);
    for (double s : clip.samples) {
      const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
      w.put<std::int16_t>(static_cast<std::int16_t>(q));
    }
  });
}

const char* label_name(Label l) {
  return l == Label::kBonafide ? "bonafide" : "spoof";
}

Label parse_label(const std::string& token) {
  if (token == "bonafide") return Label::kBonafide;
  if (token == "spoof") return Label::kSpoof;
  throw Error("unknown label '" + token + "' (expected bonafide|spoof)");
}

std::size_t TrialManifest::count(Label l) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [l](const TrialRecord& r) { return r.label == l; }));
}

void TrialManifest::require_two_class() const {
  MVSPOOF_CHECK(count(Label::kBonafide) > 0 && count(Label::kSpoof) > 0,
                "manifest '" + name + "' needs at least one bonafide and one spoof record");
}

TrialManifest load_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest " + path.string());
  TrialManifest m;
  m.name = path.parent_path().filename().string();
  if (m.name.empty()) m.name = path.stem().string();
  const fs::path base = path.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw Error(path.string() + ":" + std::to_string(lineno) +
                  ": expected 3 tab-separated fields, got " +
                  std::to_string(fields.size()));
    TrialRecord r;
    r.path = fields[0];
    if (r.path.is_relative()) r.path = base / r.path;
    try {
      r.label = parse_label(fields[1]);
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    r.dataset = fields[2];
    MVSPOOF_CHECK(!r.dataset.empty(),
                  path.string() + ":" + std::to_string(lineno) + ": empty dataset tag");
    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const fs::path& path, const TrialManifest& m) {
  const fs::path base = path.parent_path();
  atomic_write(path, [&](std::ostream& os) {
    for (const auto& r : m.records) {
      fs::path p = r.path;
      if (!base.empty()) {
        const auto rel = p.lexically_relative(base);
        if (!rel.empty() && *rel.begin() != "..") p = rel;
      }
      os << p.generic_string() << '\t' << label_name(r.label) << '\t' << r.dataset << '\n';
    }
  });
}

fs::path transcript_path(const fs::path& wav) {
  fs::path p = wav;
  p.replace_extension(".phn");
  return p;
}

std::vector<int> read_transcript(const fs::path& wav) {
  const auto p = transcript_path(wav);
  std::ifstream is(p);
  if (!is) throw Error("missing transcript sidecar " + p.string());
  std::vector<int> ids;
  int v;
  while (is >> v) ids.push_back(v);
  MVSPOOF_CHECK(is.eof(), "malformed transcript " + p.string());
  return ids;
}

void write_transcript(const fs::path& wav, const std::vector<int>& ids) {
  atomic_write(transcript_path(wav), [&](std::ostream& os) {
    for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? " " : "") << ids[i];
    os << '\n';
  });
}

void SynthCorpusConfig::validate() const {
  MVSPOOF_CHECK(n_real > 0 && n_fake > 0 && n_pseudo_phonemes > 1,
                "synthetic corpus counts must be positive (and at least 2 templates)");
  MVSPOOF_CHECK(real_duration_jitter >= 0 && real_duration_jitter <= 1 &&
                    fake_duration_jitter >= 0 && fake_duration_jitter <= 1,
                "duration jitter must lie in [0, 1]");
  MVSPOOF_CHECK(real_duration_jitter > fake_duration_jitter,
                "real_duration_jitter must exceed fake_duration_jitter");
  MVSPOOF_CHECK(min_segments >= 1 && max_segments >= min_segments,
                "invalid segment count range");
  MVSPOOF_CHECK(base_segment_ms * (1.0 - real_duration_jitter) > 2.0 * fade_ms,
                "segments too short for the cross-fade");
  MVSPOOF_CHECK(noise_level >= 0 && noise_level < 0.1, "noise_level out of range");
  MVSPOOF_CHECK(!dataset.empty(), "empty dataset tag");
}

std::vector<FormantTemplate> make_templates(int count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 17));
  std::vector<FormantTemplate> out(static_cast<std::size_t>(count));
  for (auto& t : out) {
    double a = rng.uniform(200.0, 4000.0);
    double b = rng.uniform(200.0, 4000.0);
    t.f1 = std::min(a, b);
    t.f2 = std::max(a, b);
  }
  return out;
}

SynthUtterance synthesize_utterance(const std::vector<FormantTemplate>& templates,
                                    double jitter, const SynthCorpusConfig& cfg,
                                    std::uint64_t utterance_seed) {
  Rng rng(utterance_seed);
  const double sr = kSampleRate;
  SynthUtterance u;
  const auto n_seg = rng.uniform_int(cfg.min_segments, cfg.max_segments);
  const int n_templates = static_cast<int>(templates.size());
  int prev = 0;
  std::size_t total = 0;
  for (std::int64_t i = 0; i < n_seg; ++i) {
    int id;
    do {
      id = static_cast<int>(rng.uniform_int(1, n_templates));
    } while (id == prev);
    prev = id;
    const double ms = cfg.base_segment_ms * (1.0 + rng.uniform(-jitter, jitter));
    const auto len = static_cast<std::size_t>(std::lround(ms * sr / 1000.0));
    u.template_ids.push_back(id);
    u.segment_samples.push_back(len);
    total += len;
  }

  std::vector<double> y(total, 0.0);
  const auto fade = static_cast<std::ptrdiff_t>(std::lround(cfg.fade_ms * sr / 1000.0));
  const std::ptrdiff_t half = fade / 2;
  std::ptrdiff_t start = 0;
  for (std::size_t i = 0; i < u.template_ids.size(); ++i) {
    const auto& t = templates[static_cast<std::size_t>(u.template_ids[i] - 1)];
    const auto len = static_cast<std::ptrdiff_t>(u.segment_samples[i]);
    const bool first = i == 0, last = i + 1 == u.template_ids.size();
    const std::ptrdiff_t lo = first ? 0 : start - half;
    const std::ptrdiff_t hi = last ? start + len : start + len - half + fade;
    for (std::ptrdiff_t n = lo; n < hi; ++n) {
      double w = 1.0;
      if (!first && n < start - half + fade) {
        const double k = (n - (start - half) + 0.5) / fade;
        w = std::pow(std::sin(0.5 * M_PI * k), 2);
      } else if (!last && n >= start + len - half) {
        const double k = (n - (start + len - half) + 0.5) / fade;
        w = std::pow(std::cos(0.5 * M_PI * k), 2);
      }
      const double tt = (n - start) / sr;
      y[static_cast<std::size_t>(n)] +=
          w * 0.25 * (std::sin(2 * M_PI * t.f1 * tt) + std::sin(2 * M_PI * t.f2 * tt));
    }
    start += len;
  }
  for (auto& v : y) v = std::clamp(v + cfg.noise_level * rng.normal(), -1.0, 1.0);
  u.clip.samples = std::move(y);
  u.clip.sample_rate = kSampleRate;
  return u;
}

TrialManifest generate_synth_corpus(const SynthCorpusConfig& config,
                                    const fs::path& out_dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  MVSPOOF_CHECK(fs::is_directory(out_dir), "cannot create directory " + out_dir.string());
  {
    const auto probe = out_dir / ".write_probe";
    std::ofstream os(probe);
    MVSPOOF_CHECK(static_cast<bool>(os), "directory not writable: " + out_dir.string());
    os.close();
    fs::remove(probe, ec);
  }

  const auto templates =
      make_templates(config.n_pseudo_phonemes, config.template_seed.value_or(config.seed));
  TrialManifest m;
  m.name = out_dir.filename().string();
  auto emit = [&](Label label, int count, double jitter, const char* prefix) {
    for (int i = 0; i < count; ++i) {
      const std::uint64_t useed =
          derive_seed(derive_seed(config.seed, label == Label::kBonafide ? 1 : 2),
                      static_cast<std::uint64_t>(i));
      auto u = synthesize_utterance(templates, jitter, config, useed);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.wav", prefix, i);
      const fs::path wav = out_dir / name;
      write_wav(wav, u.clip);
      write_transcript(wav, u.template_ids);
      m.records.push_back({wav, label, config.dataset});
    }
  };
  emit(Label::kBonafide, config.n_real, config.real_duration_jitter, "real");
  emit(Label::kSpoof, config.n_fake, config.fake_duration_jitter, "fake");
  save_manifest(out_dir / "manifest.tsv", m);
  return m;
}

}  // namespace mvspoof
