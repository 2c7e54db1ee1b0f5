// src/dsp.cpp

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

#include "mvspoof/dsp.hpp"

#include <cmath>
#include <fstream>

#include "mvspoof/util.hpp"

namespace mvspoof {

const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::kLogMel80: return "logmel80";
    case FeatureKind::kLfcc60: return "lfcc60";
    case FeatureKind::kSsl1024: return "ssl1024";
    case FeatureKind::kSslProj128: return "ssl_proj128";
    case FeatureKind::kPron144: return "pron144";
    case FeatureKind::kDurationIds: return "duration_ids";
    case FeatureKind::kEmbedding: return "embedding";
  }
  return "unknown";
}

int feature_kind_dim(FeatureKind k) {
  switch (k) {
    case FeatureKind::kLogMel80: return 80;
    case FeatureKind::kLfcc60: return 60;
    case FeatureKind::kSsl1024: return 1024;
    case FeatureKind::kSslProj128: return 128;
    case FeatureKind::kPron144: return 144;
    case FeatureKind::kDurationIds: return 1;
    case FeatureKind::kEmbedding: return 0;
  }
  return 0;
}

void FrameFeatureSequence::validate() const {
  MVSPOOF_CHECK(values.rows() >= 1, "feature sequence has no frames");
  const int want = feature_kind_dim(kind);
  MVSPOOF_CHECK(want == 0 || values.cols() == want,
                std::string("feature width mismatch for ") + feature_kind_name(kind));
  MVSPOOF_CHECK(values.allFinite(), "non-finite feature value");
}

std::size_t num_frames(std::size_t n_samples, std::size_t frame_len, std::size_t shift) {
  if (n_samples < frame_len) return 0;
  return (n_samples - frame_len) / shift + 1;
}

std::vector<std::vector<double>> frame_signal(const AudioClip& clip, double frame_ms,
                                              double shift_ms) {
  const auto len = static_cast<std::size_t>(std::lround(frame_ms * clip.sample_rate / 1000.0));
  const auto shift = static_cast<std::size_t>(std::lround(shift_ms * clip.sample_rate / 1000.0));
  MVSPOOF_CHECK(len > 0 && shift > 0, "frame length and shift must be positive");
  MVSPOOF_CHECK(clip.samples.size() >= len,
                "clip of " + std::to_string(clip.samples.size()) +
                    " samples is shorter than one frame (" + std::to_string(len) + ")");
  const std::size_t t = num_frames(clip.samples.size(), len, shift);
  std::vector<std::vector<double>> frames(t);
  for (std::size_t i = 0; i < t; ++i)
    frames[i].assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(i * shift),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(i * shift + len));
  return frames;
}

void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  MVSPOOF_CHECK(n > 0 && (n & (n - 1)) == 0, "fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = x[i + k];
        const auto v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> power_spectrum(const std::vector<double>& frame, int n_fft) {
  MVSPOOF_CHECK(static_cast<int>(frame.size()) <= n_fft, "frame longer than FFT size");
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
  const double l = static_cast<double>(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    // Periodic Hann window.
    const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / l);
    buf[i] = frame[i] * w;
  }
  fft(buf);
  std::vector<double> out(static_cast<std::size_t>(n_fft / 2 + 1));
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf[k]);
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MatrixXd triangular_filterbank(const std::vector<double>& edges, int n_fft,
                               int sample_rate) {
  const int n_filters = static_cast<int>(edges.size()) - 2;
  const int n_bins = n_fft / 2 + 1;
  MatrixXd fb = MatrixXd::Zero(n_filters, n_bins);
  for (int m = 0; m < n_filters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      if (f > lo && f < mid)
        fb(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(m, k) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

std::vector<double> mel_edges(int n_filters, double lo_hz, double hi_hz) {
  const double lo = hz_to_mel(lo_hz), hi = hz_to_mel(hi_hz);
  std::vector<double> e(static_cast<std::size_t>(n_filters + 2));
  for (int i = 0; i < n_filters + 2; ++i)
    e[i] = mel_to_hz(lo + (hi - lo) * i / (n_filters + 1));
  return e;
}

std::vector<double> linear_edges(int n_filters, double lo_hz, double hi_hz) {
  std::vector<double> e(static_cast<std::size_t>(n_filters + 2));
  for (int i = 0; i < n_filters + 2; ++i) e[i] = lo_hz + (hi_hz - lo_hz) * i / (n_filters + 1);
  return e;
}

namespace {

MatrixXd log_filterbank_energies(const AudioClip& clip, const MatrixXd& fb) {
  validate_clip(clip);
  const auto frames = frame_signal(clip, kFrameMs, kShiftMs);
  MatrixXd out(static_cast<Eigen::Index>(frames.size()), fb.rows());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto ps = power_spectrum(frames[t], kFftSize);
    const Eigen::Map<const Eigen::VectorXd> p(ps.data(), static_cast<Eigen::Index>(ps.size()));
    const Eigen::VectorXd e = fb * p;
    out.row(static_cast<Eigen::Index>(t)) = (e.array() + kEnergyFloor).log().transpose();
  }
  return out;
}

const MatrixXd& mel_bank() {
  static const MatrixXd fb =
      triangular_filterbank(mel_edges(kNumMel, 0.0, 8000.0), kFftSize, kSampleRate);
  return fb;
}

const MatrixXd& linear_bank() {
  static const MatrixXd fb =
      triangular_filterbank(linear_edges(kNumLinear, 0.0, 8000.0), kFftSize, kSampleRate);
  return fb;
}

}  // namespace

FrameFeatureSequence log_mel_spectrogram(const AudioClip& clip) {
  FrameFeatureSequence s;
  s.values = log_filterbank_energies(clip, mel_bank());
  s.kind = FeatureKind::kLogMel80;
  s.frame_shift_ms = kShiftMs;
  return s;
}

MatrixXd dct2_matrix(int n_out, int n_in) {
  MatrixXd d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int n = 0; n < n_in; ++n)
      d(k, n) = scale * std::cos(M_PI * k * (2.0 * n + 1.0) / (2.0 * n_in));
  }
  return d;
}

FrameFeatureSequence lfcc(const AudioClip& clip) {
  static const MatrixXd dct = dct2_matrix(kNumLinear, kNumLinear);
  FrameFeatureSequence s;
  const MatrixXd energies = log_filterbank_energies(clip, linear_bank());
  s.values.resize(energies.rows(), kNumLinear);
  // Frame by frame so that identical frames give bit-identical coefficients.
  for (Eigen::Index t = 0; t < energies.rows(); ++t)
    s.values.row(t) = (dct * energies.row(t).transpose()).transpose();
  s.kind = FeatureKind::kEmbedding;
  s.frame_shift_ms = kShiftMs;
  auto out = add_deltas(s);
  out.kind = FeatureKind::kLfcc60;
  return out;
}

FrameFeatureSequence add_deltas(const FrameFeatureSequence& seq) {
  MVSPOOF_CHECK(seq.values.rows() >= 1, "add_deltas needs at least one frame");
  auto diff = [](const MatrixXd& x) {
    const Eigen::Index t = x.rows();
    MatrixXd d(t, x.cols());
    for (Eigen::Index i = 0; i < t; ++i) {
      const Eigen::Index prev = i == 0 ? 0 : i - 1;
      const Eigen::Index next = i + 1 == t ? t - 1 : i + 1;
      d.row(i) = 0.5 * (x.row(next) - x.row(prev));
    }
    return d;
  };
  const MatrixXd d1 = diff(seq.values);
  const MatrixXd d2 = diff(d1);
  FrameFeatureSequence out;
  out.values.resize(seq.values.rows(), 3 * seq.values.cols());
  out.values << seq.values, d1, d2;
  out.kind = FeatureKind::kEmbedding;
  out.frame_shift_ms = seq.frame_shift_ms;
  return out;
}

void write_feature_file(const std::filesystem::path& path, const FrameFeatureSequence& seq) {
  atomic_write(path, [&](std::ostream& os) {
    BinaryWriter w(os);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(seq.kind));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(seq.values.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(seq.values.cols()));
    for (Eigen::Index r = 0; r < seq.values.rows(); ++r)
      for (Eigen::Index c = 0; c < seq.values.cols(); ++c)
        w.put<float>(static_cast<float>(seq.values(r, c)));
  });
}

FrameFeatureSequence read_feature_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open feature file " + path.string());
  BinaryReader r(is, "feature file " + path.string());
  FrameFeatureSequence s;
  const auto kind = r.get<std::uint8_t>();
  MVSPOOF_CHECK(kind <= static_cast<std::uint8_t>(FeatureKind::kEmbedding),
                "unknown feature kind in " + path.string());
  s.kind = static_cast<FeatureKind>(kind);
  const auto t = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  s.values.resize(t, d);
  for (std::uint32_t i = 0; i < t; ++i)
    for (std::uint32_t j = 0; j < d; ++j) s.values(i, j) = r.get<float>();
  return s;
}

}  // namespace mvspoof
