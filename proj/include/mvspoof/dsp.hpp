// mvspoof/dsp.hpp

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

#ifndef MVSPOOF_DSP_HPP_
#define MVSPOOF_DSP_HPP_

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvspoof/corpus.hpp"

namespace mvspoof {

using MatrixXd = Eigen::MatrixXd;

enum class FeatureKind : std::uint8_t {
  kLogMel80 = 0,
  kLfcc60 = 1,
  kSsl1024 = 2,
  kSslProj128 = 3,
  kPron144 = 4,
  kDurationIds = 5,
  /// Encoder output of configurable width (e.g. the HuBERT stand-in).
  kEmbedding = 6,
};

const char* feature_kind_name(FeatureKind k);
/// Expected column count, or 0 when the kind has no fixed width.
int feature_kind_dim(FeatureKind k);

/// [T x D] per-frame features on a fixed frame grid.
struct FrameFeatureSequence {
  MatrixXd values;
  FeatureKind kind = FeatureKind::kEmbedding;
  double frame_shift_ms = 10.0;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
  /// Throws on an empty sequence, width mismatch, or non-finite value.
  void validate() const;
};

inline constexpr double kFrameMs = 20.0;
inline constexpr double kShiftMs = 10.0;
inline constexpr int kFftSize = 512;
inline constexpr int kNumMel = 80;
inline constexpr int kNumLinear = 20;
inline constexpr double kEnergyFloor = 1e-10;

/// Number of frames: floor((N - L) / S) + 1, tail remainder dropped.
std::size_t num_frames(std::size_t n_samples, std::size_t frame_len, std::size_t shift);

/// Splits the clip into overlapping frames; no padding.
std::vector<std::vector<double>> frame_signal(const AudioClip& clip, double frame_ms,
                                              double shift_ms);

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& x);

/// Power spectrum |X_k|^2 for k = 0..n_fft/2 of a Hann-windowed,
/// zero-padded frame.
std::vector<double> power_spectrum(const std::vector<double>& frame, int n_fft);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filterbank as a [n_filters x (n_fft/2+1)] matrix. `edges` holds
/// n_filters + 2 corner frequencies in Hz; filters are evaluated at the exact
/// bin frequencies.
MatrixXd triangular_filterbank(const std::vector<double>& edges, int n_fft,
                               int sample_rate);
/// Corner frequencies for 80 mel filters over 0-8000 Hz.
std::vector<double> mel_edges(int n_filters, double lo_hz, double hi_hz);
/// Corner frequencies for linearly spaced filters.
std::vector<double> linear_edges(int n_filters, double lo_hz, double hi_hz);

/// [T x 80] natural-log mel filterbank energies.
FrameFeatureSequence log_mel_spectrogram(const AudioClip& clip);

/// Orthonormal DCT-II matrix [n_out x n_in].
MatrixXd dct2_matrix(int n_out, int n_in);

/// 20 static LFCCs plus delta and delta-delta: [T x 60].
FrameFeatureSequence lfcc(const AudioClip& clip);

/// Appends delta and delta-delta blocks using the (x[t+1]-x[t-1])/2 stencil
/// with edge replication. Output width is 3x the input.
FrameFeatureSequence add_deltas(const FrameFeatureSequence& seq);

/// Feature cache record: u8 kind, u32 T, u32 D, then T*D float32 row-major.
void write_feature_file(const std::filesystem::path& path, const FrameFeatureSequence& seq);
FrameFeatureSequence read_feature_file(const std::filesystem::path& path);

}  // namespace mvspoof

#endif  // MVSPOOF_DSP_HPP_
