// mvspoof/duration.hpp

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

// Discrete unit ("phoneme duration") vectors: frame embeddings quantized by
// k-means into 1-based unit ids, plus run-length analytics.

#ifndef MVSPOOF_DURATION_HPP_
#define MVSPOOF_DURATION_HPP_

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "mvspoof/dsp.hpp"

namespace mvspoof {

inline constexpr int kDefaultVocabulary = 100;

struct Quantizer {
  MatrixXd centroids;  // [K x D]
  std::uint64_t seed = 0;

  int vocabulary() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }

  void save(const std::filesystem::path& path) const;
  static Quantizer load(const std::filesystem::path& path);
};

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-6;  // stop when no centroid moves further than this
};

struct KMeansTrace {
  /// Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss;
  int iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm with seeded k-means++ initialization. Empty clusters are
/// re-seeded at the point farthest from its assigned centroid. Requires at
/// least K distinct rows in `points`.
Quantizer fit_quantizer(const MatrixXd& points, int k, std::uint64_t seed,
                        const KMeansOptions& opts = {}, KMeansTrace* trace = nullptr);

/// Within-cluster sum of squares of `points` under nearest-centroid assignment.
double within_cluster_ss(const MatrixXd& points, const MatrixXd& centroids);

struct DurationVector {
  std::vector<int> ids;  // each in 1..K
};

/// Nearest centroid by Euclidean distance, ties to the lowest index; ids are
/// 1-based.
DurationVector quantize(const FrameFeatureSequence& seq, const Quantizer& q);
int nearest_centroid(const Eigen::Ref<const Eigen::RowVectorXd>& x, const MatrixXd& centroids);

/// Maximal runs as (id, length) pairs.
std::vector<std::pair<int, int>> run_lengths(const DurationVector& dv);

/// Population standard deviation of the run lengths.
double duration_uniformity(const DurationVector& dv);

/// The ids as a [T x 1] feature sequence of kind duration_ids.
FrameFeatureSequence duration_feature(const DurationVector& dv);

}  // namespace mvspoof

#endif  // MVSPOOF_DURATION_HPP_
