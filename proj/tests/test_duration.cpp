// tests/test_duration.cpp

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

#include <gtest/gtest.h>

#include <cmath>

#include "mvspoof/duration.hpp"
#include "mvspoof/frame_encoders.hpp"
#include "test_util.hpp"

namespace mvspoof {
namespace {

using testing::random_matrix;

DurationVector ids(std::vector<int> v) { return DurationVector{std::move(v)}; }

TEST(KMeans, SeparatedClusters) {
  MatrixXd pts(20, 2);
  for (int i = 0; i < 10; ++i) pts.row(i) << 0, 0;
  for (int i = 10; i < 20; ++i) pts.row(i) << 10, 10;
  const Quantizer q = fit_quantizer(pts, 2, 3);
  const double a = q.centroids.row(0).sum(), b = q.centroids.row(1).sum();
  EXPECT_DOUBLE_EQ(std::min(a, b), 0.0);
  EXPECT_DOUBLE_EQ(std::max(a, b), 20.0);
}

TEST(KMeans, DeterministicPerSeed) {
  Rng rng(1);
  const MatrixXd pts = random_matrix(200, 3, rng);
  const Quantizer a = fit_quantizer(pts, 8, 5), b = fit_quantizer(pts, 8, 5);
  EXPECT_TRUE((a.centroids.array() == b.centroids.array()).all());
}

TEST(KMeans, BeatsRandomAssignments) {
  Rng rng(2);
  const MatrixXd pts = random_matrix(30, 2, rng);
  const Quantizer q = fit_quantizer(pts, 3, 4);
  const double fitted = within_cluster_ss(pts, q.centroids);
  double best_random = 1e300;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> assign(30);
    for (auto& a : assign) a = static_cast<int>(rng.uniform_int(0, 2));
    MatrixXd c = MatrixXd::Zero(3, 2);
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    for (int i = 0; i < 30; ++i) {
      c.row(assign[i]) += pts.row(i);
      n(assign[i]) += 1;
    }
    double wcss = 0;
    for (int i = 0; i < 30; ++i)
      if (n(assign[i]) > 0) wcss += (pts.row(i) - c.row(assign[i]) / n(assign[i])).squaredNorm();
    best_random = std::min(best_random, wcss);
  }
  EXPECT_LE(fitted, best_random);
}

TEST(KMeans, WcssNonIncreasing) {
  Rng rng(3);
  const MatrixXd pts = random_matrix(500, 4, rng);
  KMeansTrace trace;
  fit_quantizer(pts, 10, 6, {}, &trace);
  ASSERT_GE(trace.wcss.size(), 2u);
  for (std::size_t i = 1; i < trace.wcss.size(); ++i)
    EXPECT_LE(trace.wcss[i], trace.wcss[i - 1] * (1 + 1e-12)) << "iteration " << i;
}

TEST(KMeans, NeedsKDistinctPoints) {
  MatrixXd pts(5, 2);
  pts.setOnes();
  pts.row(4) << 2, 2;
  EXPECT_THROW(fit_quantizer(pts, 3, 1), Error);
  EXPECT_NO_THROW(fit_quantizer(pts, 2, 1));
}

TEST(KMeans, CentroidsAreDistinct) {
  Rng rng(4);
  const MatrixXd pts = random_matrix(300, 2, rng);
  const Quantizer q = fit_quantizer(pts, 25, 9);
  for (int i = 0; i < 25; ++i)
    for (int j = i + 1; j < 25; ++j) EXPECT_GT((q.centroids.row(i) - q.centroids.row(j)).norm(), 0.0);
}

TEST(Quantize, ExactCentroidAndTieBreak) {
  Quantizer q;
  q.centroids.resize(7, 2);
  for (int i = 0; i < 7; ++i) q.centroids.row(i) << i, 0.0;
  FrameFeatureSequence s;
  s.values.resize(2, 2);
  s.values.row(0) << 6, 0;    // centroid 7
  s.values.row(1) << 1.5, 0;  // halfway between 2 and 3
  EXPECT_EQ(quantize(s, q).ids, (std::vector<int>{7, 2}));
}

TEST(Quantize, MatchesExhaustiveScan) {
  Rng rng(5);
  Quantizer q;
  q.centroids = random_matrix(12, 3, rng);
  FrameFeatureSequence s;
  s.values = random_matrix(10, 3, rng);
  const auto dv = quantize(s, q);
  for (int t = 0; t < 10; ++t) {
    int best = 0;
    for (int k = 1; k < 12; ++k)
      if ((s.values.row(t) - q.centroids.row(k)).norm() < (s.values.row(t) - q.centroids.row(best)).norm())
        best = k;
    EXPECT_EQ(dv.ids[t], best + 1);
  }
}

TEST(Quantize, CentroidsMapToThemselves) {
  Rng rng(6);
  const MatrixXd pts = random_matrix(100, 3, rng);
  const Quantizer q = fit_quantizer(pts, 10, 2);
  FrameFeatureSequence s;
  s.values = q.centroids;
  const auto dv = quantize(s, q);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(dv.ids[k], k + 1);
}

TEST(Quantize, DimensionMismatch) {
  Quantizer q;
  q.centroids = MatrixXd::Zero(3, 4);
  FrameFeatureSequence s;
  s.values = MatrixXd::Zero(2, 5);
  EXPECT_THROW(quantize(s, q), Error);
}

TEST(Quantizer, SaveLoadRoundTrip) {
  testing::TempDir dir("q");
  Rng rng(7);
  Quantizer q;
  q.centroids = random_matrix(5, 3, rng).cast<float>().cast<double>();
  q.seed = 99;
  q.save(dir / "q.bin");
  EXPECT_EQ(std::filesystem::file_size(dir / "q.bin"), 16u + 5 * 3 * 4);
  const Quantizer back = Quantizer::load(dir / "q.bin");
  EXPECT_EQ(back.seed, 99u);
  EXPECT_TRUE((back.centroids.array() == q.centroids.array()).all());
}

TEST(RunLengths, HandExample) {
  using P = std::pair<int, int>;
  EXPECT_EQ(run_lengths(ids({1, 1, 3, 3, 3, 4})), (std::vector<P>{{1, 2}, {3, 3}, {4, 1}}));
  EXPECT_EQ(run_lengths(ids({5})), (std::vector<P>{{5, 1}}));
  EXPECT_EQ(run_lengths(ids({2, 2, 2, 2})), (std::vector<P>{{2, 4}}));
  EXPECT_THROW(run_lengths(ids({})), Error);
}

TEST(RunLengths, ExpansionRoundTrip) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> v(static_cast<std::size_t>(rng.uniform_int(1, 40)));
    for (auto& x : v) x = static_cast<int>(rng.uniform_int(1, 3));
    std::vector<int> back;
    for (const auto& [id, len] : run_lengths(ids(v))) back.insert(back.end(), len, id);
    EXPECT_EQ(back, v);
  }
}

TEST(Uniformity, HandValues) {
  EXPECT_NEAR(duration_uniformity(ids({1, 1, 3, 3, 3, 4})), std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_EQ(duration_uniformity(ids({2, 2, 4, 4})), 0.0);
  EXPECT_EQ(duration_uniformity(ids({9, 9, 9})), 0.0);
  EXPECT_THROW(duration_uniformity(ids({})), Error);
}

}  // namespace
}  // namespace mvspoof
