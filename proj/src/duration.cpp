// src/duration.cpp

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

#include "mvspoof/duration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "mvspoof/util.hpp"

namespace mvspoof {

namespace {

std::size_t count_distinct_rows(const MatrixXd& points, std::size_t stop_at) {
  std::set<std::vector<double>> seen;
  std::vector<double> row(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) row[static_cast<std::size_t>(c)] = points(r, c);
    seen.insert(row);
    if (seen.size() >= stop_at) break;
  }
  return seen.size();
}

// Squared distances [N x K] via |x|^2 - 2 x.c + |c|^2, clamped at zero.
MatrixXd squared_distances(const MatrixXd& points, const MatrixXd& centroids) {
  const Eigen::VectorXd pn = points.rowwise().squaredNorm();
  const Eigen::RowVectorXd cn = centroids.rowwise().squaredNorm().transpose();
  MatrixXd d = -2.0 * points * centroids.transpose();
  d.colwise() += pn;
  d.rowwise() += cn;
  return d.cwiseMax(0.0);
}

}  // namespace

double within_cluster_ss(const MatrixXd& points, const MatrixXd& centroids) {
  double s = 0;
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    const int k = nearest_centroid(points.row(r), centroids);
    s += (points.row(r) - centroids.row(k)).squaredNorm();
  }
  return s;
}

Quantizer fit_quantizer(const MatrixXd& points, int k, std::uint64_t seed,
                        const KMeansOptions& opts, KMeansTrace* trace) {
  MVSPOOF_CHECK(k >= 1, "k-means needs K >= 1");
  MVSPOOF_CHECK(points.allFinite(), "k-means input contains non-finite values");
  const auto n = points.rows();
  MVSPOOF_CHECK(count_distinct_rows(points, static_cast<std::size_t>(k)) >=
                    static_cast<std::size_t>(k),
                "k-means needs at least K=" + std::to_string(k) + " distinct points");

  Rng rng(derive_seed(seed, 301));
  MatrixXd c(k, points.cols());

  // k-means++ seeding.
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  c.row(0) = points.row(rng.uniform_int(0, n - 1));
  for (int j = 1; j < k; ++j) {
    best = best.cwiseMin((points.rowwise() - c.row(j - 1)).rowwise().squaredNorm());
    const double total = best.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      const double u = rng.uniform() * total;
      double acc = 0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best(i);
        if (acc > u && best(i) > 0) {
          pick = i;
          break;
        }
      }
      while (best(pick) <= 0 && pick > 0) --pick;
    }
    c.row(j) = points.row(pick);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd dist(n);
  KMeansTrace local;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const MatrixXd d = squared_distances(points, c);
    double wcss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      d.row(i).minCoeff(&arg);  // first minimum wins ties
      assign[static_cast<std::size_t>(i)] = static_cast<int>(arg);
      dist(i) = (points.row(i) - c.row(arg)).squaredNorm();
      wcss += dist(i);
    }
    local.wcss.push_back(wcss);

    MatrixXd next = MatrixXd::Zero(k, points.cols());
    std::vector<Eigen::Index> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
      ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int j = 0; j < k; ++j) {
      if (count[static_cast<std::size_t>(j)] > 0) {
        next.row(j) /= static_cast<double>(count[static_cast<std::size_t>(j)]);
      } else {
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        next.row(j) = points.row(far);
        dist(far) = 0;
      }
    }
    const double moved = (next - c).rowwise().norm().maxCoeff();
    c = std::move(next);
    local.iterations = it + 1;
    if (moved < opts.tolerance) {
      local.converged = true;
      break;
    }
  }
  if (trace != nullptr) *trace = std::move(local);
  Quantizer q;
  q.centroids = std::move(c);
  q.seed = seed;
  return q;
}

int nearest_centroid(const Eigen::Ref<const Eigen::RowVectorXd>& x, const MatrixXd& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
    const double d = (x - centroids.row(k)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

DurationVector quantize(const FrameFeatureSequence& seq, const Quantizer& q) {
  MVSPOOF_CHECK(seq.values.cols() == q.dim(),
                "quantize: feature width " + std::to_string(seq.values.cols()) +
                    " != quantizer width " + std::to_string(q.dim()));
  DurationVector dv;
  dv.ids.resize(static_cast<std::size_t>(seq.values.rows()));
  for (Eigen::Index t = 0; t < seq.values.rows(); ++t)
    dv.ids[static_cast<std::size_t>(t)] = nearest_centroid(seq.values.row(t), q.centroids) + 1;
  return dv;
}

std::vector<std::pair<int, int>> run_lengths(const DurationVector& dv) {
  MVSPOOF_CHECK(!dv.ids.empty(), "run_lengths of an empty duration vector");
  std::vector<std::pair<int, int>> runs;
  for (int id : dv.ids) {
    if (!runs.empty() && runs.back().first == id)
      ++runs.back().second;
    else
      runs.emplace_back(id, 1);
  }
  return runs;
}

double duration_uniformity(const DurationVector& dv) {
  const auto runs = run_lengths(dv);
  double mean = 0;
  for (const auto& r : runs) mean += r.second;
  mean /= static_cast<double>(runs.size());
  double var = 0;
  for (const auto& r : runs) var += (r.second - mean) * (r.second - mean);
  return std::sqrt(var / static_cast<double>(runs.size()));
}

FrameFeatureSequence duration_feature(const DurationVector& dv) {
  FrameFeatureSequence s;
  s.values.resize(static_cast<Eigen::Index>(dv.ids.size()), 1);
  for (std::size_t i = 0; i < dv.ids.size(); ++i) s.values(static_cast<Eigen::Index>(i), 0) = dv.ids[i];
  s.kind = FeatureKind::kDurationIds;
  return s;
}

void Quantizer::save(const std::filesystem::path& path) const {
  atomic_write(path, [&](std::ostream& os) {
    BinaryWriter w(os);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(centroids.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(centroids.cols()));
    w.put<std::uint64_t>(seed);
    for (Eigen::Index r = 0; r < centroids.rows(); ++r)
      for (Eigen::Index c = 0; c < centroids.cols(); ++c)
        w.put<float>(static_cast<float>(centroids(r, c)));
  });
}

Quantizer Quantizer::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open quantizer " + path.string());
  BinaryReader r(is, "quantizer " + path.string());
  Quantizer q;
  const auto k = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  MVSPOOF_CHECK(k > 0 && d > 0, "empty quantizer " + path.string());
  q.seed = r.get<std::uint64_t>();
  q.centroids.resize(k, d);
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; j < d; ++j) q.centroids(i, j) = r.get<float>();
  return q;
}

}  // namespace mvspoof
