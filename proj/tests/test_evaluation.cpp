// tests/test_evaluation.cpp

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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mvspoof/evaluation.hpp"
#include "test_util.hpp"

namespace mvspoof {
namespace {

using testing::TempDir;

// Independent oracle: FAR/FRR evaluated by direct counting at every midpoint
// between consecutive distinct scores (plus one point below and one above
// all of them), then linear interpolation at the first sign change.
double midpoint_oracle(const std::vector<double>& b, const std::vector<double>& s) {
  std::vector<double> all(b);
  all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> probes{all.front() - 1.0};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) probes.push_back(0.5 * (all[i] + all[i + 1]));
  probes.push_back(all.back() + 1.0);
  double prev_frr = 0, prev_far = 0;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    double frr = 0, far = 0;
    for (double x : b) frr += x < probes[k] ? 1 : 0;
    for (double x : s) far += x >= probes[k] ? 1 : 0;
    frr /= b.size();
    far /= s.size();
    if (k > 0 && far - frr <= 0) {
      if (far == frr) return 100 * frr;
      const double d0 = prev_far - prev_frr, d1 = far - frr;
      return 100 * (prev_frr + d0 / (d0 - d1) * (frr - prev_frr));
    }
    prev_frr = frr;
    prev_far = far;
  }
  return -1;
}

TEST(ComputeEer, HandExample) {
  const EerResult r = compute_eer({0.9, 0.8, 0.3}, {0.7, 0.2, 0.1});
  EXPECT_NEAR(r.eer, 100.0 / 3.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.threshold, 0.7);
}

TEST(ComputeEer, SeparatedScoresGiveZero) {
  EXPECT_EQ(compute_eer({3, 4, 5}, {0, 1, 2}).eer, 0.0);
  EXPECT_EQ(compute_eer({1}, {0}).eer, 0.0);
}

TEST(ComputeEer, ReversedScoresGiveHundred) {
  EXPECT_NEAR(compute_eer({0, 1}, {2, 3}).eer, 100.0, 1e-12);
}

TEST(ComputeEer, InterpolatesBetweenSweepPoints) {
  // t=0: FRR 0 FAR 1; t=1: FRR 0 FAR 1/2; t=2: FRR 1/2 FAR 0 -> cross at 1/4.
  const EerResult r = compute_eer({2, 3}, {0, 1});
  EXPECT_EQ(r.eer, 0.0);
  const EerResult q = compute_eer({1, 3}, {0, 2});
  // t=1: FRR 0, FAR 1/2; t=2: FRR 1/2, FAR 1/2 -> exact crossing at 2.
  EXPECT_NEAR(q.eer, 50.0, 1e-12);
  EXPECT_EQ(q.threshold, 2.0);
  const EerResult u = compute_eer({1, 2, 3}, {0, 1.5});
  // t=1.5: FRR 1/3 FAR 1/2; t=2: FRR 1/3 FAR 0 -> a = (1/6)/(1/2) = 1/3.
  EXPECT_NEAR(u.eer, 100.0 / 3.0, 1e-12);
  EXPECT_NEAR(u.threshold, 1.5 + 0.5 / 3.0, 1e-12);
}

TEST(ComputeEer, SingleClassIsAnError) {
  EXPECT_THROW(compute_eer({1, 2}, {}), Error);
  EXPECT_THROW(compute_eer({}, {1}), Error);
  std::vector<TrialScore> only{{"a", 1.0, Label::kSpoof}};
  EXPECT_THROW(compute_eer(only), Error);
}

TEST(ComputeEer, MatchesMidpointOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int nb = static_cast<int>(rng.uniform_int(1, 6)), ns = static_cast<int>(rng.uniform_int(1, 6));
    std::vector<double> b, s;
    // Coarse values produce plenty of ties.
    for (int i = 0; i < nb; ++i) b.push_back(static_cast<double>(rng.uniform_int(0, 8)) / 4);
    for (int i = 0; i < ns; ++i) s.push_back(static_cast<double>(rng.uniform_int(0, 8)) / 4);
    ASSERT_NEAR(compute_eer(b, s).eer, midpoint_oracle(b, s), 1e-9) << "trial " << trial;
  }
}

TEST(ComputeEer, InvariantUnderMonotoneTransform) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> b, s, tb, ts;
    for (int i = 0; i < 6; ++i) b.push_back(rng.normal());
    for (int i = 0; i < 6; ++i) s.push_back(rng.normal() - 0.5);
    auto f = [](double x) { return std::exp(2 * x) + x * x * x; };
    for (double x : b) tb.push_back(f(x));
    for (double x : s) ts.push_back(f(x));
    const EerResult r = compute_eer(b, s), q = compute_eer(tb, ts);
    ASSERT_NEAR(r.eer, q.eer, 1e-9);
    // The threshold moves with the transform: it stays inside the image of
    // the bracketing sweep interval.
    std::vector<double> all(b);
    all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    auto hi = std::lower_bound(all.begin(), all.end(), r.threshold);
    const double upper = hi == all.end() ? all.back() : *hi;
    const double lower = hi == all.begin() ? *hi : (*hi == r.threshold ? *hi : *(hi - 1));
    EXPECT_GE(q.threshold, f(lower) - 1e-12);
    EXPECT_LE(q.threshold, f(upper) + 1e-12);
  }
}

TEST(ComputeEer, LabelSwapWithNegationPreservesEer) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> b, s, nb, ns;
    for (int i = 0; i < 7; ++i) b.push_back(rng.normal() + 0.3);
    for (int i = 0; i < 5; ++i) s.push_back(rng.normal());
    for (double x : b) nb.push_back(-x);
    for (double x : s) ns.push_back(-x);
    ASSERT_NEAR(compute_eer(b, s).eer, compute_eer(ns, nb).eer, 1e-9);
  }
}

TEST(ComputeEer, ShuffledLabelsGiveChance) {
  Rng rng(14);
  std::vector<double> scores(10000);
  for (auto& x : scores) x = rng.normal();
  std::vector<int> labels(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  rng.shuffle(labels.begin(), labels.end());
  std::vector<double> b, s;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? s : b).push_back(scores[i]);
  EXPECT_NEAR(compute_eer(b, s).eer, 50.0, 2.0);
}

TEST(FormatEer, RoundsHalfToEven) {
  EXPECT_EQ(format_eer(1.576999), "1.58");
  EXPECT_EQ(format_eer(1.125), "1.12");  // exactly representable tie
  EXPECT_EQ(format_eer(1.375), "1.38");
  EXPECT_EQ(format_eer(0.0), "0.00");
  EXPECT_EQ(format_eer(33.333333), "33.33");
}

EvalRow make_row(const std::string& ds, double eer) {
  EvalRow r;
  r.dataset = ds;
  r.views = "duration+pron+w2v";
  r.mode = "attention";
  r.eer = eer;
  r.n_bonafide = 10;
  r.n_spoof = 12;
  r.threshold = 0.25;
  return r;
}

TEST(RenderReport, OneRowGivesHeaderAndOneLine) {
  EvalReport rep;
  rep.rows.push_back(make_row("IN", 1.576999));
  const std::string table = render_table(rep);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  EXPECT_NE(table.find("1.58"), std::string::npos);
  EXPECT_NE(table.find("EER(%)"), std::string::npos);
}

TEST(RenderReport, ColumnsAreAligned) {
  EvalReport rep;
  rep.rows.push_back(make_row("IN", 1.5));
  rep.rows.push_back(make_row("OUT_OF_DOMAIN", 12.25));
  std::istringstream is(render_table(rep));
  std::string line;
  std::vector<std::size_t> pos;
  while (std::getline(is, line)) pos.push_back(line.find("attention") != std::string::npos
                                                   ? line.find("attention")
                                                   : line.find("mode"));
  ASSERT_EQ(pos.size(), 3u);
  EXPECT_EQ(pos[0], pos[1]);
  EXPECT_EQ(pos[1], pos[2]);
}

TEST(RenderReport, EmptyIsAnError) {
  EXPECT_THROW(render_report(EvalReport{}), Error);
}

TEST(RenderReport, KeyValuesRoundTrip) {
  EvalReport rep;
  rep.checkpoint = "best.ckpt";
  rep.seeds = {1, 2};
  rep.rows.push_back(make_row("IN", 3.141592653589793));
  rep.rows.push_back(make_row("OOD", 17.5));
  const EvalReport back = parse_report(render_report(rep));
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].eer, rep.rows[0].eer);
  EXPECT_EQ(back.rows[1].dataset, "OOD");
  EXPECT_EQ(back.rows[1].n_spoof, 12);
  EXPECT_EQ(back.rows[0].threshold, 0.25);
  EXPECT_EQ(back.seeds, rep.seeds);
  EXPECT_EQ(back.checkpoint, "best.ckpt");
}

TEST(AverageReports, AveragesEersPerRowKey) {
  EvalReport a, b;
  a.seeds = {1};
  b.seeds = {2};
  a.rows = {make_row("IN", 2.0), make_row("OOD", 10.0)};
  b.rows = {make_row("IN", 4.0), make_row("OOD", 20.0)};
  const EvalReport m = average_reports({a, b});
  ASSERT_EQ(m.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(m.rows[0].eer, 3.0);
  EXPECT_DOUBLE_EQ(m.rows[1].eer, 15.0);
  EXPECT_EQ(m.rows[0].n_runs, 2);
  EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{1, 2}));
  // Averaging an already averaged report weights it by its run count.
  EvalReport c;
  c.rows = {make_row("IN", 9.0)};
  EXPECT_DOUBLE_EQ(average_reports({m, c}).rows[0].eer, 5.0);
}

TEST(AverageReports, RejectsMismatchedCounts) {
  EvalReport a, b;
  a.rows = {make_row("IN", 2.0)};
  b.rows = {make_row("IN", 4.0)};
  b.rows[0].n_spoof = 3;
  EXPECT_THROW(average_reports({a, b}), Error);
}

TEST(ScoreFile, RoundTripsAtFullPrecision) {
  TempDir dir("scores");
  std::vector<TrialScore> s{{"a/b.wav", 0.1234567890123456789, Label::kBonafide},
                            {"c.wav", -1e-300, Label::kSpoof}};
  write_score_file(dir.path() / "x.scores", s);
  const auto back = read_score_file(dir.path() / "x.scores");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].score, s[0].score);
  EXPECT_EQ(back[1].score, s[1].score);
  EXPECT_EQ(back[1].label, Label::kSpoof);
  EXPECT_EQ(back[0].path, s[0].path);
}

TEST(ScoreFile, RejectsMalformedLines) {
  TempDir dir("scores");
  {
    std::ofstream os(dir.path() / "bad.scores");
    os << "a.wav\tzero\tbonafide\n";
  }
  EXPECT_THROW(read_score_file(dir.path() / "bad.scores"), Error);
}

}  // namespace
}  // namespace mvspoof
