// tests/test_pron.cpp

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
#include <functional>

#include "mvspoof/corpus.hpp"
#include "mvspoof/nn/gradcheck.hpp"
#include "mvspoof/nn/optim.hpp"
#include "mvspoof/pron.hpp"
#include "test_util.hpp"

namespace mvspoof {
namespace {

using nn::Graph;
using Mat = nn::Matrix<double>;
using testing::random_matrix;
using testing::TempDir;

// Sum over every frame labelling whose collapse equals the target.
double ctc_brute_force(const Mat& logits, const std::vector<int>& target) {
  const int t_len = static_cast<int>(logits.rows()), vocab = static_cast<int>(logits.cols());
  Mat logp = logits;
  for (int t = 0; t < t_len; ++t) {
    const double m = logits.row(t).maxCoeff();
    logp.row(t).array() -= m + std::log((logits.row(t).array() - m).exp().sum());
  }
  double total = 0.0;
  std::vector<int> path(static_cast<std::size_t>(t_len), 0);
  std::function<void(int)> walk = [&](int t) {
    if (t == t_len) {
      std::vector<int> out;
      int prev = -1;
      for (int s : path) {
        if (s != prev && s != 0) out.push_back(s);
        prev = s;
      }
      if (out != target) return;
      double lp = 0.0;
      for (int k = 0; k < t_len; ++k) lp += logp(k, path[static_cast<std::size_t>(k)]);
      total += std::exp(lp);
      return;
    }
    for (int s = 0; s < vocab; ++s) {
      path[static_cast<std::size_t>(t)] = s;
      walk(t + 1);
    }
  };
  walk(0);
  return total;
}

void all_targets(int vocab, int max_len, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
  out.push_back(cur);
  if (static_cast<int>(cur.size()) == max_len) return;
  for (int y = 1; y < vocab; ++y) {
    cur.push_back(y);
    all_targets(vocab, max_len, cur, out);
    cur.pop_back();
  }
}

TEST(Ctc, MatchesExhaustiveEnumeration) {
  Rng rng(41);
  int checked = 0, infeasible = 0;
  for (int t_len = 1; t_len <= 5; ++t_len) {
    for (int vocab = 2; vocab <= 4; ++vocab) {
      std::vector<std::vector<int>> targets;
      std::vector<int> cur;
      all_targets(vocab, 3, cur, targets);
      for (const auto& y : targets) {
        const Mat logits = random_matrix(t_len, vocab, rng, 1.5);
        if (nn::ctc_min_frames(y) > static_cast<std::size_t>(t_len)) {
          Graph<double> g(false);
          EXPECT_THROW(nn::ctc_loss(g.constant(logits), y), Error);
          EXPECT_EQ(ctc_brute_force(logits, y), 0.0);
          ++infeasible;
          continue;
        }
        Graph<double> g(false);
        const double loss = nn::ctc_loss(g.constant(logits), y).value()(0, 0);
        const double oracle = -std::log(ctc_brute_force(logits, y));
        EXPECT_NEAR(loss, oracle, 1e-6) << "T=" << t_len << " vocab=" << vocab
                                        << " |y|=" << y.size();
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 175);  // feasible (T, vocab, target) triples
  EXPECT_GT(infeasible, 0);
}

TEST(Ctc, ProbabilitiesOverAllTargetsSumToOne) {
  // Every path collapses to exactly one sequence of length <= T.
  Rng rng(42);
  const Mat logits = random_matrix(3, 3, rng);
  std::vector<std::vector<int>> targets;
  std::vector<int> cur;
  all_targets(3, 3, cur, targets);
  double total = 0.0;
  for (const auto& y : targets) {
    if (nn::ctc_min_frames(y) > 3) continue;
    Graph<double> g(false);
    total += std::exp(-nn::ctc_loss(g.constant(logits), y).value()(0, 0));
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Ctc, GradientsMatchFiniteDifferences) {
  Rng rng(43);
  nn::Parameter<double> w("logits", random_matrix(5, 4, rng));
  const auto e = nn::check_gradients({&w}, [&](Graph<double>& g) {
    return nn::ctc_loss(g.param(w), {1, 3, 3});
  });
  EXPECT_LT(testing::max_relative_error(e), 1e-6);
}

TEST(Recognizer, JointLossWeights) {
  EXPECT_DOUBLE_EQ(joint_loss(2.0, 4.0, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(joint_loss(2.0, 4.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(joint_loss(2.0, 4.0, 0.0), 4.0);
  EXPECT_DOUBLE_EQ(joint_loss(2.0, 4.0, 0.3), 0.3 * 2.0 + 0.7 * 4.0);
  EXPECT_THROW(joint_loss(1.0, 1.0, 1.5), Error);
  EXPECT_THROW(joint_loss(1.0, 1.0, -0.1), Error);
}

TEST(Recognizer, SubsampledLength) {
  EXPECT_EQ(subsampled_length(99), 25);
  EXPECT_EQ(subsampled_length(100), 25);
  EXPECT_EQ(subsampled_length(101), 26);
  EXPECT_EQ(subsampled_length(4), 1);
  EXPECT_EQ(subsampled_length(8), 2);
}

RecognizerConfig tiny_config() {
  RecognizerConfig c;
  c.input_dim = 6;
  c.d_model = 8;
  c.n_conformer_blocks = 1;
  c.n_heads = 2;
  c.conv_kernel = 3;
  c.ff_expansion = 2;
  c.subsample_channels = 2;
  c.vocab = 4;
  c.att_decoder_hidden = 5;
  c.att_embed_dim = 3;
  c.att_dim = 4;
  c.att_loc_filters = 2;
  c.att_loc_kernel = 3;
  return c;
}

TEST(Recognizer, ConfigValidation) {
  EXPECT_NO_THROW(RecognizerConfig().validate());
  auto c = tiny_config();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config();
  c.subsample_factor = 2;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config();
  c.vocab = 1;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config();
  c.conv_kernel = 4;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Recognizer, ShapesOnOneSecond) {
  RecognizerConfig c;
  c.n_conformer_blocks = 1;
  Recognizer<float> model(c, 3);
  Rng rng(3);
  const Mat logmel = random_matrix(99, 80, rng);
  Graph<float> g(false);
  const std::vector<int> y{1, 2, 3};
  const auto out = model.forward(g, logmel.cast<float>(), &y);
  EXPECT_EQ(out.encoder.rows(), 25);
  EXPECT_EQ(out.encoder.cols(), 144);
  EXPECT_EQ(out.ctc_logits.rows(), 25);
  EXPECT_EQ(out.ctc_logits.cols(), 21);
  EXPECT_EQ(out.att_logits.rows(), 4);  // U + 1 with the end symbol
  EXPECT_EQ(out.att_logits.cols(), 21);

  const auto feats = extract_pron_features_from_logmel(logmel, model);
  EXPECT_EQ(feats.values.rows(), 99);
  EXPECT_EQ(feats.values.cols(), 144);
  EXPECT_EQ(feats.kind, FeatureKind::kPron144);
  // Repeated four times per encoder frame, the last group truncated.
  for (Eigen::Index t = 0; t < 99; ++t)
    EXPECT_EQ(feats.values.row(t), out.encoder.value().row(t / 4).cast<double>()) << t;
}

TEST(Recognizer, RejectsInputShorterThanSubsampling) {
  Recognizer<float> model(tiny_config(), 3);
  Graph<float> g(false);
  EXPECT_THROW(model.encode(g, nn::Matrix<float>::Zero(3, 6)), Error);
  EXPECT_THROW(model.encode(g, nn::Matrix<float>::Zero(8, 5)), Error);
}

TEST(Recognizer, JointLossGradientCheck) {
  Recognizer<double> model(tiny_config(), 7);
  Rng rng(7);
  const Mat logmel = random_matrix(8, 6, rng);
  const std::vector<int> y{1, 2};
  const auto params = model.parameters();
  double ctc = 0, att = 0;
  const auto e = nn::check_gradients(params, [&](Graph<double>& g) {
    return model.loss(g, logmel, y, &ctc, &att);
  });
  for (const auto& entry : e) {
    EXPECT_LT(entry.relative_error, 1e-3) << entry.name;
  }
  Graph<double> g(false);
  const double joint = model.loss(g, logmel, y, &ctc, &att).value()(0, 0);
  EXPECT_NEAR(joint, joint_loss(ctc, att, 0.5), 1e-12);
  EXPECT_GT(ctc, 0.0);
  EXPECT_GT(att, 0.0);
}

TEST(Recognizer, AlphaSelectsWhichHeadLearns) {
  Rng rng(8);
  const Mat logmel = random_matrix(12, 6, rng);
  const std::vector<int> y{2, 1, 3};
  for (double alpha : {0.0, 1.0}) {
    auto c = tiny_config();
    c.alpha = alpha;
    Recognizer<double> model(c, 8);
    nn::zero_grad(model.parameters());
    Graph<double> g;
    g.backward(model.loss(g, logmel, y));
    nn::ParamList<double> ctc_head, decoder;
    model.ctc_head.collect(ctc_head);
    model.decoder.collect(decoder);
    double ctc_norm = 0, dec_norm = 0;
    for (auto* p : ctc_head) ctc_norm += p->grad.squaredNorm();
    for (auto* p : decoder) dec_norm += p->grad.squaredNorm();
    if (alpha == 0.0) {
      EXPECT_EQ(ctc_norm, 0.0);
      EXPECT_GT(dec_norm, 0.0);
    } else {
      EXPECT_EQ(dec_norm, 0.0);
      EXPECT_GT(ctc_norm, 0.0);
    }
  }
}

TEST(Recognizer, FrozenNormalizationIsNotTrainable) {
  Recognizer<double> model(tiny_config(), 9);
  for (auto* p : model.parameters()) {
    EXPECT_NE(p, &model.cmvn_mean);
    EXPECT_NE(p, &model.cmvn_inv_std);
  }
  EXPECT_TRUE(model.cmvn_mean.frozen);
  EXPECT_EQ(model.all_parameters().size(), model.parameters().size() + 2);
}

TEST(Conformer, SegmentMaskMakesStackBlockDiagonal) {
  // Two sequences run jointly with a segment map equal the separate runs.
  auto c = tiny_config();
  c.n_conformer_blocks = 2;
  c.conv_kernel = 5;
  Rng rng(10);
  ConformerStack<double> stack("conformer", c, rng);
  const Mat a = random_matrix(5, 8, rng), b = random_matrix(7, 8, rng);
  Mat ab(12, 8);
  ab << a, b;
  std::vector<int> seg(12, 0);
  for (int i = 5; i < 12; ++i) seg[static_cast<std::size_t>(i)] = 1;

  Graph<double> g(false);
  const Mat joint = stack(g, g.constant(ab), seg).value();
  const Mat ya = stack(g, g.constant(a)).value();
  const Mat yb = stack(g, g.constant(b)).value();
  EXPECT_LT((joint.topRows(5) - ya).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((joint.bottomRows(7) - yb).cwiseAbs().maxCoeff(), 1e-5);

  // Without the map the two halves interact.
  const Mat mixed = stack(g, g.constant(ab)).value();
  EXPECT_GT((mixed.topRows(5) - ya).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Conformer, SegmentMaskValues) {
  const auto m = pron_detail::segment_mask<double>({0, 0, 1});
  EXPECT_EQ(m(0, 1), 0.0);
  EXPECT_EQ(m(2, 2), 0.0);
  EXPECT_TRUE(std::isinf(m(0, 2)) && m(0, 2) < 0);
  EXPECT_TRUE(std::isinf(m(2, 1)));
}

TEST(Recognizer, GreedyDecodeAndEditDistance) {
  Mat logits = Mat::Zero(7, 4);
  const int best[] = {0, 2, 2, 0, 2, 3, 3};
  for (int t = 0; t < 7; ++t) logits(t, best[t]) = 5.0;
  EXPECT_EQ(ctc_greedy_decode(logits), (std::vector<int>{2, 2, 3}));
  EXPECT_EQ(edit_distance({1, 2, 3}, {1, 2, 3}), 0u);
  EXPECT_EQ(edit_distance({1, 2, 3}, {1, 3}), 1u);
  EXPECT_EQ(edit_distance({}, {4, 4}), 2u);
  EXPECT_EQ(edit_distance({1, 2}, {2, 1}), 2u);
}

TEST(Recognizer, OverfitsOneUtterance) {
  SynthCorpusConfig sc;
  const auto templates = make_templates(sc.n_pseudo_phonemes, 5);
  const auto u = synthesize_utterance(templates, 0.5, sc, 5);
  const nn::Matrix<float> logmel = log_mel_spectrogram(u.clip).values.cast<float>();

  RecognizerConfig c;
  c.d_model = 32;
  c.n_heads = 4;
  c.n_conformer_blocks = 1;
  c.subsample_channels = 8;
  c.att_decoder_hidden = 32;
  c.att_dim = 32;
  Recognizer<float> model(c, 5);
  const auto params = model.parameters();
  nn::AdamConfig ac;
  ac.lr = 3e-3;
  nn::Adam<float> adam(ac);
  double first = 0, last = 0;
  for (int step = 0; step < 60; ++step) {
    nn::zero_grad(params);
    Graph<float> g;
    const auto l = model.loss(g, logmel, u.template_ids);
    g.backward(l);
    adam.step(params);
    (step == 0 ? first : last) = l.value()(0, 0);
  }
  EXPECT_LT(last, 0.1 * first);
  Graph<float> g(false);
  const auto out = model.forward(g, logmel);
  EXPECT_EQ(ctc_greedy_decode(out.ctc_logits.value().cast<double>()), u.template_ids);
}

TEST(Recognizer, TrainSaveLoadRoundTrip) {
  TempDir dir("pron");
  SynthCorpusConfig sc;
  sc.n_real = 4;
  sc.n_fake = 4;
  sc.seed = 6;
  const auto manifest = generate_synth_corpus(sc, dir / "corpus");

  RecognizerConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_conformer_blocks = 1;
  c.subsample_channels = 4;
  c.att_decoder_hidden = 16;
  c.att_dim = 16;
  RecognizerTrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.val_fraction = 0.25;
  RecognizerReport rep;
  PronModel model = train_recognizer(manifest, c, tc, &rep);
  EXPECT_EQ(rep.train_loss.size(), 2u);
  EXPECT_EQ(rep.val_loss.size(), 2u);
  EXPECT_TRUE(std::isfinite(rep.initial_val_loss));
  EXPECT_GE(rep.val_per, 0.0);
  // Normalization statistics were fitted.
  EXPECT_GT(model.cmvn_mean.value.cwiseAbs().sum(), 0.0f);

  PronModel again = train_recognizer(manifest, c, tc);
  EXPECT_EQ(nn::param_checksum(model.all_parameters()),
            nn::param_checksum(again.all_parameters()));

  save_recognizer(dir / "pron.ckpt", model);
  PronModel loaded = load_recognizer(dir / "pron.ckpt");
  EXPECT_EQ(loaded.config.d_model, 16);
  EXPECT_EQ(nn::param_checksum(model.all_parameters()),
            nn::param_checksum(loaded.all_parameters()));
  const AudioClip clip = read_wav(manifest.records[0].path);
  EXPECT_EQ(extract_pron_features(clip, model).values, extract_pron_features(clip, loaded).values);
  EXPECT_EQ(extract_pron_features(clip, model).kind, FeatureKind::kEmbedding);

  // A transcript outside the vocabulary is rejected.
  c.vocab = 3;
  EXPECT_THROW(train_recognizer(manifest, c, tc), Error);
}

}  // namespace
}  // namespace mvspoof
