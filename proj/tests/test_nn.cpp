// tests/test_nn.cpp

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
#include <sstream>

#include "mvspoof/nn/gradcheck.hpp"
#include "mvspoof/nn/layers.hpp"
#include "mvspoof/nn/ops.hpp"
#include "mvspoof/nn/optim.hpp"
#include "test_util.hpp"

namespace mvspoof {
namespace {

using nn::Graph;
using nn::Parameter;
using nn::Var;
using Mat = nn::Matrix<double>;
using testing::random_matrix;

// Projects an op's output onto a fixed random matrix so that every output
// element contributes to the scalar loss with a distinct weight.
struct OpCheck {
  Rng rng{11};
  std::vector<std::unique_ptr<Parameter<double>>> inputs;

  Parameter<double>& input(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    inputs.push_back(std::make_unique<Parameter<double>>(
        "x" + std::to_string(inputs.size()), random_matrix(r, c, rng, scale)));
    return *inputs.back();
  }

  double run(const std::function<Var<double>(Graph<double>&)>& op) {
    nn::ParamList<double> params;
    for (auto& p : inputs) params.push_back(p.get());
    Mat weights;
    {
      Graph<double> g(false);
      const Mat& v = op(g).value();
      weights = random_matrix(v.rows(), v.cols(), rng);
    }
    auto entries = nn::check_gradients(params, [&](Graph<double>& g) {
      return nn::sum_all(nn::mul(op(g), g.constant(weights)));
    });
    return testing::max_relative_error(entries);
  }
};

TEST(NnOps, MatmulFamilyGradients) {
  OpCheck c;
  auto& a = c.input(3, 4);
  auto& b = c.input(4, 2);
  auto& d = c.input(5, 4);
  auto& bias = c.input(1, 2);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::matmul(g.param(a), g.param(b)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::matmul_nt(g.param(a), g.param(d), 0.5); }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::transpose(g.param(a)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) {
              return nn::affine(g.param(a), g.param(b), g.param(bias));
            }),
            1e-6);
}

TEST(NnOps, ElementwiseGradients) {
  OpCheck c;
  auto& a = c.input(3, 4);
  auto& b = c.input(3, 4);
  auto& row = c.input(1, 4);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::add(g.param(a), g.param(b)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::sub(g.param(a), g.param(b)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::mul(g.param(a), g.param(b)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::scale(g.param(a), 1.7); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::add_row(g.param(a), g.param(row)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::sigmoid(g.param(a)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::tanh(g.param(a)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::silu(g.param(a)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::glu(g.param(a)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::relu(g.param(a)); }), 1e-5);
}

TEST(NnOps, NormalizationGradients) {
  OpCheck c;
  auto& a = c.input(3, 5);
  auto& gamma = c.input(1, 5);
  auto& beta = c.input(1, 5);
  Mat mask = Mat::Zero(3, 5);
  mask(0, 2) = -1e9;
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::softmax_rows(g.param(a)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::softmax_rows(g.param(a), &mask); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::log_softmax_rows(g.param(a)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) {
              return nn::layer_norm(g.param(a), g.param(gamma), g.param(beta));
            }),
            1e-6);
}

TEST(NnOps, ShapeOpGradients) {
  OpCheck c;
  auto& a = c.input(4, 3);
  auto& b = c.input(4, 2);
  auto& d = c.input(2, 3);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::concat_cols<double>({g.param(a), g.param(b)}); }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::concat_rows<double>({g.param(a), g.param(d)}); }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::slice_cols(g.param(a), 1, 2); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::slice_rows(g.param(a), 1, 2); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::gather_rows(g.param(a), {3, 0, 3, 1}); }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::reshape(g.param(a), 2, 6); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::mean_rows(g.param(a)); }), 1e-6);
}

TEST(NnOps, ConvolutionGradients) {
  OpCheck c;
  auto& x = c.input(2, 5 * 4);
  auto& w = c.input(4, 2 * 3 * 3, 0.5);
  auto& b = c.input(4, 1);
  EXPECT_LT(c.run([&](Graph<double>& g) {
              return nn::conv2d(g.param(x), 5, 4, g.param(w), g.param(b), 3, 3, 1, 1);
            }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) {
              return nn::conv2d(g.param(x), 5, 4, g.param(w), g.param(b), 3, 3, 2, 1);
            }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::max_feature_map(g.param(x)); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::max_pool2(g.param(x), 5, 4); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::map_to_sequence(g.param(x), 5, 4); }), 1e-6);

  auto& seq = c.input(7, 3);
  auto& dw = c.input(5, 3);
  auto& db = c.input(1, 3);
  EXPECT_LT(c.run([&](Graph<double>& g) {
              return nn::depthwise_conv1d(g.param(seq), g.param(dw), g.param(db));
            }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) {
              return nn::depthwise_conv1d(g.param(seq), g.param(dw), g.param(db),
                                          {0, 0, 0, 1, 1, 1, 1});
            }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::unfold_time(g.param(seq), 3, 1); }), 1e-6);

  auto& bd = c.input(4, 7);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::rel_shift(g.param(bd)); }), 1e-6);
}

TEST(NnOps, RecurrentAndLossGradients) {
  OpCheck c;
  auto& pre = c.input(1, 12);
  auto& cprev = c.input(1, 3);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::lstm_cell(g.param(pre), g.param(cprev)); }),
            1e-6);
  auto& logits = c.input(5, 4);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::cross_entropy(g.param(logits), {0, 3, 1, 1, 2}); }),
            1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::ctc_loss(g.param(logits), {1, 2, 2}); }), 1e-6);
  EXPECT_LT(c.run([&](Graph<double>& g) { return nn::ctc_loss(g.param(logits), {}); }), 1e-6);
}

TEST(NnOps, ConvMatchesDirectSum) {
  Rng rng(3);
  const Mat x = random_matrix(2, 6 * 5, rng);
  const Mat w = random_matrix(3, 2 * 3 * 3, rng);
  Graph<double> g(false);
  const Mat y = nn::conv2d(g.constant(x), 6, 5, g.constant(w), Var<double>(), 3, 3, 1, 1).value();
  for (int o = 0; o < 3; ++o)
    for (int h = 0; h < 6; ++h)
      for (int ww = 0; ww < 5; ++ww) {
        double s = 0;
        for (int ci = 0; ci < 2; ++ci)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const int ih = h + i - 1, iw = ww + j - 1;
              if (ih < 0 || ih >= 6 || iw < 0 || iw >= 5) continue;
              s += w(o, (ci * 3 + i) * 3 + j) * x(ci, ih + 6 * iw);
            }
        EXPECT_NEAR(y(o, h + 6 * ww), s, 1e-12);
      }
}

TEST(NnOps, MaxFeatureMapOfEqualPairIsExact) {
  Graph<double> g(false);
  Mat x(2, 3);
  x << 0.25, -1.5, 3.0, 0.25, -1.5, 3.0;
  const Mat y = nn::max_feature_map(g.constant(x)).value();
  EXPECT_EQ(y(0, 0), 0.25);
  EXPECT_EQ(y(0, 1), -1.5);
  EXPECT_EQ(y(0, 2), 3.0);
}

TEST(NnOps, CrossEntropyHandValues) {
  Graph<double> g(false);
  Mat z = Mat::Zero(1, 2);
  EXPECT_NEAR(nn::cross_entropy(g.constant(z), {1}).value()(0, 0), std::log(2.0), 1e-15);
  z << 20.0, 0.0;
  EXPECT_LT(nn::cross_entropy(g.constant(z), {0}).value()(0, 0), 1e-8);
}

TEST(NnOps, CtcSingleFrameUniform) {
  Graph<double> g(false);
  const Mat z = Mat::Zero(1, 2);
  EXPECT_NEAR(nn::ctc_loss(g.constant(z), {1}).value()(0, 0), -std::log(0.5), 1e-12);
}

TEST(NnOps, CtcEmptyTargetIsAllBlank) {
  Rng rng(5);
  const Mat z = random_matrix(4, 3, rng);
  Graph<double> g(false);
  double expect = 0;
  for (int t = 0; t < 4; ++t) {
    const double lse = std::log(z.row(t).array().exp().sum());
    expect += -(z(t, 0) - lse);
  }
  EXPECT_NEAR(nn::ctc_loss(g.constant(z), {}).value()(0, 0), expect, 1e-12);
}

TEST(NnOps, CtcRejectsTooLongTarget) {
  Graph<double> g(false);
  EXPECT_THROW(nn::ctc_loss(g.constant(Mat::Zero(2, 3)), {1, 1}), Error);
  EXPECT_THROW(nn::ctc_loss(g.constant(Mat::Zero(2, 3)), {3}), Error);
}

TEST(NnOps, FrozenParameterGetsNoGradient) {
  Rng rng(1);
  Parameter<double> w("w", random_matrix(2, 2, rng));
  w.frozen = true;
  Graph<double> g;
  const auto loss = nn::sum_all(nn::matmul(g.constant(random_matrix(3, 2, rng)), g.param(w)));
  g.backward(loss);
  EXPECT_EQ(w.grad.norm(), 0.0);
}

TEST(NnLayers, LstmGradients) {
  Rng rng(2);
  nn::Lstm<double> lstm("l", 3, 2, rng);
  nn::ParamList<double> params;
  lstm.collect(params);
  const Mat x = random_matrix(4, 3, rng);
  const Mat wts = random_matrix(4, 2, rng);
  auto entries = nn::check_gradients(params, [&](Graph<double>& g) {
    return nn::sum_all(nn::mul(lstm.run(g, g.constant(x), true), g.constant(wts)));
  });
  EXPECT_LT(testing::max_relative_error(entries), 1e-6);
}

TEST(NnLayers, AttentionGradients) {
  Rng rng(4);
  nn::MultiHeadAttention<double> mha("a", 4, 2, rng);
  nn::ParamList<double> params;
  mha.collect(params);
  const Mat q = random_matrix(2, 4, rng), kv = random_matrix(3, 4, rng);
  const Mat wts = random_matrix(2, 4, rng);
  auto entries = nn::check_gradients(params, [&](Graph<double>& g) {
    const auto k = g.constant(kv);
    return nn::sum_all(nn::mul(mha(g, g.constant(q), k, k), g.constant(wts)));
  });
  EXPECT_LT(testing::max_relative_error(entries), 1e-6);
}

TEST(NnOptim, ZeroLearningRateLeavesParametersBitIdentical) {
  Rng rng(8);
  Parameter<double> w("w", random_matrix(3, 3, rng));
  w.grad = random_matrix(3, 3, rng);
  const Mat before = w.value;
  nn::AdamConfig cfg;
  cfg.lr = 0.0;
  nn::Adam<double> adam(cfg);
  adam.step({&w});
  EXPECT_TRUE((w.value.array() == before.array()).all());
}

TEST(NnOptim, AdamFirstStepMovesBySignTimesLr) {
  Parameter<double> w("w", Mat::Zero(1, 2));
  w.grad << 3.0, -0.5;
  nn::AdamConfig cfg;
  cfg.lr = 0.1;
  nn::Adam<double> adam(cfg);
  adam.step({&w});
  EXPECT_NEAR(w.value(0, 0), -0.1, 1e-6);
  EXPECT_NEAR(w.value(0, 1), 0.1, 1e-6);
}

TEST(NnOptim, ParamsRoundTrip) {
  Rng rng(9);
  Parameter<float> a("a", random_matrix(2, 3, rng).cast<float>());
  Parameter<float> b("b", random_matrix(1, 4, rng).cast<float>());
  std::stringstream ss;
  BinaryWriter w(ss);
  nn::write_params<float>(w, {&a, &b});
  Parameter<float> a2("a", nn::Matrix<float>::Zero(2, 3));
  Parameter<float> b2("b", nn::Matrix<float>::Zero(1, 4));
  BinaryReader r(ss, "params");
  nn::read_params<float>(r, {&a2, &b2});
  EXPECT_TRUE((a.value.array() == a2.value.array()).all());
  EXPECT_TRUE((b.value.array() == b2.value.array()).all());
  std::stringstream again;
  BinaryWriter w2(again);
  nn::write_params<float>(w2, {&a, &b});
  Parameter<float> wrong("a", nn::Matrix<float>::Zero(3, 2));
  BinaryReader r2(again, "params");
  EXPECT_THROW(nn::read_params<float>(r2, {&wrong, &b2}), Error);
}

}  // namespace
}  // namespace mvspoof
