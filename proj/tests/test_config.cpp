// tests/test_config.cpp

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

#include <fstream>

#include "mvspoof/config.hpp"
#include "test_util.hpp"

namespace mvspoof {
namespace {

using nlohmann::json;
using testing::TempDir;

TEST(RunConfig, DefaultValues) {
  const RunConfig c = parse_run_config(json::object());
  EXPECT_EQ(c.trainer.lr, 5e-5);
  EXPECT_EQ(c.trainer.batch_size, 32);
  EXPECT_EQ(c.trainer.epochs, 200);
  EXPECT_EQ(c.trainer.fixed_frames, 500);
  EXPECT_EQ(c.detector.n_frames, 500);
  EXPECT_EQ(c.fusion.d_model, 128);
  EXPECT_EQ(c.fusion.n_heads, 8);
  EXPECT_EQ(c.fusion.n_blocks, 6);
  EXPECT_EQ(c.fusion.mode, FusionMode::kAttention);
  EXPECT_EQ(c.fusion.views.size(), 3u);
  EXPECT_EQ(c.duration.vocabulary, 100);
  EXPECT_EQ(c.fusion.duration_vocab, 100);
  EXPECT_EQ(c.pron.d_model, 144);
  EXPECT_EQ(c.fusion.pron_dim, 144);
  EXPECT_EQ(c.encoders.w2v_dim, 1024);
  EXPECT_EQ(c.pron.vocab, c.corpus.n_pseudo_phonemes + 1);
  EXPECT_EQ(c.corpus.real_duration_jitter, 0.5);
  EXPECT_EQ(c.corpus.fake_duration_jitter, 0.05);
}

TEST(RunConfig, SeedFansOutByFixedOffsets) {
  const RunConfig c = parse_run_config(json{{"seed", 7}});
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.corpus.seed, 7u);
  EXPECT_EQ(c.encoders.w2v_seed, 107u);
  EXPECT_EQ(c.encoders.hubert_seed, 207u);
  EXPECT_EQ(c.duration.seed, 307u);
  EXPECT_EQ(c.pron_train.seed, 407u);
  EXPECT_EQ(c.trainer.seed, 507u);

  const RunConfig o = parse_run_config(json{{"seed", 7}}, 3);
  EXPECT_EQ(o.seed, 3u);
  EXPECT_EQ(o.trainer.seed, 503u);

  // An explicit component seed wins over the derived one.
  const RunConfig e = parse_run_config(json{{"seed", 7}, {"trainer", {{"seed", 42}}}});
  EXPECT_EQ(e.trainer.seed, 42u);
  EXPECT_EQ(e.corpus.seed, 7u);
}

TEST(RunConfig, DependentSizesFollowTheirSource) {
  const RunConfig c = parse_run_config(json{{"duration", {{"vocabulary", 20}}},
                                            {"pron", {{"d_model", 32}, {"n_heads", 4}}},
                                            {"corpus", {{"n_pseudo_phonemes", 9}}},
                                            {"trainer", {{"fixed_frames", 64}}}});
  EXPECT_EQ(c.fusion.duration_vocab, 20);
  EXPECT_EQ(c.fusion.pron_dim, 32);
  EXPECT_EQ(c.pron.vocab, 10);
  EXPECT_EQ(c.detector.n_frames, 64);
}

TEST(RunConfig, RejectsUnknownKeys) {
  EXPECT_THROW(parse_run_config(json{{"sed", 1}}), Error);
  EXPECT_THROW(parse_run_config(json{{"trainer", {{"learning_rate", 1e-3}}}}), Error);
  EXPECT_THROW(parse_run_config(json{{"fusion", {{"views", {"w2v", "mfcc"}}}}}), Error);
  EXPECT_THROW(parse_run_config(json{{"artifacts", {{"model", "x"}}}}), Error);
  try {
    parse_run_config(json{{"detector", {{"blstm_hiden", 3}}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("blstm_hiden"), std::string::npos);
  }
}

TEST(RunConfig, RejectsBadValues) {
  EXPECT_THROW(parse_run_config(json{{"trainer", {{"lr", "fast"}}}}), Error);
  EXPECT_THROW(parse_run_config(json{{"trainer", {{"batch_size", 0}}}}), Error);
  EXPECT_THROW(parse_run_config(json{{"fusion", {{"n_heads", 5}}}}), Error);
  EXPECT_THROW(parse_run_config(json{{"corpus", {{"real_duration_jitter", 0.01}}}}), Error);
  EXPECT_THROW(parse_run_config(json{{"jobs", 0}}), Error);
  EXPECT_THROW(parse_run_config(json{{"trainer", {{"fixed_frames", 64}}},
                                     {"detector", {{"n_frames", 32}}}}),
               Error);
  EXPECT_THROW(parse_run_config(json{{"fusion", {{"pron_dim", 10}}}}), Error);
  EXPECT_THROW(parse_run_config(json::array()), Error);
}

TEST(RunConfig, ResolvedJsonRoundTrips) {
  const RunConfig c = parse_run_config(json{{"seed", 11},
                                            {"fusion", {{"mode", "concat"}, {"n_blocks", 2}}},
                                            {"corpus", {{"template_seed", 99}}},
                                            {"pron", {{"train", {{"epochs", 3}}}}}});
  const json j = run_config_json(c);
  for (const char* k : {"seed", "corpus", "encoders", "duration", "pron", "fusion", "detector",
                        "trainer", "artifacts", "jobs"})
    EXPECT_TRUE(j.contains(k)) << k;
  const RunConfig back = parse_run_config(j);
  EXPECT_EQ(run_config_json(back), j);
  EXPECT_EQ(back.fusion.mode, FusionMode::kConcat);
  EXPECT_EQ(back.pron_train.epochs, 3);
  ASSERT_TRUE(back.corpus.template_seed.has_value());
  EXPECT_EQ(*back.corpus.template_seed, 99u);
}

TEST(RunConfig, LoadsFilesWithComments) {
  TempDir dir("cfg");
  {
    std::ofstream os(dir / "run.json");
    os << "{\n  // tiny run\n  \"seed\": 4,\n  \"trainer\": {\"epochs\": 2}\n}\n";
  }
  const RunConfig c = load_run_config(dir / "run.json");
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.trainer.epochs, 2);
  {
    std::ofstream os(dir / "bad.json");
    os << "{ \"seed\": ";
  }
  EXPECT_THROW(load_run_config(dir / "bad.json"), Error);
  EXPECT_THROW(load_run_config(dir / "missing.json"), Error);
}

}  // namespace
}  // namespace mvspoof
