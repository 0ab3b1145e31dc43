#include <gtest/gtest.h>

#include <cmath>

#include "dmca/error.hpp"
#include "dmca/ops.hpp"
#include "dmca/seq_encoder.hpp"
#include "golden.hpp"

namespace dmca {
namespace {

SeqEncoderConfig small_config() {
  SeqEncoderConfig c;
  c.vocab_size = 12;
  c.width = 8;
  c.layers = 2;
  c.heads = 2;
  c.ffn_width = 16;
  c.max_positions = 16;
  c.dropout = 0.0;
  return c;
}

TokenSequence sequence(std::vector<std::size_t> ids, std::size_t padded_length = 0) {
  TokenSequence t;
  t.ids = std::move(ids);
  t.attention_mask.assign(t.ids.size(), 1);
  t.original_length = t.ids.size() - 2;
  while (t.ids.size() < padded_length) {
    t.ids.push_back(kPadId);
    t.attention_mask.push_back(0);
  }
  return t;
}

void fill(Tensor t, const std::vector<double>& values) {
  auto v = t.mutable_values();
  ASSERT_EQ(v.size(), values.size());
  std::copy(values.begin(), values.end(), v.begin());
}

void zero(Tensor t) {
  for (double& v : t.mutable_values()) v = 0.0;
}

TEST(SeqEmbedding, LookupPlusPosition) {
  ParamStore params;
  CounterRng init(1);
  SeqEncoder enc(small_config(), params, init);
  const auto tokens = sequence({kBosId, 7, 7, kEosId});
  const Tensor e = enc.embed(tokens, 4);
  const Tensor& table = params.get("seq.embed");
  const Tensor& pos = params.get("seq.pos");
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(e.at(i, k), table.at(tokens.ids[i], k) + pos.at(i, k));
  }
  // The same token at positions 1 and 2 differs only by the positional term.
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_NEAR(e.at(1, k) - e.at(2, k), pos.at(1, k) - pos.at(2, k), 1e-15);
  }
}

TEST(SeqEmbedding, RejectsOutOfRangeIdsAndLengths) {
  ParamStore params;
  CounterRng init(2);
  SeqEncoder enc(small_config(), params, init);
  EXPECT_THROW(enc.embed(sequence({kBosId, 12, kEosId}), 3), DataError);
  std::vector<std::size_t> long_ids(17, 5);
  EXPECT_THROW(enc.embed(sequence(long_ids), 17), DataError);
  CounterRng rng(0);
  EXPECT_THROW(enc.forward(sequence(long_ids), Mode::Eval, rng), DataError);
}

TEST(SelfAttentionLayer, SingleTokenIsProjectedValue) {
  ParamStore params;
  CounterRng init(3);
  const SelfAttention att = SelfAttention::create(params, "a", 4, 2, init);
  Tensor x({1, 4}, {0.3, -0.2, 1.1, 0.5});
  const std::uint8_t mask[] = {1};
  std::vector<Tensor> weights;
  const Tensor out = att(x, mask, &weights);
  const Tensor expected = att.wo(att.wv(x));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(out[k], expected[k], 1e-14);
  ASSERT_EQ(weights.size(), 2u);
  for (const Tensor& w : weights) EXPECT_EQ(w[0], 1.0);
}

TEST(SelfAttentionLayer, IdenticalKeysGiveUniformWeights) {
  ParamStore params;
  CounterRng init(5);
  const SelfAttention att = SelfAttention::create(params, "a", 4, 1, init);
  Tensor x({3, 4}, {0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4});
  const std::uint8_t mask[] = {1, 1, 1};
  std::vector<Tensor> weights;
  att(x, mask, &weights);
  for (double w : weights.at(0).values()) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
}

TEST(SelfAttentionLayer, ThreeByThreeHandOracle) {
  ParamStore params;
  CounterRng init(6);
  const SelfAttention att = SelfAttention::create(params, "a", 2, 1, init);
  // Identity projections without bias: scores are x x^T / sqrt(2).
  for (const Linear* l : {&att.wq, &att.wk, &att.wv, &att.wo}) {
    fill(l->weight, {1, 0, 0, 1});
    zero(l->bias);
  }
  const std::vector<double> xs = {1, 0, 0, 1, 1, 1};
  const Tensor x({3, 2}, xs);
  const std::uint8_t mask[] = {1, 1, 1};
  std::vector<Tensor> weights;
  const Tensor out = att(x, mask, &weights);
  for (std::size_t i = 0; i < 3; ++i) {
    double s[3], z = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      s[j] = std::exp((xs[2 * i] * xs[2 * j] + xs[2 * i + 1] * xs[2 * j + 1]) / std::sqrt(2.0));
      z += s[j];
    }
    for (std::size_t k = 0; k < 2; ++k) {
      double expected = 0.0;
      for (std::size_t j = 0; j < 3; ++j) expected += s[j] / z * xs[2 * j + k];
      EXPECT_NEAR(out.at(i, k), expected, 1e-14);
    }
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(weights[0].at(i, j), s[j] / z, 1e-15);
  }
}

TEST(SelfAttentionLayer, MaskedKeysGetZeroWeightAndRowsSumToOne) {
  ParamStore params;
  CounterRng init(7);
  const SelfAttention att = SelfAttention::create(params, "a", 4, 2, init);
  CounterRng r(8);
  std::vector<double> xs(20);
  for (double& v : xs) v = r.uniform(-1, 1);
  const std::uint8_t mask[] = {1, 1, 1, 0, 0};
  std::vector<Tensor> weights;
  att(Tensor({5, 4}, xs), mask, &weights);
  for (const Tensor& w : weights) {
    for (std::size_t i = 0; i < 5; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        if (!mask[j]) {
          EXPECT_EQ(w.at(i, j), 0.0);
        }
        sum += w.at(i, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(SeqEncoder, ZeroWeightLayerIsTwoLayerNorms) {
  SeqEncoderConfig cfg = small_config();
  cfg.layers = 1;
  ParamStore params;
  CounterRng init(9);
  SeqEncoder enc(cfg, params, init);
  for (const char* p : {"wq", "wk", "wv", "wo", "ffn1", "ffn2"}) {
    zero(params.get(std::string("seq.layer0.") + p + ".w"));
    zero(params.get(std::string("seq.layer0.") + p + ".b"));
  }
  const auto tokens = sequence({kBosId, 5, 6, 9, kEosId});
  CounterRng rng(0);
  const Tensor out = enc.forward(tokens, Mode::Eval, rng).features;
  const Tensor& g1 = params.get("seq.layer0.ln1.gain");
  const Tensor& b1 = params.get("seq.layer0.ln1.bias");
  const Tensor& g2 = params.get("seq.layer0.ln2.gain");
  const Tensor& b2 = params.get("seq.layer0.ln2.bias");
  const Tensor expected = layer_norm(layer_norm(enc.embed(tokens, 5), g1, b1), g2, b2);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-12);
}

TEST(SeqEncoder, ShapePreservedAndDeterministic) {
  ParamStore params;
  CounterRng init(10);
  SeqEncoder enc(small_config(), params, init);
  const auto tokens = sequence({kBosId, 5, 6, 9, 4, kEosId}, 10);
  CounterRng r1(0), r2(99);
  const auto a = enc.forward(tokens, Mode::Eval, r1), b = enc.forward(tokens, Mode::Eval, r2);
  EXPECT_EQ(a.features.shape(), (Shape{6, 8}));
  EXPECT_EQ(a.mask, (std::vector<std::uint8_t>(6, 1)));
  for (std::size_t i = 0; i < a.features.size(); ++i) EXPECT_EQ(a.features[i], b.features[i]);
}

TEST(SeqEncoder, MaskedPaddingMatchesTrimmedPrefix) {
  ParamStore params;
  CounterRng init(11);
  SeqEncoder enc(small_config(), params, init);
  CounterRng rng(0);
  const auto trimmed = enc.forward(sequence({kBosId, 5, 6, 9, kEosId}), Mode::Eval, rng).features;
  for (std::size_t padded : {5u, 8u, 16u}) {
    const auto full = enc.forward(sequence({kBosId, 5, 6, 9, kEosId}, padded), Mode::Eval, rng, false);
    ASSERT_EQ(full.features.rows(), padded);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(full.features.at(i, k), trimmed.at(i, k), 1e-10);
    }
  }
}

TEST(SeqEncoder, PadIdsCannotLeakIntoContent) {
  ParamStore params;
  CounterRng init(12);
  SeqEncoder enc(small_config(), params, init);
  auto tokens = sequence({kBosId, 5, 6, kEosId}, 8);
  CounterRng rng(0);
  const Tensor a = enc.forward(tokens, Mode::Eval, rng, false).features;
  for (std::size_t i = 4; i < 8; ++i) tokens.ids[i] = 7 + i % 3;
  const Tensor b = enc.forward(tokens, Mode::Eval, rng, false).features;
  for (std::size_t i = 0; i < 4 * 8; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(SeqEncoder, AttentionWeightsRespectMask) {
  ParamStore params;
  CounterRng init(13);
  SeqEncoder enc(small_config(), params, init);
  CounterRng rng(0);
  std::vector<Tensor> weights;
  enc.forward(sequence({kBosId, 5, 6, kEosId}, 7), Mode::Eval, rng, false, &weights);
  ASSERT_EQ(weights.size(), 4u);  // 2 layers x 2 heads
  for (const Tensor& w : weights) {
    for (std::size_t i = 0; i < 7; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        if (j >= 4) {
          EXPECT_EQ(w.at(i, j), 0.0);
        }
        sum += w.at(i, j);
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(SeqEncoder, TrainModeDropoutIsSeeded) {
  SeqEncoderConfig cfg = small_config();
  cfg.dropout = 0.3;
  ParamStore params;
  CounterRng init(14);
  SeqEncoder enc(cfg, params, init);
  const auto tokens = sequence({kBosId, 5, 6, 9, kEosId});
  CounterRng r1(5), r2(5), r3(6), r4(0);
  const Tensor a = enc.forward(tokens, Mode::Train, r1).features;
  const Tensor b = enc.forward(tokens, Mode::Train, r2).features;
  const Tensor c = enc.forward(tokens, Mode::Train, r3).features;
  const Tensor e = enc.forward(tokens, Mode::Eval, r4).features;
  bool differs = false, differs_eval = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    differs |= a[i] != c[i];
    differs_eval |= a[i] != e[i];
  }
  EXPECT_TRUE(differs);
  EXPECT_TRUE(differs_eval);
}

TEST(SeqEncoder, RejectsBadConfigAndInput) {
  ParamStore params;
  CounterRng init(15);
  SeqEncoderConfig cfg = small_config();
  cfg.width = 9;
  EXPECT_THROW(SeqEncoder(cfg, params, init), ConfigError);
  cfg = small_config();
  cfg.vocab_size = 3;
  ParamStore p2;
  EXPECT_THROW(SeqEncoder(cfg, p2, init), ConfigError);
  ParamStore p3;
  SeqEncoder enc(small_config(), p3, init);
  CounterRng rng(0);
  TokenSequence empty;
  EXPECT_THROW(enc.forward(empty, Mode::Eval, rng), DataError);
}

TEST(SeqEncoder, DefaultParameterShapes) {
  ParamStore params;
  CounterRng init(16);
  SeqEncoder enc(SeqEncoderConfig{}, params, init);
  EXPECT_EQ(params.get("seq.embed").shape(), (Shape{767, 64}));
  EXPECT_EQ(params.get("seq.pos").shape(), (Shape{512, 64}));
  EXPECT_EQ(params.get("seq.layer1.ffn1.w").shape(), (Shape{64, 128}));
  EXPECT_FALSE(params.contains("seq.layer2.wq.w"));
}

TEST(SeqEncoder, FourTokenGolden) {
  SeqEncoderConfig cfg = small_config();
  ParamStore params;
  CounterRng init(2024);
  SeqEncoder enc(cfg, params, init);
  CounterRng rng(0);
  testing::expect_golden("seq_encoder_4_tokens", enc.forward(sequence({kBosId, 5, 8, kEosId}), Mode::Eval, rng).features);
}

}  // namespace
}  // namespace dmca
